#pragma once

// Discrete Jacobi operator L = Delta + Ric(N) + |A|^2 of a minimal surface in a
// flat ambient space, its closed and Dirichlet spectra, index and nullity.

#include "twistedp/eigensolvers.hpp"
#include "twistedp/periodic_mesh.hpp"

#include <string>
#include <vector>

namespace twistedp {

/// Q(u, v) = u^T (S - P) v, mass M.
struct OperatorTriple {
    SparseMatrix S;            // cotangent stiffness
    Eigen::VectorXd P;         // diagonal of the potential: area-integrated |A|^2 + Ric(N)
    Eigen::VectorXd M;         // lumped mixed-Voronoi mass
    Eigen::VectorXd K;         // Gaussian curvature per vertex (defect / area)
    double ricci = 0;          // Ric(N), zero in flat ambients

    int size() const { return static_cast<int>(M.size()); }
    SparseMatrix jacobi() const;   // S - diag(P)
};

/// Throws non_finite on degenerate input.
OperatorTriple assemble(const PeriodicMesh& mesh);

double index_form(const OperatorTriple& ops, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

enum class ProblemKind { closed, dirichlet };

const char* to_string(ProblemKind kind);

struct SpectrumReport {
    std::string surface_id;
    int resolution = 0;
    ProblemKind kind = ProblemKind::closed;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd eigenvectors;         // mass-orthonormal, one column per eigenvalue
    std::vector<int> interior;            // Dirichlet problems: mesh vertex of each unknown
    EigenMethod method = EigenMethod::dense;
    double max_residual = 0;
    double rayleigh_defect = 0;           // max |u^T(S-P)u - lambda u^T M u| / u^T M u
    bool ground_sign_definite = false;

    // filled by index_nullity
    int index = -1;
    int nullity = -1;
    double delta = 0;
    double refinement_error = -1;         // negative when unknown
    bool ambiguous = false;
    std::vector<std::string> trace;

    double kernel_match_angle = -1;       // negative when not computed
};

/// Lowest k eigenpairs of (S - P) u = lambda M u; k >= 5.
SpectrumReport spectrum(const PeriodicMesh& mesh, int k, EigenMethod method = EigenMethod::automatic);
SpectrumReport spectrum(const OperatorTriple& ops, int k, std::string surface_id,
                        EigenMethod method = EigenMethod::automatic);

/// Dirichlet problem on the interior vertices of a mesh with boundary.
SpectrumReport dirichlet_spectrum(const MeshWithBoundary& domain, int k, EigenMethod method = EigenMethod::automatic);

struct ZeroPolicy {
    double factor = 3;            // delta = max(factor * e, floor)
    double relative_floor = 1e-6; // floor = relative_floor * |lambda_0|
};

struct IndexNullity {
    int index = 0;
    int nullity = 0;
    bool ambiguous = false;
};

/// Classifies eigenvalues with delta derived from the refinement error `e`.
/// Records delta, the decision trace and the ambiguity flag in the report.
IndexNullity index_nullity(SpectrumReport& report, double refinement_error, const ZeroPolicy& policy = {});

/// Refinement error between the same surface at two resolutions: the largest
/// difference among the first `count` eigenvalues (all common ones when count <= 0).
double refinement_error(const SpectrumReport& coarse, const SpectrumReport& fine, int count = 0);

/// Largest principal angle between the report's null space and the span of the
/// vertex normal coordinates. Throws invalid_argument when nullity is zero.
double kernel_match(SpectrumReport& report, const PeriodicMesh& mesh);

/// Largest principal angle between two subspaces in the inner product diag(mass).
double principal_angle(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W, const Eigen::VectorXd& mass);

} // namespace twistedp
