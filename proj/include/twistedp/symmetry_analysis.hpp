#pragma once

// Group actions on vertex functions: Reynolds projection, the odd/even
// splitting of I222-invariant functions under Immm, equivariant spectra and the
// axial symmetries of the straight lines.

#include "twistedp/group_action.hpp"
#include "twistedp/jacobi_spectrum.hpp"
#include "twistedp/surface_gen.hpp"

#include <string>
#include <vector>

namespace twistedp {

struct FunctionOnMesh {
    std::string mesh_id;
    Eigen::VectorXd values;
};

/// (u o g)(v) = u(perm[v]).
Eigen::VectorXd compose_with(const Eigen::VectorXd& u, const std::vector<int>& perm);

/// Group average; the result is invariant under every permutation of the action.
FunctionOnMesh reynolds_project(const FunctionOnMesh& u, const GroupActionOnMesh& action);

/// Largest |u o g - u| over the action, relative to max |u|.
double invariance_residual(const Eigen::VectorXd& u, const GroupActionOnMesh& action);

struct OddEvenSplit {
    FunctionOnMesh odd;
    FunctionOnMesh even;
    double odd_residual = 0;    // max |u_odd o s + u_odd| over orientation-reversing s
    double even_residual = 0;   // invariance residual of u_even under the full group
};

/// u = u_odd + u_even for I222-invariant u. Throws not_invariant when u is not
/// invariant under `sub` within `tol` (relative).
OddEvenSplit odd_even_split(const FunctionOnMesh& u, const GroupActionOnMesh& sub, const GroupActionOnMesh& full,
                            double tol = 1e-8);

struct EquivariantReport {
    SpectrumReport report;        // eigenvectors lifted to the full mesh
    std::string group;
    int subspace_dim = 0;
    std::vector<int> orbit_of_vertex;
};

/// Spectrum of the Jacobi operator restricted to functions invariant under the action.
EquivariantReport equivariant_spectrum(const PeriodicMesh& mesh, const GroupActionOnMesh& action, int k,
                                       EigenMethod method = EigenMethod::automatic);

/// Half-turn about a straight line contained in a torus mesh, as a rigid motion
/// of that torus. Throws when the line is not a symmetry axis of the lattice.
AffineIsometry axial_symmetry(const StraightLine& line, Side side);

struct LineCheck {
    int line = 0;
    int normal_axis = -1;
    double height = 0;
    double anti_invariant = 0;   // M-norm of (u - u o r)/2 relative to the M-norm of u
    double trace = 0;            // max |u| on the line relative to max |u|
};

struct EigenfunctionLineChecks {
    int eigen_index = 0;
    double eigenvalue = 0;
    std::vector<LineCheck> lines;
    bool vanishing_pattern = false;   // zero trace on horizontal lines at both heights 1/8 and 3/8
};

struct AxialLineReport {
    std::vector<EigenfunctionLineChecks> functions;
    bool translation_composition = false;   // r_L o r_{L + (0,0,1/4)} acts as the translation (0,0,1/2)
    int lines = 0;
};

/// Diagnostics of the eigenfunctions 0..count-1 of a quotient spectrum, lifted
/// to the cover, against the half-turns about the cover's straight lines.
AxialLineReport axial_line_invariance_check(const SpectrumReport& quotient_report, const QuotientResult& quotient,
                                            const PeriodicMesh& cover, const std::vector<StraightLine>& lines,
                                            int count = 2, double tol = 1e-6);

} // namespace twistedp
