#pragma once

// Construction of the Schwarz P surface in T^3(a), its pullback to T^3(1) and
// its quotient by a crystallographic group, plus geometric diagnostics.

#include "twistedp/periodic_mesh.hpp"
#include "twistedp/torus_crystal.hpp"

#include <functional>
#include <string>
#include <vector>

namespace twistedp {

/// cos(2 pi x/a) + cos(2 pi y/a) + cos(2 pi z/a)
double schwarz_p_level(const Vec3& p, double a);

/// Triangulates the zero set of the P level function on a periodic n^3 grid.
///
/// The grid is placed so that it is invariant under the full order-96 symmetry
/// group and contains no point fixed by a side-swapping symmetry; cells are
/// polygonised face by face (asymptotic decider on ambiguous faces) and polygons
/// with more than three corners are fanned from their centroid. The returned mesh
/// carries the exact vertex permutations of the symmetry group. Requires n even,
/// n >= 16.
PeriodicMesh seed_p_surface(Side side, int n);

struct RelaxOptions {
    double tol = 1e-3;          // bound on max |H| * mean edge length
    int max_iter = 2000;
    double initial_step = 0.0;  // 0 selects a step from the mean edge length
    bool snap = true;
};

struct RelaxLog {
    std::vector<double> areas;
    std::vector<double> residuals;   // curvature_residual per accepted iterate
    int iterations = 0;
    int rejected_steps = 0;
    bool converged = false;
};

/// Orbit-averages vertex positions over the mesh's symmetry table.
void snap_to_symmetry(PeriodicMesh& mesh);

double total_area(const PeriodicMesh& mesh);
/// max |H| over vertices, H the normal component of the discrete mean-curvature vector.
double max_mean_curvature(const PeriodicMesh& mesh, const MeshGeometry& geo);
/// max |H| * mean edge length.
double curvature_residual(const PeriodicMesh& mesh);

/// Semi-implicit mean-curvature relaxation with symmetry snapping; accepted steps
/// never increase area. Throws no_convergence or degenerate_triangle.
PeriodicMesh minimize_area(const PeriodicMesh& mesh, const RelaxOptions& options = {}, RelaxLog* log = nullptr);

/// Eight translated copies glued into a mesh of T^3(1). Requires side 1/2.
PeriodicMesh pullback_mesh(const PeriodicMesh& mesh);

struct QuotientResult {
    PeriodicMesh mesh;
    std::vector<int> orbit_of_vertex;     // source vertex -> quotient vertex
    std::vector<int> representative;      // quotient vertex -> source vertex
    double singular_margin = 0;           // min distance from the source vertices to the singular set
};

struct GroupActionOnMesh;

/// Quotient by a group acting freely; vertices are orbits of size |G|.
QuotientResult quotient_mesh(const PeriodicMesh& mesh, const CrystalGroup& group);
QuotientResult quotient_mesh(const PeriodicMesh& mesh, const GroupActionOnMesh& action);

struct StraightLine {
    std::vector<int> vertices;   // closed chain
    Vec3 point = Vec3::Zero();   // a lifted point on the line
    Vec3 direction = Vec3::Zero();
    int normal_axis = -1;        // coordinate axis perpendicular to the line, or -1
    double height = 0;           // coordinate along normal_axis, wrapped into [0, a)
    double length = 0;
    double residual = 0;         // max distance of chain vertices to the fitted line
};

/// Closed chains of collinear edges (closing up modulo the lattice).
std::vector<StraightLine> detect_lines(const PeriodicMesh& mesh, double tol = 1e-9);

struct GaussData {
    std::vector<Vec3> normals;
    Eigen::VectorXd angle_defects;
    double total_curvature = 0;
    double degree = 0;
    std::vector<Vec3> branch_directions;      // the eight (+-1,+-1,+-1)/sqrt 3
    std::vector<int> branch_vertices;         // closest flat vertex per direction
    std::vector<double> branch_angles;        // normal deviation at that vertex
};

GaussData gauss_data(const PeriodicMesh& mesh);

struct CatenoidResult {
    MeshWithBoundary annulus;
    Topology topology;
    std::vector<double> square_sides;          // per loop, mean of the four sides
    std::vector<double> loop_heights;
    Vec3 loop_offset = Vec3::Zero();           // translation from lower to upper loop
    double complement_deviation = 0;           // Hausdorff(Cat + a/2 (1,1,1), Sigma \ Cat)
};

/// The part of the surface between the straight lines at heights -a/4 and a/4.
CatenoidResult extract_catenoid(const PeriodicMesh& mesh);

/// Vertex-sampled symmetric Hausdorff distance between a mesh and its image under
/// an affine motion of the ambient space.
double set_deviation(const PeriodicMesh& mesh, const std::function<Vec3(const Vec3&)>& motion);

/// Deviation for each element of the group.
std::vector<double> verify_mesh_symmetry(const PeriodicMesh& mesh, const CrystalGroup& group);

} // namespace twistedp
