#pragma once

// Oriented triangle meshes embedded in a flat torus T^3(a) or in an orbifold
// quotient T^3(a)/G. Vertices are stored as free lifts in R^3; every face corner
// carries the rigid motion that carries its vertex lift to the position used by
// that face. For torus meshes the motion is a lattice translation, so the
// half-edge "shift" of corner c -> c+1 is lattice[c+1] - lattice[c].

#include "twistedp/torus_crystal.hpp"

#include <Eigen/Core>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace twistedp {

enum class Ambient { torus, orbifold };

const char* to_string(Ambient ambient);

struct CornerLift {
    int element = 0;            // index into PeriodicMesh::deck
    IVec3 lattice{0, 0, 0};     // translation in multiples of the side

    friend bool operator==(const CornerLift&, const CornerLift&) = default;
};

/// Exact vertex permutations of a mesh under a symmetry group. For pulled-back
/// meshes the table describes the base mesh and `sheets` copies are laid out as
/// vertex = sheet * base_vertices + base_vertex.
struct SymmetryTable {
    CrystalGroup group;
    std::vector<std::vector<int>> perms;
    int base_vertices = 0;
    int sheets = 1;
};

using Face = std::array<int, 3>;

struct PeriodicMesh {
    std::string id;
    Side side = kHalfSide;
    Ambient ambient = Ambient::torus;
    std::vector<AffineIsometry> deck;   // deck[0] is the identity
    std::vector<Vec3> positions;
    std::vector<Face> faces;
    std::vector<std::array<CornerLift, 3>> lifts;
    std::shared_ptr<const SymmetryTable> symmetry;

    int vertex_count() const { return static_cast<int>(positions.size()); }
    int face_count() const { return static_cast<int>(faces.size()); }
    bool empty() const { return faces.empty(); }

    /// Position of corner c of face f in the face's own lift.
    Vec3 corner(int f, int c) const;
    std::array<Vec3, 3> triangle(int f) const;

    /// Lattice shift of the half-edge leaving corner c of face f (torus meshes).
    IVec3 half_edge_shift(int f, int c) const;
};

/// Plain torus mesh skeleton with identity deck.
PeriodicMesh make_torus_mesh(std::string id, Side side, std::vector<Vec3> positions, std::vector<Face> faces,
                             std::vector<std::array<CornerLift, 3>> lifts = {});

struct MeshWithBoundary {
    PeriodicMesh mesh;
    std::vector<std::vector<int>> loops;   // ordered boundary vertex loops

    std::vector<bool> boundary_mask() const;
};

/// Half-edge connectivity: half-edge 3f+c runs from corner c to corner c+1 of face f.
struct HalfEdges {
    std::vector<int> origin;
    std::vector<int> twin;   // -1 on the boundary
    std::vector<int> next;
    std::vector<int> face;

    int size() const { return static_cast<int>(origin.size()); }
    int dest(int h) const { return origin[next[h]]; }
};

/// Builds connectivity; throws non_manifold if an edge has more than two faces or
/// two faces traverse it in the same direction.
HalfEdges build_half_edges(const PeriodicMesh& mesh);

/// Checks that twin half-edges carry opposite shifts (torus) or consistent
/// transition motions (orbifold). Returns the number of inconsistent twins.
int lift_consistency_violations(const PeriodicMesh& mesh, const HalfEdges& he);

struct Topology {
    int vertices = 0;
    int edges = 0;
    int faces = 0;
    int euler = 0;
    int genus = 0;
    int components = 0;
    int boundary_loops = 0;
    bool orientable = true;
};

/// Euler characteristic and genus; throws non_manifold on bad vertex links.
Topology topology(const PeriodicMesh& mesh);

/// Ordered boundary loops of an open mesh.
std::vector<std::vector<int>> boundary_loops(const PeriodicMesh& mesh, const HalfEdges& he);

// ---------------------------------------------------------------------------
// Discrete differential geometry

struct MeshGeometry {
    Eigen::VectorXd face_area;
    Eigen::MatrixXd corner_angle;     // F x 3
    Eigen::MatrixXd corner_cot;       // F x 3, cotangent of the angle at each corner
    Eigen::VectorXd vertex_area;      // mixed Voronoi area
    Eigen::VectorXd angle_sum;
    double total_area = 0;
};

MeshGeometry compute_geometry(const PeriodicMesh& mesh);

/// Angle defect 2 pi - angle sum at each vertex (meaningful at interior vertices).
Eigen::VectorXd angle_defects(const PeriodicMesh& mesh, const MeshGeometry& geo);

/// Area-weighted unit vertex normals in the vertex's own lift.
std::vector<Vec3> vertex_normals(const PeriodicMesh& mesh);

/// Discrete mean-curvature vectors (1/2) Delta x, with Delta the cotangent Laplacian
/// divided by the mixed area.
std::vector<Vec3> mean_curvature_vectors(const PeriodicMesh& mesh, const MeshGeometry& geo);

double mean_edge_length(const PeriodicMesh& mesh);

/// Corner motion of vertex v for face f corner c, as an affine map of R^3.
Vec3 apply_corner(const PeriodicMesh& mesh, const CornerLift& lift, const Vec3& p);

} // namespace twistedp
