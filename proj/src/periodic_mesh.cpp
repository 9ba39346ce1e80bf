#include "twistedp/periodic_mesh.hpp"

#include "twistedp/error.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numeric>
#include <unordered_map>

namespace twistedp {

const char* to_string(Ambient ambient)
{
    return ambient == Ambient::torus ? "torus" : "orbifold";
}

Vec3 apply_corner(const PeriodicMesh& mesh, const CornerLift& lift, const Vec3& p)
{
    const Vec3 q = lift.element == 0 ? p : mesh.deck[lift.element].apply(p);
    return q + mesh.side.value() * Vec3(lift.lattice[0], lift.lattice[1], lift.lattice[2]);
}

Vec3 PeriodicMesh::corner(int f, int c) const
{
    return apply_corner(*this, lifts[f][c], positions[faces[f][c]]);
}

std::array<Vec3, 3> PeriodicMesh::triangle(int f) const
{
    return {corner(f, 0), corner(f, 1), corner(f, 2)};
}

IVec3 PeriodicMesh::half_edge_shift(int f, int c) const
{
    const IVec3& a = lifts[f][c].lattice;
    const IVec3& b = lifts[f][(c + 1) % 3].lattice;
    return {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
}

PeriodicMesh make_torus_mesh(std::string id, Side side, std::vector<Vec3> positions, std::vector<Face> faces,
                             std::vector<std::array<CornerLift, 3>> lifts)
{
    PeriodicMesh m;
    m.id = std::move(id);
    m.side = side;
    m.ambient = Ambient::torus;
    m.deck = {AffineIsometry::identity(side)};
    m.positions = std::move(positions);
    m.faces = std::move(faces);
    m.lifts = lifts.empty() ? std::vector<std::array<CornerLift, 3>>(m.faces.size()) : std::move(lifts);
    if (m.lifts.size() != m.faces.size()) {
        throw Error(ErrorKind::dimension_mismatch, "one lift triple per face is required");
    }
    return m;
}

std::vector<bool> MeshWithBoundary::boundary_mask() const
{
    std::vector<bool> mask(mesh.positions.size(), false);
    for (const auto& loop : loops) {
        for (int v : loop) {
            mask[v] = true;
        }
    }
    return mask;
}

HalfEdges build_half_edges(const PeriodicMesh& mesh)
{
    const int F = mesh.face_count();
    const long V = mesh.vertex_count();
    HalfEdges he;
    he.origin.resize(3 * F);
    he.twin.assign(3 * F, -1);
    he.next.resize(3 * F);
    he.face.resize(3 * F);
    std::unordered_map<long, int> directed;
    directed.reserve(3 * F);
    for (int f = 0; f < F; ++f) {
        for (int c = 0; c < 3; ++c) {
            const int h = 3 * f + c;
            const int o = mesh.faces[f][c];
            const int d = mesh.faces[f][(c + 1) % 3];
            if (o < 0 || o >= V || d < 0 || d >= V || o == d) {
                throw Error(ErrorKind::non_manifold, "face " + std::to_string(f) + " has invalid vertex indices");
            }
            he.origin[h] = o;
            he.next[h] = 3 * f + (c + 1) % 3;
            he.face[h] = f;
            if (!directed.emplace(o * V + d, h).second) {
                throw Error(ErrorKind::non_manifold,
                            "directed edge " + std::to_string(o) + "->" + std::to_string(d) + " used twice");
            }
        }
    }
    for (int h = 0; h < 3 * F; ++h) {
        const long key = static_cast<long>(he.dest(h)) * V + he.origin[h];
        const auto it = directed.find(key);
        if (it != directed.end()) {
            he.twin[h] = it->second;
        }
    }
    return he;
}

namespace {

struct Affine {
    SignedPerm R;
    IVec3 t{0, 0, 0}; // units of side/64, not wrapped
};

Affine corner_affine(const PeriodicMesh& mesh, const CornerLift& lift)
{
    const AffineIsometry& g = mesh.deck[lift.element];
    Affine a;
    a.R = g.linear();
    for (int i = 0; i < 3; ++i) {
        a.t[i] = g.shift_units()[i] + kUnits * lift.lattice[i];
    }
    return a;
}

Affine compose_affine(const Affine& a, const Affine& b)
{
    Affine c;
    c.R = a.R * b.R;
    const IVec3 rb = a.R.apply(b.t);
    for (int i = 0; i < 3; ++i) {
        c.t[i] = rb[i] + a.t[i];
    }
    return c;
}

Affine inverse_affine(const Affine& a)
{
    Affine inv;
    inv.R = a.R.inverse();
    const IVec3 rt = inv.R.apply(a.t);
    inv.t = {-rt[0], -rt[1], -rt[2]};
    return inv;
}

} // namespace

int lift_consistency_violations(const PeriodicMesh& mesh, const HalfEdges& he)
{
    int bad = 0;
    for (int h = 0; h < he.size(); ++h) {
        const int t = he.twin[h];
        if (t < 0 || t < h) {
            continue;
        }
        const int f = he.face[h];
        const int g = he.face[t];
        const int c0 = h % 3;
        const int c1 = (c0 + 1) % 3;
        const int d0 = t % 3;
        const int d1 = (d0 + 1) % 3;
        // h: origin corner c0 (vertex u) -> c1 (vertex w); twin: d0 (w) -> d1 (u)
        const Affine a = compose_affine(corner_affine(mesh, mesh.lifts[f][c0]),
                                        inverse_affine(corner_affine(mesh, mesh.lifts[g][d1])));
        const Affine b = compose_affine(corner_affine(mesh, mesh.lifts[f][c1]),
                                        inverse_affine(corner_affine(mesh, mesh.lifts[g][d0])));
        if (!(a.R == b.R) || a.t != b.t) {
            ++bad;
        }
    }
    return bad;
}

Topology topology(const PeriodicMesh& mesh)
{
    const HalfEdges he = build_half_edges(mesh);
    Topology topo;
    topo.vertices = mesh.vertex_count();
    topo.faces = mesh.face_count();
    int boundary_half_edges = 0;
    int interior_half_edges = 0;
    for (int h = 0; h < he.size(); ++h) {
        if (he.twin[h] < 0) {
            ++boundary_half_edges;
        } else {
            ++interior_half_edges;
        }
    }
    topo.edges = interior_half_edges / 2 + boundary_half_edges;
    topo.euler = topo.vertices - topo.edges + topo.faces;

    // vertex links: each vertex must have exactly one fan of incident faces
    std::vector<std::vector<int>> outgoing(mesh.vertex_count());
    for (int h = 0; h < he.size(); ++h) {
        outgoing[he.origin[h]].push_back(h);
    }
    std::vector<char> seen(he.size(), 0);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (outgoing[v].empty()) {
            throw Error(ErrorKind::non_manifold, "isolated vertex " + std::to_string(v));
        }
        const int start = outgoing[v].front();
        int fans = 0;
        for (int s : outgoing[v]) {
            if (seen[s]) {
                continue;
            }
            ++fans;
            // forward rotation: twin(prev(h))
            int h = s;
            while (h >= 0 && !seen[h]) {
                seen[h] = 1;
                const int prev = he.next[he.next[h]];
                h = he.twin[prev];
            }
            // backward rotation: next(twin(h))
            h = s;
            while (he.twin[h] >= 0) {
                h = he.next[he.twin[h]];
                if (seen[h]) {
                    break;
                }
                seen[h] = 1;
            }
        }
        (void)start;
        if (fans != 1) {
            throw Error(ErrorKind::non_manifold, "vertex " + std::to_string(v) + " has a pinched link");
        }
    }

    // components via faces
    std::vector<int> parent(mesh.face_count());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int h = 0; h < he.size(); ++h) {
        if (he.twin[h] >= 0) {
            parent[find(he.face[h])] = find(he.face[he.twin[h]]);
        }
    }
    for (int f = 0; f < mesh.face_count(); ++f) {
        topo.components += find(f) == f ? 1 : 0;
    }
    topo.boundary_loops = static_cast<int>(boundary_loops(mesh, he).size());
    const int twice_genus = 2 * topo.components - topo.boundary_loops - topo.euler;
    topo.genus = twice_genus / 2;
    topo.orientable = true;
    return topo;
}

std::vector<std::vector<int>> boundary_loops(const PeriodicMesh& mesh, const HalfEdges& he)
{
    std::unordered_map<int, int> boundary_from;
    for (int h = 0; h < he.size(); ++h) {
        if (he.twin[h] < 0) {
            if (!boundary_from.emplace(he.origin[h], h).second) {
                throw Error(ErrorKind::non_manifold, "vertex with two outgoing boundary edges");
            }
        }
    }
    std::vector<std::vector<int>> loops;
    std::vector<char> used(he.size(), 0);
    for (int h = 0; h < he.size(); ++h) {
        if (he.twin[h] >= 0 || used[h]) {
            continue;
        }
        std::vector<int> loop;
        int cur = h;
        while (!used[cur]) {
            used[cur] = 1;
            loop.push_back(he.origin[cur]);
            const auto it = boundary_from.find(he.dest(cur));
            if (it == boundary_from.end()) {
                throw Error(ErrorKind::non_manifold, "open boundary chain");
            }
            cur = it->second;
        }
        loops.push_back(std::move(loop));
    }
    (void)mesh;
    return loops;
}

// ---------------------------------------------------------------------------
// Geometry

MeshGeometry compute_geometry(const PeriodicMesh& mesh)
{
    const int F = mesh.face_count();
    MeshGeometry geo;
    geo.face_area.resize(F);
    geo.corner_angle.resize(F, 3);
    geo.corner_cot.resize(F, 3);
    geo.vertex_area = Eigen::VectorXd::Zero(mesh.vertex_count());
    geo.angle_sum = Eigen::VectorXd::Zero(mesh.vertex_count());
    for (int f = 0; f < F; ++f) {
        const auto P = mesh.triangle(f);
        const double area = 0.5 * (P[1] - P[0]).cross(P[2] - P[0]).norm();
        geo.face_area[f] = area;
        geo.total_area += area;
        std::array<double, 3> sq{};
        for (int c = 0; c < 3; ++c) {
            const Vec3 u = P[(c + 1) % 3] - P[c];
            const Vec3 w = P[(c + 2) % 3] - P[c];
            const double cr = u.cross(w).norm();
            const double dt = u.dot(w);
            geo.corner_angle(f, c) = std::atan2(cr, dt);
            geo.corner_cot(f, c) = dt / cr;
            sq[c] = (P[(c + 2) % 3] - P[(c + 1) % 3]).squaredNorm(); // edge opposite corner c
        }
        int obtuse = -1;
        for (int c = 0; c < 3; ++c) {
            if (geo.corner_angle(f, c) > M_PI / 2) {
                obtuse = c;
            }
        }
        for (int c = 0; c < 3; ++c) {
            const int v = mesh.faces[f][c];
            geo.angle_sum[v] += geo.corner_angle(f, c);
            double a = 0;
            if (obtuse < 0) {
                // Voronoi: edges c->c+1 and c->c+2 with cotangents of the opposite corners
                a = (sq[(c + 2) % 3] * geo.corner_cot(f, (c + 2) % 3) + sq[(c + 1) % 3] * geo.corner_cot(f, (c + 1) % 3)) / 8.0;
            } else if (obtuse == c) {
                a = area / 2;
            } else {
                a = area / 4;
            }
            geo.vertex_area[v] += a;
        }
    }
    return geo;
}

Eigen::VectorXd angle_defects(const PeriodicMesh& mesh, const MeshGeometry& geo)
{
    Eigen::VectorXd d(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        d[v] = 2 * M_PI - geo.angle_sum[v];
    }
    return d;
}

std::vector<Vec3> vertex_normals(const PeriodicMesh& mesh)
{
    std::vector<Vec3> n(mesh.vertex_count(), Vec3::Zero());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto P = mesh.triangle(f);
        const Vec3 fn = (P[1] - P[0]).cross(P[2] - P[0]); // twice the area
        for (int c = 0; c < 3; ++c) {
            const auto& R = mesh.deck[mesh.lifts[f][c].element].linear();
            n[mesh.faces[f][c]] += R.matrix().transpose() * fn;
        }
    }
    for (auto& v : n) {
        const double len = v.norm();
        if (len > 0) {
            v /= len;
        }
    }
    return n;
}

std::vector<Vec3> mean_curvature_vectors(const PeriodicMesh& mesh, const MeshGeometry& geo)
{
    std::vector<Vec3> lap(mesh.vertex_count(), Vec3::Zero());
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto P = mesh.triangle(f);
        for (int c = 0; c < 3; ++c) {
            const int c1 = (c + 1) % 3;
            const int c2 = (c + 2) % 3;
            const Vec3 contrib = geo.corner_cot(f, c2) * (P[c1] - P[c]) + geo.corner_cot(f, c1) * (P[c2] - P[c]);
            const auto& R = mesh.deck[mesh.lifts[f][c].element].linear();
            lap[mesh.faces[f][c]] += R.matrix().transpose() * contrib;
        }
    }
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        // (1/2A) sum (cot a + cot b)(xj - xi), halved for the mean-curvature vector
        lap[v] /= 4.0 * geo.vertex_area[v];
    }
    return lap;
}

double mean_edge_length(const PeriodicMesh& mesh)
{
    double sum = 0;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto P = mesh.triangle(f);
        sum += (P[1] - P[0]).norm() + (P[2] - P[1]).norm() + (P[0] - P[2]).norm();
    }
    return mesh.face_count() ? sum / (3.0 * mesh.face_count()) : 0.0;
}

} // namespace twistedp
