#include "twistedp/surface_gen.hpp"

#include "twistedp/error.hpp"
#include "twistedp/group_action.hpp"

#include <Eigen/Geometry>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>

namespace twistedp {

double schwarz_p_level(const Vec3& p, double a)
{
    const double k = 2 * M_PI / a;
    return std::cos(k * p.x()) + std::cos(k * p.y()) + std::cos(k * p.z());
}

namespace {

Vec3 to_vec(const IVec3& v) { return Vec3(v[0], v[1], v[2]); }

IVec3 round_lattice(const Vec3& d, double a)
{
    return {static_cast<int>(std::lround(d.x() / a)), static_cast<int>(std::lround(d.y() / a)),
            static_cast<int>(std::lround(d.z() / a))};
}

int pmod(long v, long m)
{
    const long r = v % m;
    return static_cast<int>(r < 0 ? r + m : r);
}

// Corners of a cube cell are indexed by bits x | y << 1 | z << 2.
constexpr int kFaceCycles[6][4] = {{0, 2, 6, 4}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 3, 7, 6}, {0, 1, 3, 2}, {4, 5, 7, 6}};

struct CubeEdges {
    std::array<std::array<int, 2>, 12> ends{};
    std::array<int, 12> axis{};
    int id[8][8]{};

    CubeEdges()
    {
        int e = 0;
        for (int ax = 0; ax < 3; ++ax) {
            for (int c = 0; c < 8; ++c) {
                if (c & (1 << ax)) {
                    continue;
                }
                const int d = c | (1 << ax);
                ends[e] = {c, d};
                axis[e] = ax;
                id[c][d] = id[d][c] = e;
                ++e;
            }
        }
    }
};

const CubeEdges& cube_edges()
{
    static const CubeEdges edges;
    return edges;
}

class KeyCodec {
public:
    explicit KeyCodec(int modulus) : k_(modulus) {}

    IVec3 wrap(const IVec3& v) const { return {pmod(v[0], k_), pmod(v[1], k_), pmod(v[2], k_)}; }
    long encode(const IVec3& v) const
    {
        const IVec3 w = wrap(v);
        return (static_cast<long>(w[0]) * k_ + w[1]) * k_ + w[2];
    }
    long volume() const { return static_cast<long>(k_) * k_ * k_; }
    int modulus() const { return k_; }

private:
    int k_;
};

} // namespace

PeriodicMesh seed_p_surface(Side side, int n)
{
    if (n < 16 || n % 2 != 0) {
        throw Error(ErrorKind::invalid_argument, "grid resolution must be even and at least 16");
    }
    const double a = side.value();
    const double u = a / (2.0 * n);
    const int cp = (n % 4 == 0) ? 1 : 0;
    const KeyCodec codec(2 * n);
    const CubeEdges& E = cube_edges();

    auto corner_key = [&](int i) { return 2 * i + cp; };
    std::vector<double> value(static_cast<std::size_t>(n) * n * n);
    auto vidx = [&](int i, int j, int k) { return (static_cast<std::size_t>(pmod(i, n)) * n + pmod(j, n)) * n + pmod(k, n); };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                const Vec3 p(corner_key(i) * u, corner_key(j) * u, corner_key(k) * u);
                value[vidx(i, j, k)] = schwarz_p_level(p, a);
            }
        }
    }

    // symmetry group acting on grid keys; side[e] = -1 when the element exchanges the two sides
    const CrystalGroup group = schwarz_p_symmetry(side);
    std::vector<IVec3> key_shift;
    std::vector<int> swaps;
    const Vec3 probe(0.1234 * a, 0.3071 * a, 0.0417 * a);
    for (const auto& g : group.elements()) {
        IVec3 shift{};
        for (int c = 0; c < 3; ++c) {
            const int s = g.shift_units()[c] * 2 * n;
            if (s % kUnits != 0) {
                throw Error(ErrorKind::side_mismatch, "symmetry shift is not a grid translation");
            }
            shift[c] = s / kUnits;
        }
        key_shift.push_back(shift);
        swaps.push_back(schwarz_p_level(g.apply(probe), a) * schwarz_p_level(probe, a) < 0 ? -1 : 1);
    }
    auto act_key = [&](std::size_t e, const IVec3& k) {
        IVec3 w = group.elements()[e].linear().apply(k);
        for (int c = 0; c < 3; ++c) {
            w[c] += key_shift[e][c];
        }
        return codec.wrap(w);
    };

    // corners on the surface get an equivariant sign perturbation
    const double nudge = 0.1 * (2 * M_PI / a) * (2 * u);
    std::vector<int> assigned(value.size(), 0);
    for (std::size_t idx = 0; idx < value.size(); ++idx) {
        if (std::abs(value[idx]) >= 1e-12 || assigned[idx]) {
            continue;
        }
        const int i = static_cast<int>(idx / (static_cast<std::size_t>(n) * n));
        const int j = static_cast<int>((idx / n) % n);
        const int k = static_cast<int>(idx % n);
        const IVec3 base{corner_key(i), corner_key(j), corner_key(k)};
        for (std::size_t e = 0; e < group.order(); ++e) {
            const IVec3 img = act_key(e, base);
            const std::size_t t = vidx((img[0] - cp) / 2, (img[1] - cp) / 2, (img[2] - cp) / 2);
            if (assigned[t] && assigned[t] != swaps[e]) {
                throw Error(ErrorKind::invalid_argument,
                            "grid corner fixed by a side-exchanging symmetry lies on the surface");
            }
            assigned[t] = swaps[e];
            value[t] = swaps[e] * nudge;
        }
    }

    std::vector<Vec3> positions;
    std::vector<Face> faces;
    std::vector<std::array<CornerLift, 3>> lifts;
    std::unordered_map<long, int> edge_vertex;                    // edge-midpoint key -> vertex
    std::unordered_map<long long, int> centroid_vertex;           // (cell, edge) -> centroid vertex
    std::vector<std::pair<long, long>> centroid_tag;              // centroid vertex -> (cell, edge)
    std::vector<int> centroid_of;                                 // vertex -> index into centroid_tag or -1
    std::vector<long> key_of;                                     // vertex -> edge key (edge vertices)

    auto lattice_of = [&](int v, const Vec3& local) { return round_lattice(local - positions[v], a); };

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = 0; k < n; ++k) {
                std::array<double, 8> val{};
                std::array<Vec3, 8> pos{};
                std::array<IVec3, 8> key{};
                for (int c = 0; c < 8; ++c) {
                    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
                    val[c] = value[vidx(i + di, j + dj, k + dk)];
                    key[c] = {corner_key(i + di), corner_key(j + dj), corner_key(k + dk)};
                    pos[c] = to_vec(key[c]) * u;
                }
                // segments between crossing edges, face by face
                std::array<std::vector<int>, 12> adj;
                bool any = false;
                for (const auto& cyc : kFaceCycles) {
                    std::array<int, 4> cross{};
                    int count = 0;
                    for (int s = 0; s < 4; ++s) {
                        const int c0 = cyc[s], c1 = cyc[(s + 1) % 4];
                        cross[s] = (val[c0] > 0) != (val[c1] > 0);
                        count += cross[s];
                    }
                    auto link = [&](int s0, int s1) {
                        const int e0 = E.id[cyc[s0]][cyc[(s0 + 1) % 4]];
                        const int e1 = E.id[cyc[s1]][cyc[(s1 + 1) % 4]];
                        adj[e0].push_back(e1);
                        adj[e1].push_back(e0);
                        any = true;
                    };
                    if (count == 2) {
                        int s0 = -1, s1 = -1;
                        for (int s = 0; s < 4; ++s) {
                            if (cross[s]) {
                                (s0 < 0 ? s0 : s1) = s;
                            }
                        }
                        link(s0, s1);
                    } else if (count == 4) {
                        const double v0 = val[cyc[0]], v1 = val[cyc[1]], v2 = val[cyc[2]], v3 = val[cyc[3]];
                        const double den = v0 + v2 - v1 - v3;
                        const double saddle = (v0 * v2 - v1 * v3) / den;
                        if (den == 0 || saddle == 0) {
                            throw Error(ErrorKind::invalid_argument, "ambiguous grid face; choose another resolution");
                        }
                        if ((saddle > 0) == (v0 > 0)) {
                            link(0, 1); // isolate corner 1
                            link(2, 3); // isolate corner 3
                        } else {
                            link(3, 0);
                            link(1, 2);
                        }
                    }
                }
                if (!any) {
                    continue;
                }
                const IVec3 cell_key{corner_key(i) + 1, corner_key(j) + 1, corner_key(k) + 1};
                const long cell_code = codec.encode(cell_key);

                std::array<bool, 12> seen{};
                for (int start = 0; start < 12; ++start) {
                    if (adj[start].empty() || seen[start]) {
                        continue;
                    }
                    if (adj[start].size() != 2) {
                        throw Error(ErrorKind::non_manifold, "inconsistent cell polygonisation");
                    }
                    std::vector<int> loop{start};
                    seen[start] = true;
                    int prev = start, cur = adj[start][0];
                    while (cur != start) {
                        loop.push_back(cur);
                        seen[cur] = true;
                        const int nxt = adj[cur][0] == prev ? adj[cur][1] : adj[cur][0];
                        prev = cur;
                        cur = nxt;
                    }
                    // vertices and lifted local positions
                    std::vector<int> verts;
                    std::vector<Vec3> local;
                    std::vector<long> ekeys;
                    Vec3 ref = Vec3::Zero();
                    for (int e : loop) {
                        const int c0 = E.ends[e][0], c1 = E.ends[e][1];
                        IVec3 mk = key[c0];
                        mk[E.axis[e]] += 1;
                        const long code = codec.encode(mk);
                        const double t = val[c0] / (val[c0] - val[c1]);
                        const Vec3 p = pos[c0] + t * (pos[c1] - pos[c0]);
                        auto it = edge_vertex.find(code);
                        int v;
                        if (it == edge_vertex.end()) {
                            v = static_cast<int>(positions.size());
                            positions.push_back(p);
                            centroid_of.push_back(-1);
                            key_of.push_back(code);
                            edge_vertex.emplace(code, v);
                        } else {
                            v = it->second;
                        }
                        verts.push_back(v);
                        local.push_back(p);
                        ekeys.push_back(code);
                        ref += (val[c1] > 0 ? 1.0 : -1.0) * (pos[c1] - pos[c0]);
                    }
                    Vec3 newell = Vec3::Zero();
                    for (std::size_t s = 0; s < local.size(); ++s) {
                        newell += local[s].cross(local[(s + 1) % local.size()]);
                    }
                    if (newell.dot(ref) < 0) {
                        std::reverse(verts.begin(), verts.end());
                        std::reverse(local.begin(), local.end());
                        std::reverse(ekeys.begin(), ekeys.end());
                    }
                    auto emit = [&](std::array<int, 3> tri, std::array<Vec3, 3> lp) {
                        std::array<CornerLift, 3> lf{};
                        for (int c = 0; c < 3; ++c) {
                            lf[c].lattice = lattice_of(tri[c], lp[c]);
                        }
                        faces.push_back(tri);
                        lifts.push_back(lf);
                    };
                    if (verts.size() == 3) {
                        emit({verts[0], verts[1], verts[2]}, {local[0], local[1], local[2]});
                        continue;
                    }
                    Vec3 centroid = Vec3::Zero();
                    for (const auto& p : local) {
                        centroid += p;
                    }
                    centroid /= static_cast<double>(local.size());
                    const int cv = static_cast<int>(positions.size());
                    positions.push_back(centroid);
                    centroid_of.push_back(static_cast<int>(centroid_tag.size()));
                    key_of.push_back(-1);
                    centroid_tag.emplace_back(cell_code, ekeys.front());
                    for (long ek : ekeys) {
                        centroid_vertex.emplace(static_cast<long long>(cell_code) * codec.volume() + ek, cv);
                    }
                    for (std::size_t s = 0; s < verts.size(); ++s) {
                        const std::size_t t = (s + 1) % verts.size();
                        emit({cv, verts[s], verts[t]}, {centroid, local[s], local[t]});
                    }
                }
            }
        }
    }

    PeriodicMesh mesh = make_torus_mesh("P(n=" + std::to_string(n) + ")", side, std::move(positions), std::move(faces),
                                        std::move(lifts));

    // exact vertex permutations of the full symmetry group
    auto table = std::make_shared<SymmetryTable>();
    table->group = group;
    table->base_vertices = mesh.vertex_count();
    table->sheets = 1;
    const int V = mesh.vertex_count();
    for (std::size_t e = 0; e < group.order(); ++e) {
        auto act = [&](long code) {
            const int K = codec.modulus();
            const IVec3 v{static_cast<int>(code / (static_cast<long>(K) * K)), static_cast<int>((code / K) % K),
                          static_cast<int>(code % K)};
            return codec.encode(act_key(e, v));
        };
        std::vector<int> perm(V, -1);
        for (int v = 0; v < V; ++v) {
            if (key_of[v] >= 0) {
                const auto it = edge_vertex.find(act(key_of[v]));
                if (it != edge_vertex.end()) {
                    perm[v] = it->second;
                }
            } else {
                const auto& tag = centroid_tag[centroid_of[v]];
                const auto it = centroid_vertex.find(static_cast<long long>(act(tag.first)) * codec.volume() + act(tag.second));
                if (it != centroid_vertex.end()) {
                    perm[v] = it->second;
                }
            }
            if (perm[v] < 0) {
                throw Error(ErrorKind::not_invariant,
                            "seed mesh is not invariant under " + group.elements()[e].to_string());
            }
        }
        table->perms.push_back(std::move(perm));
    }
    mesh.symmetry = table;

    const Topology topo = topology(mesh);
    if (topo.euler != -4 || topo.components != 1) {
        throw Error(ErrorKind::topology, "seed has Euler characteristic " + std::to_string(topo.euler) +
                                             " with " + std::to_string(topo.components) + " components");
    }
    snap_to_symmetry(mesh);
    return mesh;
}

// ---------------------------------------------------------------------------
// Relaxation

void snap_to_symmetry(PeriodicMesh& mesh)
{
    if (!mesh.symmetry || mesh.symmetry->sheets != 1 || mesh.ambient != Ambient::torus) {
        return;
    }
    const auto& table = *mesh.symmetry;
    const double a = mesh.side.value();
    std::vector<AffineIsometry> inv;
    for (const auto& g : table.group.elements()) {
        inv.push_back(g.inverse());
    }
    const int V = mesh.vertex_count();
    std::vector<Vec3> out(V);
    for (int v = 0; v < V; ++v) {
        Vec3 acc = Vec3::Zero();
        for (std::size_t e = 0; e < inv.size(); ++e) {
            Vec3 q = inv[e].apply(mesh.positions[table.perms[e][v]]);
            q -= a * to_vec(round_lattice(q - mesh.positions[v], a));
            acc += q;
        }
        out[v] = acc / static_cast<double>(inv.size());
    }
    mesh.positions = std::move(out);
}

double total_area(const PeriodicMesh& mesh)
{
    double area = 0;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto P = mesh.triangle(f);
        area += 0.5 * (P[1] - P[0]).cross(P[2] - P[0]).norm();
    }
    return area;
}

double max_mean_curvature(const PeriodicMesh& mesh, const MeshGeometry& geo)
{
    const auto H = mean_curvature_vectors(mesh, geo);
    const auto N = vertex_normals(mesh);
    double worst = 0;
    for (std::size_t v = 0; v < H.size(); ++v) {
        worst = std::max(worst, std::abs(H[v].dot(N[v])));
    }
    return worst;
}

double curvature_residual(const PeriodicMesh& mesh)
{
    return max_mean_curvature(mesh, compute_geometry(mesh)) * mean_edge_length(mesh);
}

namespace {

double min_face_area(const PeriodicMesh& mesh)
{
    double m = std::numeric_limits<double>::infinity();
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto P = mesh.triangle(f);
        m = std::min(m, 0.5 * (P[1] - P[0]).cross(P[2] - P[0]).norm());
    }
    return m;
}

} // namespace

PeriodicMesh minimize_area(const PeriodicMesh& input, const RelaxOptions& options, RelaxLog* log)
{
    if (input.ambient != Ambient::torus) {
        throw Error(ErrorKind::invalid_argument, "relaxation runs on torus meshes");
    }
    PeriodicMesh cur = input;
    if (options.snap) {
        snap_to_symmetry(cur);
    }
    const int V = cur.vertex_count();
    const double a = cur.side.value();
    const double degenerate = 1e-12 * a * a;
    RelaxLog local;
    RelaxLog& lg = log ? *log : local;
    lg = RelaxLog{};

    const double h = mean_edge_length(cur);
    double tau = options.initial_step > 0 ? options.initial_step : 0.5 * h * h;
    const double max_tau = 1e4 * h * h;
    double area = total_area(cur);

    using SpMat = Eigen::SparseMatrix<double>;
    for (int it = 0; it <= options.max_iter; ++it) {
        const MeshGeometry geo = compute_geometry(cur);
        const double residual = max_mean_curvature(cur, geo) * mean_edge_length(cur);
        lg.areas.push_back(geo.total_area);
        lg.residuals.push_back(residual);
        lg.iterations = it;
        if (!std::isfinite(residual)) {
            throw Error(ErrorKind::non_finite, "curvature became non-finite");
        }
        if (residual <= options.tol) {
            lg.converged = true;
            break;
        }
        if (it == options.max_iter) {
            break;
        }

        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(cur.face_count() * 12);
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(V, 3);
        for (int f = 0; f < cur.face_count(); ++f) {
            for (int c = 0; c < 3; ++c) {
                const int c1 = (c + 1) % 3, c2 = (c + 2) % 3;
                const int vi = cur.faces[f][c], vj = cur.faces[f][c1];
                const double w = 0.5 * geo.corner_cot(f, c2);
                const Vec3 d = a * to_vec(cur.half_edge_shift(f, c));
                trips.emplace_back(vi, vj, w);
                trips.emplace_back(vj, vi, w);
                trips.emplace_back(vi, vi, -w);
                trips.emplace_back(vj, vj, -w);
                b.row(vi) += w * d.transpose();
                b.row(vj) -= w * d.transpose();
            }
        }
        SpMat L(V, V);
        L.setFromTriplets(trips.begin(), trips.end());
        Eigen::MatrixXd X(V, 3);
        for (int v = 0; v < V; ++v) {
            X.row(v) = cur.positions[v].transpose();
        }

        bool accepted = false;
        while (!accepted) {
            SpMat A = -tau * L;
            for (int v = 0; v < V; ++v) {
                A.coeffRef(v, v) += geo.vertex_area[v];
            }
            Eigen::SimplicialLDLT<SpMat> solver(A);
            if (solver.info() != Eigen::Success) {
                throw Error(ErrorKind::no_convergence, "relaxation system could not be factorised");
            }
            Eigen::MatrixXd rhs = geo.vertex_area.asDiagonal() * X + tau * b;
            Eigen::MatrixXd Y = solver.solve(rhs);
            // the exact step preserves the mass-weighted centroid
            const double mass = geo.vertex_area.sum();
            const Eigen::RowVector3d drift = geo.vertex_area.transpose() * (Y - X) / mass;
            Y.rowwise() -= drift;
            PeriodicMesh trial = cur;
            for (int v = 0; v < V; ++v) {
                trial.positions[v] = Y.row(v).transpose();
            }
            if (options.snap) {
                snap_to_symmetry(trial);
            }
            const double trial_area = total_area(trial);
            if (std::isfinite(trial_area) && trial_area <= area && min_face_area(trial) >= degenerate) {
                cur = std::move(trial);
                area = trial_area;
                tau = std::min(1.5 * tau, max_tau);
                accepted = true;
            } else {
                ++lg.rejected_steps;
                tau *= 0.5;
                if (tau < 1e-12 * h * h) {
                    if (min_face_area(trial) < degenerate) {
                        throw Error(ErrorKind::degenerate_triangle, "relaxation collapsed a triangle");
                    }
                    throw Error(ErrorKind::no_convergence, "relaxation step size underflow at residual " +
                                                               std::to_string(residual));
                }
            }
        }
    }
    if (!lg.converged) {
        throw Error(ErrorKind::no_convergence, "curvature residual " + std::to_string(lg.residuals.back()) +
                                                   " above tolerance after " + std::to_string(lg.iterations) +
                                                   " iterations");
    }
    return cur;
}

// ---------------------------------------------------------------------------
// Pullback and quotient

PeriodicMesh pullback_mesh(const PeriodicMesh& base)
{
    if (!(base.side == kHalfSide) || base.ambient != Ambient::torus) {
        throw Error(ErrorKind::side_mismatch, "pullback needs a mesh of T^3(1/2)");
    }
    const int V = base.vertex_count();
    PeriodicMesh m;
    m.id = base.id + " pulled back";
    m.side = kUnitSide;
    m.ambient = Ambient::torus;
    m.deck = {AffineIsometry::identity(kUnitSide)};
    m.positions.reserve(8 * V);
    for (int s = 0; s < 8; ++s) {
        const Vec3 alpha(0.5 * (s & 1), 0.5 * ((s >> 1) & 1), 0.5 * ((s >> 2) & 1));
        for (int v = 0; v < V; ++v) {
            m.positions.push_back(base.positions[v] + alpha);
        }
    }
    for (int s = 0; s < 8; ++s) {
        const IVec3 sb{s & 1, (s >> 1) & 1, (s >> 2) & 1};
        for (int f = 0; f < base.face_count(); ++f) {
            Face face{};
            std::array<CornerLift, 3> lf{};
            for (int c = 0; c < 3; ++c) {
                const IVec3& mc = base.lifts[f][c].lattice; // halves
                int sheet = 0;
                for (int i = 0; i < 3; ++i) {
                    const int total = sb[i] + mc[i];
                    const int beta = pmod(total, 2);
                    sheet |= beta << i;
                    lf[c].lattice[i] = (total - beta) / 2;
                }
                face[c] = sheet * V + base.faces[f][c];
            }
            m.faces.push_back(face);
            m.lifts.push_back(lf);
        }
    }
    if (base.symmetry && base.symmetry->sheets == 1) {
        auto table = std::make_shared<SymmetryTable>(*base.symmetry);
        table->sheets = 8;
        m.symmetry = table;
    }
    const HalfEdges he = build_half_edges(m);
    if (lift_consistency_violations(m, he) != 0) {
        throw Error(ErrorKind::gluing_mismatch, "pulled-back sheets do not glue");
    }
    return m;
}

QuotientResult quotient_mesh(const PeriodicMesh& mesh, const CrystalGroup& group)
{
    return quotient_mesh(mesh, build_action(mesh, group));
}

QuotientResult quotient_mesh(const PeriodicMesh& mesh, const GroupActionOnMesh& action)
{
    const CrystalGroup& G = action.group;
    const int V = mesh.vertex_count();
    const int order = static_cast<int>(G.order());
    if (mesh.ambient != Ambient::torus || !(mesh.side == G.side())) {
        throw Error(ErrorKind::side_mismatch, "group and mesh live on different tori");
    }
    if (action.vertex_count() != V) {
        throw Error(ErrorKind::dimension_mismatch, "action does not match the mesh");
    }
    if (order == 0 || !G.elements().front().is_identity()) {
        throw Error(ErrorKind::invalid_argument, "group must list the identity first");
    }
    QuotientResult out;
    const double a = mesh.side.value();

    out.singular_margin = std::numeric_limits<double>::infinity();
    bool proper = true;
    for (const auto& g : G.elements()) {
        proper = proper && g.orientation_preserving();
    }
    if (order > 1 && proper) {
        const SingularSet sing = singular_set(G);
        for (const auto& line : sing.lines) {
            for (const auto& p : mesh.positions) {
                out.singular_margin = std::min(out.singular_margin, distance_to_line(p, line, G.side()));
            }
        }
    }
    if (out.singular_margin < 1e-9 * a) {
        throw Error(ErrorKind::non_free_action, "mesh meets the singular set of " + G.name());
    }

    // vertex orbits
    out.orbit_of_vertex.assign(V, -1);
    std::vector<int> element_to(V, -1); // g with g(rep) = v
    for (int v = 0; v < V; ++v) {
        if (out.orbit_of_vertex[v] >= 0) {
            continue;
        }
        const int q = static_cast<int>(out.representative.size());
        out.representative.push_back(v);
        for (int e = 0; e < order; ++e) {
            const int w = action.perms[e][v];
            if (out.orbit_of_vertex[w] >= 0) {
                throw Error(ErrorKind::non_free_action, "vertex orbit smaller than the group order");
            }
            out.orbit_of_vertex[w] = q;
            element_to[w] = e;
        }
    }

    // face orbits: keep the first face of each
    std::map<std::array<int, 3>, int> face_index;
    auto canonical = [](Face f) {
        const int r = static_cast<int>(std::min_element(f.begin(), f.end()) - f.begin());
        return std::array<int, 3>{f[r], f[(r + 1) % 3], f[(r + 2) % 3]};
    };
    for (int f = 0; f < mesh.face_count(); ++f) {
        face_index.emplace(canonical(mesh.faces[f]), f);
    }
    std::vector<bool> covered(mesh.face_count(), false);
    PeriodicMesh& qm = out.mesh;
    qm.id = mesh.id + " / " + G.name();
    qm.side = mesh.side;
    qm.ambient = order > 1 ? Ambient::orbifold : Ambient::torus;
    qm.deck = G.elements();
    for (int v : out.representative) {
        qm.positions.push_back(mesh.positions[v]);
    }
    for (int f = 0; f < mesh.face_count(); ++f) {
        if (covered[f]) {
            continue;
        }
        for (int e = 0; e < order; ++e) {
            Face img{};
            for (int c = 0; c < 3; ++c) {
                img[c] = action.perms[e][mesh.faces[f][c]];
            }
            const auto it = face_index.find(canonical(img));
            if (it == face_index.end()) {
                throw Error(ErrorKind::not_invariant, "face image is not a face of the mesh");
            }
            covered[it->second] = true;
        }
        Face qf{};
        std::array<CornerLift, 3> lf{};
        for (int c = 0; c < 3; ++c) {
            const int v = mesh.faces[f][c];
            const int e = element_to[v];
            const int rep = out.representative[out.orbit_of_vertex[v]];
            qf[c] = out.orbit_of_vertex[v];
            const Vec3 moved = G.elements()[e].apply(mesh.positions[rep]);
            const Vec3 target = mesh.corner(f, c);
            lf[c].element = e;
            lf[c].lattice = round_lattice(target - moved, a);
            if ((moved + a * to_vec(lf[c].lattice) - target).norm() > 1e-6 * a) {
                throw Error(ErrorKind::not_invariant, "group action does not match vertex positions");
            }
        }
        qm.faces.push_back(qf);
        qm.lifts.push_back(lf);
    }
    if (qm.face_count() * order != mesh.face_count()) {
        throw Error(ErrorKind::non_free_action, "face orbits are not of full size");
    }
    const HalfEdges he = build_half_edges(qm);
    if (lift_consistency_violations(qm, he) != 0) {
        throw Error(ErrorKind::gluing_mismatch, "quotient transitions are inconsistent");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Straight lines

std::vector<StraightLine> detect_lines(const PeriodicMesh& mesh, double tol)
{
    if (mesh.ambient != Ambient::torus) {
        throw Error(ErrorKind::invalid_argument, "line detection runs on torus meshes");
    }
    const double a = mesh.side.value();
    const double eps = tol * a;
    const int V = mesh.vertex_count();
    // outgoing edges with their vectors
    std::vector<std::vector<std::pair<int, Vec3>>> out(V);
    std::set<std::pair<int, int>> seen_pairs;
    for (int f = 0; f < mesh.face_count(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int c1 = (c + 1) % 3;
            const int vi = mesh.faces[f][c], vj = mesh.faces[f][c1];
            const Vec3 d = mesh.corner(f, c1) - mesh.corner(f, c);
            out[vi].emplace_back(vj, d);
            out[vj].emplace_back(vi, -d);
        }
    }
    std::set<std::vector<int>> found;
    std::set<std::pair<int, int>> used;
    std::vector<StraightLine> lines;
    for (int v0 = 0; v0 < V; ++v0) {
        for (const auto& [v1, d0] : out[v0]) {
            if (used.count({v0, v1})) {
                continue;
            }
            const Vec3 dir = d0.normalized();
            std::vector<int> chain{v0};
            std::vector<std::pair<int, int>> steps{{v0, v1}};
            Vec3 disp = d0;
            int cur = v1;
            bool closed = false;
            for (int step = 0; step < V; ++step) {
                if (cur == v0) {
                    const IVec3 m = round_lattice(disp, a);
                    closed = m != IVec3{0, 0, 0} && (disp - a * to_vec(m)).norm() <= eps * chain.size();
                    break;
                }
                chain.push_back(cur);
                int best = -1;
                Vec3 best_d;
                for (const auto& [w, d] : out[cur]) {
                    if (d.dot(dir) <= 0) {
                        continue;
                    }
                    if ((d - d.dot(dir) * dir).norm() <= eps) {
                        best = w;
                        best_d = d;
                        break;
                    }
                }
                if (best < 0) {
                    break;
                }
                steps.emplace_back(cur, best);
                disp += best_d;
                cur = best;
            }
            if (!closed) {
                continue;
            }
            for (const auto& s : steps) {
                used.insert(s);
                used.insert({s.second, s.first});
            }
            std::vector<int> key = chain;
            std::sort(key.begin(), key.end());
            if (!found.insert(key).second) {
                continue;
            }
            StraightLine line;
            line.vertices = chain;
            line.point = mesh.positions[v0];
            line.length = disp.norm();
            line.direction = disp / line.length;
            Vec3 p = mesh.positions[v0];
            for (std::size_t s = 0; s + 1 < steps.size(); ++s) {
                // residual from accumulated lifted positions
                const int from = steps[s].first, to = steps[s].second;
                for (const auto& [w, d] : out[from]) {
                    if (w == to && (d - d.dot(dir) * dir).norm() <= eps && d.dot(dir) > 0) {
                        p += d;
                        break;
                    }
                }
                const Vec3 r = p - line.point;
                line.residual = std::max(line.residual, (r - r.dot(line.direction) * line.direction).norm());
            }
            int zeros = 0;
            for (int i = 0; i < 3; ++i) {
                if (std::abs(line.direction[i]) < 1e-9) {
                    line.normal_axis = i;
                    ++zeros;
                }
            }
            if (zeros != 1) {
                line.normal_axis = -1;
            } else {
                line.height = line.point[line.normal_axis] - a * std::floor(line.point[line.normal_axis] / a);
                if (line.height > a - eps) {
                    line.height -= a;
                }
            }
            lines.push_back(std::move(line));
        }
    }
    (void)seen_pairs;
    return lines;
}

// ---------------------------------------------------------------------------
// Gauss map

GaussData gauss_data(const PeriodicMesh& mesh)
{
    GaussData g;
    const MeshGeometry geo = compute_geometry(mesh);
    g.normals = vertex_normals(mesh);
    g.angle_defects = angle_defects(mesh, geo);
    g.total_curvature = g.angle_defects.sum();
    g.degree = g.total_curvature / (-4 * M_PI);
    for (int s = 0; s < 8; ++s) {
        const Vec3 d = Vec3((s & 1) ? -1 : 1, (s & 2) ? -1 : 1, (s & 4) ? -1 : 1) / std::sqrt(3.0);
        int best = -1;
        double best_angle = M_PI;
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const double ang = std::acos(std::clamp(g.normals[v].dot(d), -1.0, 1.0));
            if (ang < best_angle) {
                best_angle = ang;
                best = v;
            }
        }
        g.branch_directions.push_back(d);
        g.branch_vertices.push_back(best);
        g.branch_angles.push_back(best_angle);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Distances between periodic triangle sets

namespace {

Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) {
        return a;
    }
    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) {
        return b;
    }
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        return a + (d1 / (d1 - d3)) * ab;
    }
    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) {
        return c;
    }
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        return a + (d2 / (d2 - d6)) * ac;
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
    }
    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

class PeriodicTriangles {
public:
    PeriodicTriangles(std::vector<std::array<Vec3, 3>> tris, double a) : a_(a)
    {
        double extent = 0;
        for (auto& t : tris) {
            const Vec3 lo = t[0].cwiseMin(t[1]).cwiseMin(t[2]);
            const Vec3 hi = t[0].cwiseMax(t[1]).cwiseMax(t[2]);
            extent = std::max(extent, (hi - lo).maxCoeff());
            const Vec3 shift = a * (lo / a).array().floor().matrix();
            for (auto& p : t) {
                p -= shift;
            }
        }
        cells_ = std::max(1, std::min(64, static_cast<int>(a / std::max(extent, 1e-12 * a))));
        cell_ = a / cells_;
        grid_.resize(static_cast<std::size_t>(cells_) * cells_ * cells_);
        tris_ = std::move(tris);
        for (int t = 0; t < static_cast<int>(tris_.size()); ++t) {
            const auto& T = tris_[t];
            const Vec3 lo = T[0].cwiseMin(T[1]).cwiseMin(T[2]);
            const Vec3 hi = T[0].cwiseMax(T[1]).cwiseMax(T[2]);
            std::array<int, 3> l{}, h{};
            for (int i = 0; i < 3; ++i) {
                l[i] = static_cast<int>(std::floor(lo[i] / cell_));
                h[i] = static_cast<int>(std::floor(hi[i] / cell_));
            }
            std::set<std::size_t> cells;
            for (int x = l[0]; x <= h[0]; ++x) {
                for (int y = l[1]; y <= h[1]; ++y) {
                    for (int z = l[2]; z <= h[2]; ++z) {
                        cells.insert(index(x, y, z));
                    }
                }
            }
            for (std::size_t c : cells) {
                grid_[c].push_back(t);
            }
        }
    }

    double distance(const Vec3& q) const
    {
        const Vec3 p = q - a_ * (q / a_).array().floor().matrix();
        const int cx = std::min(cells_ - 1, static_cast<int>(p.x() / cell_));
        const int cy = std::min(cells_ - 1, static_cast<int>(p.y() / cell_));
        const int cz = std::min(cells_ - 1, static_cast<int>(p.z() / cell_));
        double best = std::numeric_limits<double>::infinity();
        // distance from p to the faces of its own cell
        double inset = cell_;
        for (int i = 0; i < 3; ++i) {
            const double lo = p[i] - cell_ * std::array<int, 3>{cx, cy, cz}[i];
            inset = std::min({inset, lo, cell_ - lo});
        }
        inset = std::max(inset, 0.0);
        const int rmax = cells_ / 2 + 1;
        for (int r = 0; r <= rmax; ++r) {
            for (int x = -r; x <= r; ++x) {
                for (int y = -r; y <= r; ++y) {
                    for (int z = -r; z <= r; ++z) {
                        if (std::max({std::abs(x), std::abs(y), std::abs(z)}) != r) {
                            continue;
                        }
                        for (int t : grid_[index(cx + x, cy + y, cz + z)]) {
                            const auto& T = tris_[t];
                            const Vec3 centre = (T[0] + T[1] + T[2]) / 3.0;
                            const Vec3 pp = p - a_ * (((p - centre) / a_).array().round().matrix());
                            best = std::min(best, (closest_on_triangle(pp, T[0], T[1], T[2]) - pp).norm());
                        }
                    }
                }
            }
            if (best <= r * cell_ + inset) {
                break;
            }
        }
        return best;
    }

private:
    std::size_t index(int x, int y, int z) const
    {
        return (static_cast<std::size_t>(pmod(x, cells_)) * cells_ + pmod(y, cells_)) * cells_ + pmod(z, cells_);
    }

    double a_;
    int cells_ = 1;
    double cell_ = 1;
    std::vector<std::array<Vec3, 3>> tris_;
    std::vector<std::vector<int>> grid_;
};

double hausdorff(const std::vector<std::array<Vec3, 3>>& A, const std::vector<std::array<Vec3, 3>>& B, double a)
{
    if (A.empty() || B.empty()) {
        return std::numeric_limits<double>::infinity();
    }
    const PeriodicTriangles ta(A, a), tb(B, a);
    double worst = 0;
    for (const auto& t : A) {
        for (const auto& p : t) {
            worst = std::max(worst, tb.distance(p));
        }
    }
    for (const auto& t : B) {
        for (const auto& p : t) {
            worst = std::max(worst, ta.distance(p));
        }
    }
    return worst;
}

} // namespace

double set_deviation(const PeriodicMesh& mesh, const std::function<Vec3(const Vec3&)>& motion)
{
    if (mesh.ambient != Ambient::torus) {
        throw Error(ErrorKind::invalid_argument, "set deviation runs on torus meshes");
    }
    std::vector<std::array<Vec3, 3>> A, B;
    for (int f = 0; f < mesh.face_count(); ++f) {
        const auto T = mesh.triangle(f);
        A.push_back(T);
        B.push_back({motion(T[0]), motion(T[1]), motion(T[2])});
    }
    return hausdorff(A, B, mesh.side.value());
}

std::vector<double> verify_mesh_symmetry(const PeriodicMesh& mesh, const CrystalGroup& group)
{
    if (!(mesh.side == group.side())) {
        throw Error(ErrorKind::side_mismatch, "group and mesh live on different tori");
    }
    std::vector<double> dev;
    for (const auto& g : group.elements()) {
        dev.push_back(set_deviation(mesh, [&](const Vec3& p) { return g.apply(p); }));
    }
    return dev;
}

// ---------------------------------------------------------------------------
// Square catenoid

CatenoidResult extract_catenoid(const PeriodicMesh& mesh)
{
    if (mesh.ambient != Ambient::torus) {
        throw Error(ErrorKind::invalid_argument, "catenoid extraction runs on torus meshes");
    }
    const double a = mesh.side.value();
    const double eps = 1e-9 * a;
    const auto lines = detect_lines(mesh);
    bool lower = false, upper = false;
    std::set<std::pair<int, int>> cut;   // edges on the horizontal lines
    for (const auto& l : lines) {
        if (l.normal_axis != 2) {
            continue;
        }
        lower = lower || std::abs(l.height - 0.75 * a) < 1e-7 * a;
        upper = upper || std::abs(l.height - 0.25 * a) < 1e-7 * a;
        const std::size_t m = l.vertices.size();
        for (std::size_t k = 0; k < m; ++k) {
            const int p = l.vertices[k], q = l.vertices[(k + 1) % m];
            cut.emplace(std::min(p, q), std::max(p, q));
        }
    }
    if (!lower || !upper) {
        throw Error(ErrorKind::topology, "no straight lines at heights a/4 and 3a/4");
    }

    // the horizontal lines split the surface into two slabs; faces lying in a
    // slicing plane are assigned by connectivity
    const int F = mesh.face_count();
    const HalfEdges he = build_half_edges(mesh);
    std::vector<int> comp(F, -1);
    int ncomp = 0;
    for (int f0 = 0; f0 < F; ++f0) {
        if (comp[f0] >= 0) {
            continue;
        }
        std::vector<int> stack{f0};
        comp[f0] = ncomp;
        while (!stack.empty()) {
            const int f = stack.back();
            stack.pop_back();
            for (int c = 0; c < 3; ++c) {
                const int h = 3 * f + c;
                const int p = he.origin[h], q = he.dest(h);
                if (he.twin[h] < 0 || cut.count({std::min(p, q), std::max(p, q)})) {
                    continue;
                }
                const int g = he.face[he.twin[h]];
                if (comp[g] < 0) {
                    comp[g] = ncomp;
                    stack.push_back(g);
                }
            }
        }
        ++ncomp;
    }
    if (ncomp != 2) {
        throw Error(ErrorKind::topology, "horizontal lines cut the surface into " + std::to_string(ncomp) + " pieces");
    }
    std::vector<int> in(F, 0);
    std::vector<double> zshift(F, 0);
    std::array<int, 2> votes{0, 0};
    for (int f = 0; f < F; ++f) {
        const auto T = mesh.triangle(f);
        const double cz = (T[0].z() + T[1].z() + T[2].z()) / 3;
        zshift[f] = a * std::round(cz / a);
        const double z = std::abs(cz - zshift[f]);
        if (z < 0.25 * a - eps) {
            ++votes[comp[f]];
        } else if (z > 0.25 * a + eps) {
            --votes[comp[f]];
        }
    }
    const int slab = votes[0] > votes[1] ? 0 : 1;
    for (int f = 0; f < F; ++f) {
        in[f] = comp[f] == slab;
        if (!in[f]) {
            continue;
        }
        for (const auto& p : mesh.triangle(f)) {
            if (std::abs(p.z() - zshift[f]) > 0.25 * a + eps) {
                throw Error(ErrorKind::topology, "face " + std::to_string(f) + " crosses the slicing planes");
            }
        }
    }

    std::vector<int> offset_set(F, 0);
    std::vector<IVec3> offset(F, IVec3{0, 0, 0});
    int start = -1;
    for (int f = 0; f < F && start < 0; ++f) {
        if (in[f]) {
            start = f;
        }
    }
    if (start < 0) {
        throw Error(ErrorKind::topology, "slab contains no faces");
    }
    offset[start] = {0, 0, -static_cast<int>(std::lround(zshift[start] / a))};
    offset_set[start] = 1;
    std::queue<int> bfs;
    bfs.push(start);
    while (!bfs.empty()) {
        const int f = bfs.front();
        bfs.pop();
        for (int c = 0; c < 3; ++c) {
            const int t = he.twin[3 * f + c];
            if (t < 0) {
                continue;
            }
            const int g = he.face[t];
            if (!in[g] || offset_set[g]) {
                continue;
            }
            // shared vertex: origin of half-edge f,c is corner (t+1) of g
            const int cg = (t % 3 + 1) % 3;
            const Vec3 pf = mesh.corner(f, c) + a * to_vec(offset[f]);
            const Vec3 pg = mesh.corner(g, cg);
            offset[g] = round_lattice(pf - pg, a);
            offset_set[g] = 1;
            bfs.push(g);
        }
    }

    // vertices keyed by (vertex, absolute lattice)
    std::map<std::pair<int, IVec3>, int> index;
    std::vector<Vec3> positions;
    std::vector<Face> faces;
    std::vector<std::array<Vec3, 3>> cat_tris, rest_tris;
    for (int f = 0; f < F; ++f) {
        if (!in[f]) {
            rest_tris.push_back(mesh.triangle(f));
            continue;
        }
        if (!offset_set[f]) {
            throw Error(ErrorKind::topology, "slab is not connected");
        }
        Face face{};
        std::array<Vec3, 3> tri{};
        for (int c = 0; c < 3; ++c) {
            const int v = mesh.faces[f][c];
            IVec3 abs = mesh.lifts[f][c].lattice;
            for (int i = 0; i < 3; ++i) {
                abs[i] += offset[f][i];
            }
            const auto key = std::make_pair(v, abs);
            auto it = index.find(key);
            if (it == index.end()) {
                it = index.emplace(key, static_cast<int>(positions.size())).first;
                positions.push_back(mesh.positions[v] + a * to_vec(abs));
            }
            face[c] = it->second;
            tri[c] = positions[it->second];
        }
        faces.push_back(face);
        cat_tris.push_back(tri);
    }

    CatenoidResult res;
    res.annulus.mesh = make_torus_mesh(mesh.id + " catenoid", mesh.side, positions, faces);
    const HalfEdges ahe = build_half_edges(res.annulus.mesh);
    res.annulus.loops = boundary_loops(res.annulus.mesh, ahe);
    res.topology = topology(res.annulus.mesh);

    std::vector<Vec3> centroids;
    for (const auto& loop : res.annulus.loops) {
        const int m = static_cast<int>(loop.size());
        std::vector<int> corners;
        Vec3 centroid = Vec3::Zero();
        for (int k = 0; k < m; ++k) {
            const Vec3& p = positions[loop[k]];
            centroid += p;
            const Vec3 in_dir = (p - positions[loop[(k + m - 1) % m]]).normalized();
            const Vec3 out_dir = (positions[loop[(k + 1) % m]] - p).normalized();
            if (std::acos(std::clamp(in_dir.dot(out_dir), -1.0, 1.0)) > M_PI / 4) {
                corners.push_back(loop[k]);
            }
        }
        centroid /= m;
        centroids.push_back(centroid);
        res.loop_heights.push_back(centroid.z());
        double side = 0;
        if (corners.size() == 4) {
            for (int k = 0; k < 4; ++k) {
                side += (positions[corners[(k + 1) % 4]] - positions[corners[k]]).norm();
            }
            side /= 4;
        } else {
            side = std::numeric_limits<double>::quiet_NaN();
        }
        res.square_sides.push_back(side);
    }
    if (centroids.size() == 2) {
        const bool first_low = centroids[0].z() < centroids[1].z();
        res.loop_offset = first_low ? centroids[1] - centroids[0] : centroids[0] - centroids[1];
    }

    const Vec3 body = Vec3::Constant(0.5 * a);
    for (auto& t : cat_tris) {
        for (auto& p : t) {
            p += body;
        }
    }
    res.complement_deviation = hausdorff(cat_tris, rest_tris, a);
    return res;
}

} // namespace twistedp
