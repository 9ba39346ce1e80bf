#include "twistedp/group_action.hpp"

#include "twistedp/error.hpp"

#include <cmath>
#include <unordered_map>

namespace twistedp {

namespace {

Vec3 to_vec(const IVec3& v) { return Vec3(v[0], v[1], v[2]); }

Vec3 lattice_residual(const Vec3& d, double a)
{
    return d - a * (d / a).array().round().matrix();
}

} // namespace

std::optional<std::vector<int>> exact_vertex_permutation(const PeriodicMesh& mesh, const AffineIsometry& g)
{
    if (!mesh.symmetry || mesh.ambient != Ambient::torus) {
        return std::nullopt;
    }
    const SymmetryTable& table = *mesh.symmetry;
    const Side base_side = table.group.side();
    if (table.sheets == 1) {
        if (!(mesh.side == base_side)) {
            return std::nullopt;
        }
        const int e = table.group.index_of(g);
        if (e < 0) {
            return std::nullopt;
        }
        return table.perms[e];
    }
    // pulled-back mesh: vertex = sheet * V + v, sheet offset in halves of the side
    if (!(mesh.side == kUnitSide) || !(base_side == kHalfSide) || !(g.side() == kUnitSide)) {
        return std::nullopt;
    }
    const AffineIsometry reduced = g.reduced_to(kHalfSide);
    const int e = table.group.index_of(reduced);
    if (e < 0) {
        return std::nullopt;
    }
    const int V = table.base_vertices;
    const double half = base_side.value();
    const std::vector<int>& base = table.perms[e];
    const Vec3 lift_diff = 2.0 * (g.shift() - reduced.shift()); // integer vector
    std::vector<int> perm(static_cast<std::size_t>(V) * table.sheets);
    for (int v = 0; v < V; ++v) {
        const int w = base[v];
        const Vec3 moved = reduced.apply(mesh.positions[v]);
        const Vec3 tau = ((moved - mesh.positions[w]) / half).array().round().matrix();
        for (int s = 0; s < table.sheets; ++s) {
            const IVec3 beta{s & 1, (s >> 1) & 1, (s >> 2) & 1};
            const IVec3 rb = g.linear().apply(beta);
            int sheet = 0;
            for (int i = 0; i < 3; ++i) {
                const long h = std::lround(tau[i] + lift_diff[i]) + rb[i];
                sheet |= static_cast<int>(((h % 2) + 2) % 2) << i;
            }
            perm[static_cast<std::size_t>(s) * V + v] = sheet * V + w;
        }
    }
    return perm;
}

std::vector<int> matched_vertex_permutation(const PeriodicMesh& mesh, const AffineIsometry& g, double tol)
{
    const double a = mesh.side.value();
    const int V = mesh.vertex_count();
    const double cell = std::max(4 * tol, 1e-6 * a);
    const int cells = std::max(1, static_cast<int>(a / cell));
    const double width = a / cells;
    auto cell_of = [&](const Vec3& p, int i) {
        const double x = p[i] - a * std::floor(p[i] / a);
        return std::min(cells - 1, static_cast<int>(x / width));
    };
    auto code = [&](int x, int y, int z) {
        auto m = [&](int v) { return ((v % cells) + cells) % cells; };
        return (static_cast<long>(m(x)) * cells + m(y)) * cells + m(z);
    };
    std::unordered_multimap<long, int> hash;
    hash.reserve(V);
    for (int v = 0; v < V; ++v) {
        const Vec3& p = mesh.positions[v];
        hash.emplace(code(cell_of(p, 0), cell_of(p, 1), cell_of(p, 2)), v);
    }
    std::vector<int> perm(V, -1);
    for (int v = 0; v < V; ++v) {
        const Vec3 q = g.apply(mesh.positions[v]);
        const int cx = cell_of(q, 0), cy = cell_of(q, 1), cz = cell_of(q, 2);
        double best = tol;
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dz = -1; dz <= 1; ++dz) {
                    const auto range = hash.equal_range(code(cx + dx, cy + dy, cz + dz));
                    for (auto it = range.first; it != range.second; ++it) {
                        const double d = lattice_residual(q - mesh.positions[it->second], a).norm();
                        if (d <= best) {
                            best = d;
                            perm[v] = it->second;
                        }
                    }
                }
            }
        }
        if (perm[v] < 0) {
            throw Error(ErrorKind::not_invariant,
                        "vertex " + std::to_string(v) + " has no image under " + g.to_string());
        }
    }
    return perm;
}

GroupActionOnMesh build_action(const PeriodicMesh& mesh, const CrystalGroup& group, double tol)
{
    if (mesh.ambient != Ambient::torus) {
        throw Error(ErrorKind::invalid_argument, "group actions are built on torus meshes");
    }
    if (!(mesh.side == group.side())) {
        throw Error(ErrorKind::side_mismatch, "group and mesh live on different tori");
    }
    const double a = mesh.side.value();
    GroupActionOnMesh action;
    action.group = group;
    action.exact = true;
    for (const auto& g : group.elements()) {
        auto perm = exact_vertex_permutation(mesh, g);
        if (!perm) {
            action.exact = false;
            perm = matched_vertex_permutation(mesh, g, tol);
        }
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const Vec3 d = g.apply(mesh.positions[v]) - mesh.positions[(*perm)[v]];
            if (lattice_residual(d, a).norm() > tol) {
                throw Error(ErrorKind::not_invariant, "mesh is not invariant under " + g.to_string());
            }
        }
        std::vector<bool> hit(perm->size(), false);
        for (int w : *perm) {
            if (hit[w]) {
                throw Error(ErrorKind::not_invariant, "image map of " + g.to_string() + " is not a bijection");
            }
            hit[w] = true;
        }
        action.perms.push_back(std::move(*perm));
    }
    // homomorphism: perm(g h) = perm(g) o perm(h)
    const int n = static_cast<int>(group.order());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const int k = group.index_of(compose(group.elements()[i], group.elements()[j]));
            const auto& pg = action.perms[i];
            const auto& ph = action.perms[j];
            const auto& pk = action.perms[k];
            for (std::size_t v = 0; v < pk.size(); ++v) {
                if (pg[ph[v]] != pk[v]) {
                    throw Error(ErrorKind::not_invariant, "vertex permutations do not compose like the group");
                }
            }
        }
    }
    (void)to_vec;
    return action;
}

} // namespace twistedp
