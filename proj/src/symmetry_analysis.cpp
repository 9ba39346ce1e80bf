#include "twistedp/symmetry_analysis.hpp"

#include "twistedp/error.hpp"

#include <cmath>

namespace twistedp {

Eigen::VectorXd compose_with(const Eigen::VectorXd& u, const std::vector<int>& perm)
{
    if (static_cast<std::size_t>(u.size()) != perm.size()) {
        throw Error(ErrorKind::dimension_mismatch, "function length differs from the vertex count");
    }
    Eigen::VectorXd out(u.size());
    for (int v = 0; v < u.size(); ++v) {
        out[v] = u[perm[v]];
    }
    return out;
}

FunctionOnMesh reynolds_project(const FunctionOnMesh& u, const GroupActionOnMesh& action)
{
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(u.values.size());
    for (const auto& perm : action.perms) {
        acc += compose_with(u.values, perm);
    }
    return {u.mesh_id, acc / static_cast<double>(action.order())};
}

double invariance_residual(const Eigen::VectorXd& u, const GroupActionOnMesh& action)
{
    const double scale = std::max(u.cwiseAbs().maxCoeff(), 1e-300);
    double worst = 0;
    for (const auto& perm : action.perms) {
        worst = std::max(worst, (compose_with(u, perm) - u).cwiseAbs().maxCoeff());
    }
    return worst / scale;
}

OddEvenSplit odd_even_split(const FunctionOnMesh& u, const GroupActionOnMesh& sub, const GroupActionOnMesh& full,
                            double tol)
{
    if (!sub.group.is_subgroup_of(full.group) || sub.vertex_count() != full.vertex_count()) {
        throw Error(ErrorKind::invalid_argument, "split needs a subgroup acting on the same mesh");
    }
    if (u.values.size() != full.vertex_count()) {
        throw Error(ErrorKind::dimension_mismatch, "function length differs from the vertex count");
    }
    if (u.values.size() > 0 && u.values.cwiseAbs().maxCoeff() > 0 && invariance_residual(u.values, sub) > tol) {
        throw Error(ErrorKind::not_invariant, "function is not invariant under " + sub.group.name());
    }
    OddEvenSplit out;
    out.even = reynolds_project(u, full);
    out.odd = {u.mesh_id, u.values - out.even.values};
    const double scale = std::max(u.values.cwiseAbs().maxCoeff(), 1e-300);
    for (std::size_t e = 0; e < full.order(); ++e) {
        const Eigen::VectorXd moved = compose_with(out.odd.values, full.perms[e]);
        if (sub.group.contains(full.group.elements()[e])) {
            continue;
        }
        out.odd_residual = std::max(out.odd_residual, (moved + out.odd.values).cwiseAbs().maxCoeff() / scale);
    }
    out.even_residual = invariance_residual(out.even.values, full) *
                        std::max(out.even.values.cwiseAbs().maxCoeff(), 1e-300) / scale;
    return out;
}

EquivariantReport equivariant_spectrum(const PeriodicMesh& mesh, const GroupActionOnMesh& action, int k,
                                       EigenMethod method)
{
    const int V = mesh.vertex_count();
    if (action.vertex_count() != V) {
        throw Error(ErrorKind::dimension_mismatch, "action does not match the mesh");
    }
    EquivariantReport out;
    out.group = action.group.name();
    out.orbit_of_vertex.assign(V, -1);
    int q = 0;
    for (int v = 0; v < V; ++v) {
        if (out.orbit_of_vertex[v] >= 0) {
            continue;
        }
        for (const auto& perm : action.perms) {
            out.orbit_of_vertex[perm[v]] = q;
        }
        ++q;
    }
    out.subspace_dim = q;
    if (q < k) {
        throw Error(ErrorKind::rank_deficient, "invariant subspace is smaller than the requested spectrum");
    }
    const OperatorTriple full = assemble(mesh);
    OperatorTriple red;
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < full.S.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(full.S, col); it; ++it) {
            trips.emplace_back(out.orbit_of_vertex[it.row()], out.orbit_of_vertex[it.col()], it.value());
        }
    }
    red.S.resize(q, q);
    red.S.setFromTriplets(trips.begin(), trips.end());
    red.P = Eigen::VectorXd::Zero(q);
    red.M = Eigen::VectorXd::Zero(q);
    for (int v = 0; v < V; ++v) {
        red.P[out.orbit_of_vertex[v]] += full.P[v];
        red.M[out.orbit_of_vertex[v]] += full.M[v];
    }
    red.K = red.P.cwiseQuotient(red.M) * -0.5;
    SpectrumReport r = spectrum(red, k, mesh.id + " / " + action.group.name(), method);
    Eigen::MatrixXd lifted(V, r.eigenvectors.cols());
    for (int v = 0; v < V; ++v) {
        lifted.row(v) = r.eigenvectors.row(out.orbit_of_vertex[v]);
    }
    r.eigenvectors = std::move(lifted);
    out.report = std::move(r);
    return out;
}

AffineIsometry axial_symmetry(const StraightLine& line, Side side)
{
    const Vec3 d = line.direction.normalized();
    const Eigen::Matrix3d R = 2 * d * d.transpose() - Eigen::Matrix3d::Identity();
    SignedPerm L;
    for (int i = 0; i < 3; ++i) {
        int found = -1;
        for (int j = 0; j < 3; ++j) {
            if (std::abs(R(i, j)) > 1e-9) {
                if (found >= 0 || std::abs(std::abs(R(i, j)) - 1) > 1e-9) {
                    throw Error(ErrorKind::invalid_argument, "line direction is not a lattice symmetry axis");
                }
                found = j;
            }
        }
        if (found < 0) {
            throw Error(ErrorKind::invalid_argument, "line direction is not a lattice symmetry axis");
        }
        L.perm[i] = found;
        L.sign[i] = R(i, found) > 0 ? 1 : -1;
    }
    const Vec3 t = line.point - R * line.point;
    IVec3 units{};
    for (int i = 0; i < 3; ++i) {
        const double x = t[i] / side.value() * kUnits;
        units[i] = static_cast<int>(std::lround(x / 16.0)) * 16;
        if (std::abs(x - units[i]) > 1e-6) {
            throw Error(ErrorKind::invalid_argument, "half-turn shift is not a quarter of the side");
        }
    }
    return AffineIsometry::from_units(L, units, side);
}

namespace {

std::vector<int> permutation_of(const PeriodicMesh& mesh, const AffineIsometry& g)
{
    if (auto p = exact_vertex_permutation(mesh, g)) {
        return *p;
    }
    return matched_vertex_permutation(mesh, g, 1e-8 * mesh.side.value());
}

} // namespace

AxialLineReport axial_line_invariance_check(const SpectrumReport& qr, const QuotientResult& quotient,
                                            const PeriodicMesh& cover, const std::vector<StraightLine>& lines,
                                            int count, double tol)
{
    if (lines.empty()) {
        throw Error(ErrorKind::invalid_argument, "no straight lines to check");
    }
    if (static_cast<int>(quotient.orbit_of_vertex.size()) != cover.vertex_count() ||
        qr.eigenvectors.rows() != quotient.mesh.vertex_count()) {
        throw Error(ErrorKind::dimension_mismatch, "report, quotient and cover do not match");
    }
    const double a = cover.side.value();
    const Eigen::VectorXd mass = compute_geometry(cover).vertex_area;
    std::vector<std::vector<int>> perms;
    std::vector<AffineIsometry> motions;
    for (const auto& l : lines) {
        motions.push_back(axial_symmetry(l, cover.side));
        perms.push_back(permutation_of(cover, motions.back()));
    }
    AxialLineReport out;
    out.lines = static_cast<int>(lines.size());

    // a horizontal line and its copy a quarter higher
    const AffineIsometry lift = AffineIsometry::parse("(x, y, z+1/2)", kUnitSide);
    const std::vector<int> translation =
        cover.side == kUnitSide ? permutation_of(cover, lift) : std::vector<int>{};
    for (std::size_t i = 0; i < lines.size() && !out.translation_composition && !translation.empty(); ++i) {
        if (lines[i].normal_axis != 2) {
            continue;
        }
        for (std::size_t j = 0; j < lines.size(); ++j) {
            if (lines[j].normal_axis != 2 || !(motions[j].linear() == motions[i].linear())) {
                continue;
            }
            const Vec3 diff = lines[j].point - lines[i].point;
            const double dz = diff.z() - a * std::floor(diff.z() / a);
            if (std::abs(dz - 0.25) > 1e-9) {
                continue;
            }
            const Vec3 planar(diff.x(), diff.y(), 0);
            const Vec3 off = planar - planar.dot(lines[i].direction) * lines[i].direction;
            const Vec3 wrapped = off - a * (off / a).array().round().matrix();
            if (wrapped.norm() > 1e-9) {
                continue;
            }
            bool same = true;
            for (int v = 0; v < cover.vertex_count() && same; ++v) {
                same = perms[i][perms[j][v]] == translation[v];
            }
            out.translation_composition = same;
            break;
        }
    }

    for (int e = 0; e < std::min<int>(count, static_cast<int>(qr.eigenvalues.size())); ++e) {
        Eigen::VectorXd u(cover.vertex_count());
        for (int v = 0; v < cover.vertex_count(); ++v) {
            u[v] = qr.eigenvectors(quotient.orbit_of_vertex[v], e);
        }
        const double unorm = std::sqrt(u.dot(mass.cwiseProduct(u)));
        const double umax = std::max(u.cwiseAbs().maxCoeff(), 1e-300);
        EigenfunctionLineChecks fc;
        fc.eigen_index = e;
        fc.eigenvalue = qr.eigenvalues[e];
        bool low = false, high = false;
        for (std::size_t i = 0; i < lines.size(); ++i) {
            LineCheck c;
            c.line = static_cast<int>(i);
            c.normal_axis = lines[i].normal_axis;
            c.height = lines[i].height;
            const Eigen::VectorXd anti = 0.5 * (u - compose_with(u, perms[i]));
            c.anti_invariant = std::sqrt(anti.dot(mass.cwiseProduct(anti))) / unorm;
            double tr = 0;
            for (int v : lines[i].vertices) {
                tr = std::max(tr, std::abs(u[v]));
            }
            c.trace = tr / umax;
            if (c.normal_axis == 2 && c.trace < tol) {
                const double h = std::fmod(c.height, 0.5);
                low = low || std::abs(h - 0.125) < 1e-9;
                high = high || std::abs(h - 0.375) < 1e-9;
            }
            fc.lines.push_back(c);
        }
        fc.vanishing_pattern = low && high;
        out.functions.push_back(std::move(fc));
    }
    return out;
}

} // namespace twistedp
