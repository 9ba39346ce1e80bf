#include "fixtures.hpp"

#include "twistedp/error.hpp"
#include "twistedp/group_action.hpp"
#include "twistedp/symmetry_analysis.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>

using namespace twistedp;

namespace {

struct Actions {
    GroupActionOnMesh sub;
    GroupActionOnMesh full;
    Eigen::VectorXd mass;
};

const Actions& actions()
{
    static const Actions a = [] {
        const PeriodicMesh& cover = testing::twisted(16).pullback;
        return Actions{build_action(cover, i222()), build_action(cover, immm()), compute_geometry(cover).vertex_area};
    }();
    return a;
}

Eigen::VectorXd random_function(int n, unsigned seed)
{
    std::mt19937 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u(n);
    for (auto& x : u) {
        x = nd(rng);
    }
    return u;
}

double m_dot(const Eigen::VectorXd& u, const Eigen::VectorXd& v, const Eigen::VectorXd& mass)
{
    return u.dot(mass.cwiseProduct(v));
}

} // namespace

TEST_CASE("group actions on the pullback")
{
    const Actions& A = actions();
    const GroupActionOnMesh& g = A.sub;
    CHECK(g.order() == 8);
    CHECK(g.exact);
    const int V = g.vertex_count();
    CHECK(V == testing::twisted(16).pullback.vertex_count());

    for (std::size_t e = 0; e < g.order(); ++e) {
        const bool identity = g.group.elements()[e].is_identity();
        int fixed = 0;
        for (int v = 0; v < V; ++v) {
            fixed += g.perms[e][v] == v;
        }
        CHECK(fixed == (identity ? V : 0));
    }

    const auto& el = A.full.group.elements();
    for (std::size_t i = 0; i < el.size(); ++i) {
        for (std::size_t j = 0; j < el.size(); ++j) {
            const int k = A.full.group.index_of(compose(el[i], el[j]));
            REQUIRE(k >= 0);
            bool same = true;
            for (int v = 0; v < V && same; ++v) {
                // (u o g) o h pulls back through perm_h then perm_g
                same = A.full.perms[k][v] == A.full.perms[i][A.full.perms[j][v]];
            }
            CHECK(same);
        }
    }
}

TEST_CASE("matched permutations agree with the exact table")
{
    const PeriodicMesh& cover = testing::twisted(16).pullback;
    const CrystalGroup g222 = i222();
    for (const auto& g : g222.elements()) {
        const auto exact = exact_vertex_permutation(cover, g);
        REQUIRE(exact.has_value());
        CHECK(*exact == matched_vertex_permutation(cover, g, 1e-8));
    }
    const AffineIsometry off = AffineIsometry::parse("(x+1/4, y, z)", kUnitSide);
    CHECK_THROWS_AS(build_action(cover, generate({off}, kUnitSide)), Error);
}

TEST_CASE("Reynolds projection")
{
    const Actions& A = actions();
    const int V = A.sub.vertex_count();
    const FunctionOnMesh u{"pullback", random_function(V, 1)};
    const FunctionOnMesh v{"pullback", random_function(V, 2)};
    const FunctionOnMesh ru = reynolds_project(u, A.sub);
    CHECK(invariance_residual(ru.values, A.sub) < 1e-14);
    CHECK(invariance_residual(u.values, A.sub) > 0.1);
    CHECK((reynolds_project(ru, A.sub).values - ru.values).cwiseAbs().maxCoeff() < 1e-14);

    const FunctionOnMesh rv = reynolds_project(v, A.sub);
    const double lhs = m_dot(ru.values, v.values, A.mass), rhs = m_dot(u.values, rv.values, A.mass);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));

    // the vertical normal component averages to zero over the z-flipping half of I222
    const auto normals = vertex_normals(testing::twisted(16).pullback);
    FunctionOnMesh nz{"pullback", Eigen::VectorXd(V)};
    for (int i = 0; i < V; ++i) {
        nz.values[i] = normals[i].z();
    }
    CHECK(reynolds_project(nz, A.sub).values.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("odd and even parts")
{
    const Actions& A = actions();
    const int V = A.sub.vertex_count();
    const FunctionOnMesh u = reynolds_project({"pullback", random_function(V, 3)}, A.sub);
    const OddEvenSplit s = odd_even_split(u, A.sub, A.full);
    CHECK((s.odd.values + s.even.values - u.values).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(s.odd_residual < 1e-14);
    CHECK(s.even_residual < 1e-14);
    const double cross = m_dot(s.odd.values, s.even.values, A.mass);
    CHECK(std::abs(cross) <= 1e-10 * m_dot(u.values, u.values, A.mass));

    // u_odd vanishes where a reversing element fixes a vertex
    int fixed = 0;
    for (std::size_t e = 0; e < A.full.order(); ++e) {
        if (A.full.group.elements()[e].determinant() > 0) {
            continue;
        }
        for (int v = 0; v < V; ++v) {
            if (A.full.perms[e][v] == v) {
                ++fixed;
                REQUIRE(std::abs(s.odd.values[v]) < 1e-14);
            }
        }
    }
    CHECK(fixed > 0);

    const OddEvenSplit again = odd_even_split(s.odd, A.sub, A.full);
    CHECK((again.odd.values - s.odd.values).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(again.even.values.cwiseAbs().maxCoeff() < 1e-14);

    const FunctionOnMesh even = reynolds_project(u, A.full);
    const OddEvenSplit e = odd_even_split(even, A.sub, A.full);
    CHECK(e.odd.values.cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(odd_even_split({"pullback", random_function(V, 4)}, A.sub, A.full), Error);
}

TEST_CASE("equivariant spectra")
{
    const PeriodicMesh& s = testing::sigma(16).mesh;
    const GroupActionOnMesh none = build_action(s, trivial_group(kHalfSide));
    const EquivariantReport plain = equivariant_spectrum(s, none, 6);
    const SpectrumReport direct = spectrum(s, 6);
    CHECK(plain.subspace_dim == s.vertex_count());
    for (int i = 0; i < 6; ++i) {
        CHECK(plain.report.eigenvalues[i] == doctest::Approx(direct.eigenvalues[i]).epsilon(1e-8));
    }

    const TwistedStage& t = testing::twisted(16);
    const EquivariantReport eq = equivariant_spectrum(t.pullback, actions().sub, 6);
    CHECK(eq.subspace_dim * 8 == t.pullback.vertex_count());
    CHECK(eq.group == i222().name());
    const SpectrumReport quotient = spectrum(t.quotient.mesh, 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(eq.report.eigenvalues[i] == doctest::Approx(quotient.eigenvalues[i]).epsilon(0.02));
    }
    CHECK(eq.report.eigenvalues[0] == doctest::Approx(direct.eigenvalues[0]).epsilon(1e-6));
    CHECK(invariance_residual(eq.report.eigenvectors.col(1), actions().sub) < 1e-10);
}

TEST_CASE("half-turns about the straight lines")
{
    const TwistedStage& t = testing::twisted(16);
    const auto lines = detect_lines(t.pullback);
    REQUIRE(lines.size() >= 12);
    for (const auto& l : std::vector<StraightLine>(lines.begin(), lines.begin() + 6)) {
        const AffineIsometry r = axial_symmetry(l, kUnitSide);
        CHECK(classify(r) == MotionKind::axial_rotation);
        CHECK(set_deviation(t.pullback, [&](const Vec3& p) { return r.apply(p); }) < 1e-9);
    }

    SpectrumReport q = spectrum(t.quotient.mesh, 6);
    const AxialLineReport ax = axial_line_invariance_check(q, t.quotient, t.pullback, lines, 2);
    CHECK(ax.translation_composition);
    CHECK(ax.lines == static_cast<int>(lines.size()));
    REQUIRE(ax.functions.size() == 2);
    for (const auto& c : ax.functions[0].lines) {
        REQUIRE(c.anti_invariant < 1e-8);
    }
    CHECK_FALSE(ax.functions[0].vanishing_pattern);

    q.eigenvectors.col(1) = random_function(q.eigenvectors.rows(), 9);
    const AxialLineReport noisy = axial_line_invariance_check(q, t.quotient, t.pullback, lines, 2);
    double anti = 0;
    for (const auto& c : noisy.functions[1].lines) {
        anti = std::max(anti, c.anti_invariant);
    }
    CHECK(anti > 0.1);

    CHECK_THROWS_AS(axial_line_invariance_check(q, t.quotient, t.pullback, {}, 2), Error);
}
