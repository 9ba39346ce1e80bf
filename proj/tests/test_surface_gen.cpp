#include "fixtures.hpp"

#include "twistedp/error.hpp"
#include "twistedp/surface_gen.hpp"

#include <doctest.h>

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace twistedp;
using twistedp::testing::sigma;
using twistedp::testing::twisted;

TEST_CASE("level function")
{
    CHECK(std::abs(schwarz_p_level({0.125, 0.125, 0.125}, 0.5)) < 1e-15);
    CHECK(schwarz_p_level({0, 0, 0}, 0.5) == doctest::Approx(3));
}

TEST_CASE("test meshes")
{
    const Topology s = topology(testing::icosphere(2, 0.2));
    CHECK(s.euler == 2);
    CHECK(s.genus == 0);
    CHECK(s.orientable);

    const PeriodicMesh flat = testing::flat_torus(8);
    const Topology t = topology(flat);
    CHECK(t.euler == 0);
    CHECK(t.genus == 1);
    CHECK(lift_consistency_violations(flat, build_half_edges(flat)) == 0);
    CHECK(total_area(flat) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("non-manifold connectivity is rejected")
{
    PeriodicMesh m = testing::icosphere(0, 0.2);
    m.faces.push_back(m.faces[0]);
    m.lifts.push_back(m.lifts[0]);
    CHECK_THROWS_AS(build_half_edges(m), Error);
}

TEST_CASE("seed surface")
{
    const PeriodicMesh seed = seed_p_surface(kHalfSide, 32);
    const Topology t = topology(seed);
    CHECK(t.euler == -4);
    CHECK(t.genus == 3);
    CHECK(t.boundary_loops == 0);
    CHECK(lift_consistency_violations(seed, build_half_edges(seed)) == 0);
    for (int f = 0; f < seed.face_count(); ++f) {
        IVec3 sum{0, 0, 0};
        for (int c = 0; c < 3; ++c) {
            const IVec3 s = seed.half_edge_shift(f, c);
            for (int i = 0; i < 3; ++i) {
                sum[i] += s[i];
            }
        }
        REQUIRE(sum == IVec3{0, 0, 0});
    }

    // within one grid cell of each of its 96 images
    const auto dev = verify_mesh_symmetry(seed, schwarz_p_symmetry(kHalfSide));
    CHECK(dev.size() == 96);
    CHECK(*std::max_element(dev.begin(), dev.end()) < 0.5 / 32);

    CHECK_THROWS_AS(seed_p_surface(kHalfSide, 8), Error);
    CHECK_THROWS_AS(seed_p_surface(kHalfSide, 17), Error);
}

TEST_CASE("relaxation")
{
    const SigmaStage& s = sigma(32);
    const RelaxLog& log = s.log;
    CHECK(log.converged);
    CHECK(log.residuals.back() < 1e-3);
    CHECK(curvature_residual(s.mesh) < 1e-3);
    CHECK(log.areas.back() < total_area(seed_p_surface(kHalfSide, 32)));
    for (std::size_t i = 1; i < log.areas.size(); ++i) {
        REQUIRE(log.areas[i] <= log.areas[i - 1]);
    }
    CHECK(topology(s.mesh).genus == 3);

    RelaxLog again;
    const PeriodicMesh same = minimize_area(s.mesh, {}, &again);
    double moved = 0;
    for (int v = 0; v < same.vertex_count(); ++v) {
        moved = std::max(moved, (same.positions[v] - s.mesh.positions[v]).norm());
    }
    CHECK(again.iterations <= 1);
    CHECK(moved < 1e-3 * mean_edge_length(s.mesh));

    CHECK(total_area(sigma(48).mesh) == doctest::Approx(total_area(s.mesh)).epsilon(0.01));

    RelaxOptions tight;
    tight.tol = 1e-12;
    tight.max_iter = 2;
    CHECK_THROWS_AS(minimize_area(seed_p_surface(kHalfSide, 16), tight), Error);
}

TEST_CASE("symmetry of the relaxed surface")
{
    const PeriodicMesh& m = sigma(32).mesh;
    const auto dev = verify_mesh_symmetry(m, schwarz_p_symmetry(kHalfSide));
    CHECK(dev.front() == 0);
    CHECK(*std::max_element(dev.begin(), dev.end()) < 1e-6 * 0.5);

    const Eigen::Matrix3d R = Eigen::AngleAxisd(0.3, Vec3(1, 2, 3).normalized()).toRotationMatrix();
    const Vec3 c(0.1, 0.2, 0.05);
    CHECK(set_deviation(m, [&](const Vec3& p) { return Vec3(R * (p - c) + c); }) > 0.01);
}

TEST_CASE("pullback and twisted quotient")
{
    const PeriodicMesh& s = sigma(16).mesh;
    const TwistedStage& t = twisted(16);
    const Topology ts = topology(s), tp = topology(t.pullback), tq = topology(t.quotient.mesh);
    CHECK(tp.vertices == 8 * ts.vertices);
    CHECK(tp.edges == 8 * ts.edges);
    CHECK(tp.faces == 8 * ts.faces);
    CHECK(tp.euler == -32);
    CHECK(tp.genus == 17);
    CHECK(tq.genus == 3);
    CHECK(tq.orientable);
    CHECK(t.pullback.side == kUnitSide);
    CHECK(t.quotient.mesh.ambient == Ambient::orbifold);
    CHECK(total_area(t.pullback) == doctest::Approx(8 * total_area(s)).epsilon(1e-9));
    CHECK(total_area(t.quotient.mesh) == doctest::Approx(total_area(t.pullback) / 8).epsilon(1e-12));
    CHECK(t.quotient.singular_margin > 0);

    std::vector<int> size(t.quotient.mesh.vertex_count(), 0);
    for (int q : t.quotient.orbit_of_vertex) {
        ++size[q];
    }
    CHECK(std::all_of(size.begin(), size.end(), [](int k) { return k == 8; }));

    for (int v = 0; v < t.pullback.vertex_count(); ++v) {
        const TorusPoint down = covering_project(wrap(t.pullback.positions[v], kUnitSide));
        REQUIRE(congruent(down.coords, s.positions[v % s.vertex_count()], kHalfSide, 1e-12));
    }

    const QuotientResult same = quotient_mesh(s, trivial_group(kHalfSide));
    CHECK(same.mesh.vertex_count() == s.vertex_count());
    CHECK(same.mesh.face_count() == s.face_count());
    CHECK(topology(same.mesh).genus == 3);

    CHECK_THROWS_AS(pullback_mesh(t.pullback), Error);
}

TEST_CASE("a group with fixed points on the surface does not act freely")
{
    const PeriodicMesh& p = twisted(16).pullback;
    CHECK_THROWS_AS(quotient_mesh(p, immm()), Error);
}

TEST_CASE("straight lines")
{
    const auto lines = detect_lines(sigma(32).mesh);
    CHECK(lines.size() == 12);
    std::array<int, 3> per_axis{0, 0, 0};
    for (const auto& l : lines) {
        REQUIRE(l.normal_axis >= 0);
        ++per_axis[l.normal_axis];
        const bool height = std::abs(l.height - 0.125) < 1e-7 || std::abs(l.height - 0.375) < 1e-7;
        CHECK(height);
        CHECK(l.residual < 1e-9);
    }
    CHECK(per_axis == std::array<int, 3>{4, 4, 4});
    CHECK(detect_lines(testing::icosphere(2, 0.2)).empty());
}

TEST_CASE("Gauss map")
{
    const GaussData g = gauss_data(sigma(32).mesh);
    CHECK(g.total_curvature == doctest::Approx(-8 * std::numbers::pi).epsilon(0.01));
    CHECK(std::lround(g.degree) == 2);
    REQUIRE(g.branch_directions.size() == 8);
    for (const Vec3& d : g.branch_directions) {
        CHECK(d.cwiseAbs().isApprox(Vec3::Constant(1 / std::sqrt(3.0)), 1e-15));
    }
    for (double angle : g.branch_angles) {
        CHECK(angle < 0.2);
    }

    const GaussData sphere = gauss_data(testing::icosphere(3, 0.2));
    CHECK(sphere.total_curvature == doctest::Approx(4 * std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("square catenoid")
{
    const CatenoidResult c = extract_catenoid(sigma(32).mesh);
    CHECK(c.topology.euler == 0);
    CHECK(c.topology.boundary_loops == 2);
    CHECK(c.annulus.loops.size() == 2);
    REQUIRE(c.square_sides.size() == 2);
    // a / sqrt(2) for the side a = 1/2
    CHECK(c.square_sides[0] == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(0.01));
    CHECK(c.square_sides[1] == doctest::Approx(0.5 / std::sqrt(2.0)).epsilon(0.01));
    CHECK(std::abs(std::abs(c.loop_offset.z()) - 0.25) < 0.0025);
    CHECK(c.loop_offset.head<2>().norm() < 0.0025);
    CHECK(c.complement_deviation < 1e-9);

    CHECK_THROWS_AS(extract_catenoid(testing::flat_torus(8)), Error);
}
