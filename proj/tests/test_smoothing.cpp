#include "twistedp/error.hpp"
#include "twistedp/smoothing.hpp"

#include <doctest.h>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace twistedp;
using std::numbers::pi;

namespace {

constexpr double kEps = 0.05;

const Vec4 kCenter(0.25, 0.25, 0.25, 0);

} // namespace

TEST_CASE("distance to the cube")
{
    CHECK(dist_cube({0.25, 0.25, 0.25, 0}) == 0);
    CHECK(dist_cube({0.5 + 0.03, 0.25, 0.25, 0}) == doctest::Approx(0.03).epsilon(1e-14));
    CHECK(dist_cube({-0.1, -0.1, -0.1, 0}) == doctest::Approx(0.1 * std::sqrt(3.0)).epsilon(1e-14));
    CHECK(dist_cube({0.25, 0.25, 0.25, 0.2}) == doctest::Approx(0.2));

    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(-0.5, 1.0);
    for (int i = 0; i < 200; ++i) {
        const Vec4 p(u(rng), u(rng), u(rng), u(rng));
        REQUIRE(dist_cube(2 * kCenter - p) == doctest::Approx(dist_cube(p)).epsilon(1e-14));
    }
}

TEST_CASE("piece classification")
{
    const auto cap = classify_boundary_point({0.25, 0.25, 0.25, kEps}, kEps);
    CHECK(cap.piece.kind == PieceKind::flat_cap);
    CHECK(cap.piece.clamped() == 0);

    const double s = kEps / std::sqrt(2.0);
    const auto face = classify_boundary_point({0.5 + s, 0.2, 0.3, s}, kEps);
    CHECK(face.piece.kind == PieceKind::face_cylinder);
    CHECK(face.piece.clamp == std::array<int, 3>{1, 0, 0});

    const double e = kEps / std::sqrt(3.0);
    const auto edge = classify_boundary_point({-e, -e, 0.1, e}, kEps);
    CHECK(edge.piece.kind == PieceKind::edge_cylinder);
    CHECK(edge.piece.clamp == std::array<int, 3>{-1, -1, 0});

    const double v = kEps / 2;
    const auto corner = classify_boundary_point({0.5 + v, -v, 0.5 + v, v}, kEps);
    CHECK(corner.piece.kind == PieceKind::vertex_cap);
    CHECK(corner.piece.clamp == std::array<int, 3>{1, -1, 1});

    // exactly on the flat/face interface: the piece with fewer clamps wins
    CHECK(classify_boundary_point({0.5, 0.25, 0.25, kEps}, kEps).piece.kind == PieceKind::flat_cap);

    for (const auto& b : {cap, face, edge, corner}) {
        CHECK(b.piece.name().size() > 0);
    }

    CHECK_THROWS_AS(classify_boundary_point({0.25, 0.25, 0.25, 2 * kEps}, kEps), Error);
    CHECK_THROWS_AS(classify_boundary_point({0.5 + kEps, 0.25, 0.25, -1e-3}, kEps), Error);
}

TEST_CASE("reconstruction from the foot point")
{
    std::mt19937 rng(4);
    std::normal_distribution<double> nd;
    std::uniform_real_distribution<double> u(-0.1, 0.6);
    for (int i = 0; i < 500; ++i) {
        Vec4 dir(nd(rng), nd(rng), nd(rng), std::abs(nd(rng)));
        const Eigen::Vector3d foot(std::clamp(u(rng), 0.0, 0.5), std::clamp(u(rng), 0.0, 0.5),
                                   std::clamp(u(rng), 0.0, 0.5));
        // outward directions only: no inward component on clamped coordinates
        for (int k = 0; k < 3; ++k) {
            if (foot[k] > 0 && foot[k] < 0.5) {
                dir[k] = 0;
            } else if (foot[k] == 0) {
                dir[k] = -std::abs(dir[k]);
            } else {
                dir[k] = std::abs(dir[k]);
            }
        }
        const Vec4 p = Vec4(foot.x(), foot.y(), foot.z(), 0) + kEps * dir.normalized();
        const BoundaryPoint b = classify_boundary_point(p, kEps);
        REQUIRE((reconstruct(b, p, kEps) - p).norm() < 1e-12);
        REQUIRE((b.foot - foot).norm() < 1e-12);
    }
}

TEST_CASE("closed-form curvatures")
{
    using A = std::array<double, 3>;
    CHECK(piece_curvatures(PieceKind::flat_cap, kEps) == A{0, 0, 0});
    CHECK(piece_curvatures(PieceKind::face_cylinder, kEps) == A{1 / kEps, 0, 0});
    CHECK(piece_curvatures(PieceKind::edge_cylinder, kEps) == A{1 / kEps, 1 / kEps, 0});
    CHECK(piece_curvatures(PieceKind::vertex_cap, kEps) == A{1 / kEps, 1 / kEps, 1 / kEps});

    const double s = kEps / std::sqrt(2.0);
    const auto face = measured_curvatures({0.5 + s, 0.2, 0.3, s}, kEps);
    CHECK(face[0] == doctest::Approx(1 / kEps).epsilon(1e-12));
    CHECK(std::abs(face[1]) < 1e-9);
    CHECK(std::abs(face[2]) < 1e-9);

    const double v = kEps / 2;
    for (double k : measured_curvatures({-v, -v, -v, v}, kEps)) {
        CHECK(k == doctest::Approx(1 / kEps).epsilon(1e-12));
    }
    for (double k : measured_curvatures({0.1, 0.2, 0.3, kEps}, kEps)) {
        CHECK(std::abs(k) < 1e-12);
    }
}

TEST_CASE("C1 gluing")
{
    const GluingReport g = c1_gluing_check(kEps, 500, 3);
    CHECK(g.interfaces.size() == 3);
    CHECK(g.normal_jump_max < 1e-9);
    CHECK(g.orthogonality_max < 1e-9);
    bool flat_face = false;
    for (const auto& i : g.interfaces) {
        CHECK(i.samples > 0);
        if (i.name == "flat_cap/face_cylinder") {
            flat_face = true;
            CHECK(i.curvature_jump == doctest::Approx(1 / kEps));
        }
    }
    CHECK(flat_face);

    const Vec4 n1 = piece_normal({PieceKind::flat_cap, {0, 0, 0}}, {0.5, 0.3, 0.2, kEps});
    const Vec4 n2 = piece_normal({PieceKind::face_cylinder, {1, 0, 0}}, {0.5, 0.3, 0.2, kEps});
    CHECK((n1 - n2).norm() < 1e-15);
    CHECK((n1 - Vec4(0, 0, 0, 1)).norm() < 1e-15);
}

TEST_CASE("antipodal identification")
{
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-0.3, 0.8);
    int tested = 0;
    while (tested < 200) {
        const Eigen::Vector3d q(u(rng), u(rng), u(rng));
        const Eigen::Vector3d foot = q.cwiseMax(0.0).cwiseMin(0.5);
        if ((q - foot).norm() < 1e-3) {
            continue;
        }
        ++tested;
        const Eigen::Vector3d x = foot + kEps * (q - foot).normalized();
        const Vec4 p(x.x(), x.y(), x.z(), 0);
        const Vec4 partner = antipodal_identify(p, kEps);
        CHECK(partner[3] == 0);
        CHECK(dist_cube(partner) == doctest::Approx(kEps).epsilon(1e-13));
        CHECK((antipodal_identify(partner, kEps) - p).norm() < 1e-15);
        CHECK(((p + partner) / 2 - kCenter).norm() < 1e-15);
    }
    CHECK_THROWS_AS(antipodal_identify({0.25, 0.25, 0.25, kEps}, kEps), Error);
    CHECK_THROWS_AS(antipodal_identify({0.5 + 2 * kEps, 0.25, 0.25, 0}, kEps), Error);
}

TEST_CASE("dilation chart")
{
    const DilationChart chart = build_dilation(kEps);
    CHECK(chart.ratio() == doctest::Approx((0.5 + pi * kEps) / 0.5).epsilon(1e-15));
    CHECK((chart.map({0.25, 0.25, 0.25}) - Vec4(0.25, 0.25, 0.25, kEps)).norm() < 1e-15);

    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(0, 0.5);
    int tested = 0;
    for (int i = 0; i < 1000; ++i) {
        const Eigen::Vector3d p(u(rng), u(rng), u(rng));
        if (!chart.in_domain(p)) {
            continue;
        }
        ++tested;
        const Vec4 q = chart.map(p);
        REQUIRE(dist_cube(q) == doctest::Approx(kEps).epsilon(1e-12));
        REQUIRE((chart.inverse(q) - p).norm() < 1e-12);
        const Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(chart.jacobian(p));
        for (int k = 0; k < 3; ++k) {
            REQUIRE(std::abs(svd.singularValues()[k] - chart.ratio()) < 1e-12);
        }
    }
    CHECK(tested > 100);

    const DilationReport r = measure_dilation(chart, 1000, 1);
    CHECK(r.ratio_spread < 1e-12);
    CHECK(std::abs(r.ratio_measured - r.ratio_cubes) < 1e-12);
    CHECK(r.developed_side == doctest::Approx(0.5 + pi * kEps).epsilon(1e-12));
    CHECK(r.polyline_ratio == doctest::Approx(r.ratio_cubes).epsilon(1e-12));
    CHECK(r.ratio_stated == doctest::Approx(1 + pi / 2 * kEps));
    CHECK_FALSE(r.stated_constant_matches);
    CHECK(r.screw_gluing_max < 1e-12);

    CHECK_THROWS_AS(build_dilation(0), Error);
    CHECK_THROWS_AS(build_dilation(1 / (2 * pi) + 1e-9), Error);
    CHECK_NOTHROW(build_dilation(1 / (2 * pi)));
}

TEST_CASE("smoothing report")
{
    const SmoothingReport r = smoothing_report(kEps, 4000, 1);
    CHECK(r.unclassified == 0);
    for (int n : r.piece_counts) {
        CHECK(n > 0);
    }
    CHECK(r.piece_counts[0] + r.piece_counts[1] + r.piece_counts[2] + r.piece_counts[3] == r.samples);
    CHECK(r.reconstruction_max < 1e-10);
    CHECK(r.curvature_table.size() == 4);
    for (const auto& row : r.curvature_table) {
        CHECK(row.max_error < 1e-9 / kEps);
    }
    CHECK(r.antipodal_max < 1e-12);

    const SmoothingReport again = smoothing_report(kEps, 4000, 1);
    CHECK(again.reconstruction_max == r.reconstruction_max);
    CHECK(again.piece_counts == r.piece_counts);
}
