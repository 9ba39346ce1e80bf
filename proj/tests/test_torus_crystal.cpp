#include "twistedp/error.hpp"
#include "twistedp/torus_crystal.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace twistedp;

namespace {

AffineIsometry unit(const char* text)
{
    return AffineIsometry::parse(text, kUnitSide);
}

bool close(const Vec3& a, const Vec3& b)
{
    return (a - b).norm() < 1e-15;
}

} // namespace

TEST_CASE("wrap reduces into the fundamental cube")
{
    CHECK(close(wrap({1.25, -0.5, 0.3}, kUnitSide).coords, {0.25, 0.5, 0.3}));
    CHECK(close(wrap({0, 0, 0}, kUnitSide).coords, {0, 0, 0}));
    CHECK((wrap({0.6, 0.6, 0.6}, kHalfSide).coords - Vec3(0.1, 0.1, 0.1)).norm() < 1e-15);
    CHECK_THROWS_AS(wrap({NAN, 0, 0}, kUnitSide), Error);
}

TEST_CASE("covering projection and its eight lifts")
{
    const TorusPoint p = covering_project({{0.75, 0.2, 0.9}, kUnitSide});
    CHECK(p.side == kHalfSide);
    CHECK((p.coords - Vec3(0.25, 0.2, 0.4)).norm() < 1e-15);
    CHECK(covering_project({{0, 0, 0}, kUnitSide}).coords.norm() == 0);
    CHECK_THROWS_AS(covering_project({{0.1, 0.1, 0.1}, kHalfSide}), Error);

    const auto lifts = covering_lifts({{0.1, 0.1, 0.1}, kHalfSide});
    REQUIRE(lifts.size() == 8);
    std::set<std::array<int, 3>> tiles;
    for (const auto& l : lifts) {
        CHECK(l.side == kUnitSide);
        CHECK((covering_project(l).coords - Vec3(0.1, 0.1, 0.1)).norm() < 1e-15);
        tiles.insert({l.coords.x() > 0.5, l.coords.y() > 0.5, l.coords.z() > 0.5});
    }
    CHECK(tiles.size() == 8);
}

TEST_CASE("parse and print round trip")
{
    for (const char* text : {"(x, y, z)", "(-x+1/2, -y+1/2, z+1/2)", "(x+1/2, -y+1/2, -z+1/2)", "(-x, -y, -z)"}) {
        const AffineIsometry g = unit(text);
        CHECK(AffineIsometry::parse(g.to_string(), kUnitSide) == g);
    }
    CHECK(unit("(y, z, x)").linear().perm == std::array<int, 3>{1, 2, 0});
    CHECK_THROWS_AS(unit("(x+1/3, y, z)"), Error);
    CHECK_THROWS_AS(unit("(x, x, z)"), Error);
}

TEST_CASE("composition examples")
{
    const auto s = i222_screws();
    REQUIRE(s.size() == 3);
    CHECK(s[0] == unit("(-x+1/2, -y+1/2, z+1/2)"));
    CHECK(s[1] == unit("(-x+1/2, y+1/2, -z+1/2)"));
    CHECK(compose(s[0], s[1]) == unit("(x, -y, -z)"));
    CHECK(compose(compose(s[0], s[1]), s[2]) == unit("(x+1/2, y+1/2, z+1/2)"));
    const CrystalGroup h = immm();
    for (const auto& g : h.elements()) {
        CHECK(compose(g, g.inverse()).is_identity());
    }
    CHECK_THROWS_AS(compose(s[0], AffineIsometry::identity(kHalfSide)), Error);

    const Vec3 p(0.13, 0.71, 0.37);
    for (const auto& g : h.elements()) {
        for (const auto& k : h.elements()) {
            CHECK(congruent(compose(g, k).apply(p), g.apply(k.apply(p)), kUnitSide, 1e-14));
            CHECK(compose(g, k).determinant() == g.determinant() * k.determinant());
        }
    }
}

TEST_CASE("composition is associative on Immm")
{
    const CrystalGroup h = immm();
    const auto& e = h.elements();
    int failures = 0;
    for (const auto& a : e) {
        for (const auto& b : e) {
            for (const auto& c : e) {
                failures += !(compose(compose(a, b), c) == compose(a, compose(b, c)));
            }
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("generated groups")
{
    const CrystalGroup g = i222();
    const CrystalGroup h = immm();
    CHECK(g.order() == 8);
    CHECK(h.order() == 16);
    CHECK(g.is_closed());
    CHECK(h.is_closed());
    CHECK(g.is_subgroup_of(h));
    CHECK(g.is_normal_in(h));
    for (const auto& x : g.elements()) {
        CHECK(x.determinant() == 1);
    }
    const auto minus = h.improper_coset();
    CHECK(minus.size() == 8);
    for (const auto& x : minus) {
        CHECK(x.determinant() == -1);
        CHECK_FALSE(g.contains(x));
    }
    CHECK(h.proper_subgroup().order() == 8);

    auto gens = i222_screws();
    gens.push_back(unit("(x, y, -z)"));
    const CrystalGroup h2 = generate(gens, kUnitSide);
    CHECK(h2.order() == 16);
    CHECK(h2.is_subgroup_of(h));

    const CrystalGroup h3 = generate(immm_mirror_generators(), kUnitSide);
    CHECK(h3.order() == 16);
    CHECK(h3.is_subgroup_of(h));
    CHECK(immm_mirror_generators().size() == 7);

    // idempotent
    CHECK(generate(h.elements(), kUnitSide).order() == 16);
    CHECK(schwarz_p_symmetry(kHalfSide).order() == 96);
    CHECK(trivial_group(kHalfSide).order() == 1);
}

TEST_CASE("closure bound")
{
    CHECK_THROWS_AS(generate({unit("(y, z, x)"), unit("(x+1/4, y, z)")}, kUnitSide, "", 8), Error);
}

TEST_CASE("motion classification")
{
    CHECK(classify(unit("(x+1/2, -y+1/2, -z+1/2)")) == MotionKind::screw);
    CHECK(classify(unit("(-x, -y, -z)")) == MotionKind::central_symmetry);
    CHECK(classify(unit("(x, y, z)")) == MotionKind::identity);
    CHECK(classify(unit("(x+1/2, y+1/2, z+1/2)")) == MotionKind::translation);
    CHECK(classify(unit("(x, -y, -z)")) == MotionKind::axial_rotation);
    CHECK(classify(unit("(x, y, -z)")) == MotionKind::reflection);
    CHECK(classify(unit("(x+1/2, y, -z)")) == MotionKind::glide_reflection);
}

TEST_CASE("fixed loci")
{
    const FixedLocus axial = fixed_locus(unit("(x, -y, -z)"));
    CHECK(axial.kind == LocusKind::lines);
    CHECK(axial.components.size() == 4);
    for (const auto& c : axial.components) {
        CHECK(c.directions.size() == 1);
        CHECK(c.base[1] % 32 == 0);
        CHECK(c.base[2] % 32 == 0);
    }

    const FixedLocus mirror = fixed_locus(unit("(x, y, -z)"));
    CHECK(mirror.kind == LocusKind::planes);
    std::set<int> heights;
    for (const auto& c : mirror.components) {
        heights.insert(c.base[2]);
    }
    CHECK(heights == std::set<int>{0, 32});

    CHECK(fixed_locus(unit("(-x+1/2, -y+1/2, z+1/2)")).kind == LocusKind::empty);
    CHECK(fixed_locus(unit("(x+1/2, y+1/2, z+1/2)")).kind == LocusKind::empty);

    const FixedLocus central = fixed_locus(unit("(-x, -y, -z)"));
    CHECK(central.kind == LocusKind::points);
    CHECK(central.components.size() == 8);

    CHECK(fixed_locus(AffineIsometry::identity(kUnitSide)).kind == LocusKind::space);
}

TEST_CASE("fixed loci are pointwise fixed along their directions")
{
    const CrystalGroup h = immm();
    for (const auto& g : h.elements()) {
        for (const auto& c : fixed_locus(g).components) {
            Vec3 p = c.base_point(kUnitSide);
            double t = 0.137;
            for (const auto& d : c.directions) {
                p += t * Vec3(d[0], d[1], d[2]);
                t += 0.219;
            }
            CHECK(congruent(g.apply(p), p, kUnitSide, 1e-14));
        }
    }
}

TEST_CASE("singular set of I222")
{
    const SingularSet s = singular_set(i222());
    CHECK(s.lines.size() == 12);
    CHECK(s.quotient.edges == 6);
    CHECK(s.quotient.vertices == 4);
    for (const auto& l : s.lines) {
        CHECK(distance_to_line(l.base_point(kUnitSide), l, kUnitSide) < 1e-15);
    }

    const SingularSet none = singular_set(trivial_group(kUnitSide));
    CHECK(none.lines.empty());
    CHECK(none.quotient.edges == 0);
    CHECK_THROWS_AS(singular_set(immm()), Error);
}

TEST_CASE("group table lists every element")
{
    const std::string t = group_table(immm());
    CHECK(t.find("(x, y, -z)") != std::string::npos);
    CHECK(std::count(t.begin(), t.end(), '\n') >= 16);
}
