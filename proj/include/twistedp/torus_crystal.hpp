#pragma once

// Exact arithmetic on flat cubic tori T^3(a) = R^3 / (a Z)^3 and on finite
// groups of their rigid motions with signed-permutation linear part.
//
// Exact coordinates are integers in units of a/64, taken modulo 64. Group
// shifts are restricted to quarters of the side (multiples of 16 units).

#include <Eigen/Core>

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace twistedp {

using Vec3 = Eigen::Vector3d;

/// Side length of a cubic torus, kept as an exact rational.
struct Side {
    int num = 1;
    int den = 1;

    double value() const { return static_cast<double>(num) / den; }
    friend bool operator==(const Side& a, const Side& b)
    {
        return static_cast<long>(a.num) * b.den == static_cast<long>(b.num) * a.den;
    }
};

inline constexpr Side kUnitSide{1, 1};
inline constexpr Side kHalfSide{1, 2};

/// Number of exact units per side length.
inline constexpr int kUnits = 64;

using IVec3 = std::array<int, 3>;

int wrap_units(int v);
IVec3 wrap_units(const IVec3& v);

/// Canonical point of T^3(a): coordinates in [0, a).
struct TorusPoint {
    Vec3 coords = Vec3::Zero();
    Side side = kUnitSide;
};

TorusPoint wrap(const Vec3& p, Side side);

/// Projection T^3(1) -> T^3(1/2).
TorusPoint covering_project(const TorusPoint& p);

/// The eight lifts of a T^3(1/2) point in T^3(1), one per tile of the cube tiling.
std::vector<TorusPoint> covering_lifts(const TorusPoint& p);

/// True when `a` and `b` agree modulo the lattice of `side`, within `tol`.
bool congruent(const Vec3& a, const Vec3& b, Side side, double tol);

/// Linear part (Lx)_i = sign[i] * x[perm[i]].
struct SignedPerm {
    std::array<int, 3> perm{0, 1, 2};
    std::array<int, 3> sign{1, 1, 1};

    static SignedPerm identity() { return {}; }
    int determinant() const;
    int trace() const;
    SignedPerm operator*(const SignedPerm& o) const; // (this * o) x = this(o(x))
    SignedPerm inverse() const;
    Eigen::Matrix3d matrix() const;
    IVec3 apply(const IVec3& v) const;
    Vec3 apply(const Vec3& v) const;
    bool is_diagonal() const { return perm == std::array<int, 3>{0, 1, 2}; }

    auto operator<=>(const SignedPerm&) const = default;
};

/// All 48 signed permutations of three coordinates.
std::vector<SignedPerm> all_signed_perms();

/// Rigid motion x -> L x + shift of T^3(side); shift in units of side/64.
class AffineIsometry {
public:
    AffineIsometry() = default;
    /// `shift_quarters` are multiples of side/4.
    AffineIsometry(SignedPerm linear, IVec3 shift_quarters, Side side);

    static AffineIsometry identity(Side side) { return AffineIsometry(SignedPerm{}, {0, 0, 0}, side); }
    static AffineIsometry from_units(SignedPerm linear, IVec3 shift_units, Side side);

    /// Parses the crystallographic "(-x+1/2, -y+1/2, z+1/2)" notation. Fractions
    /// are absolute lengths, e.g. "+1/4" in T^3(1/2) is half the side.
    static AffineIsometry parse(const std::string& text, Side side);

    const SignedPerm& linear() const { return linear_; }
    const IVec3& shift_units() const { return shift_; }
    Side side() const { return side_; }
    Vec3 shift() const;
    int determinant() const { return linear_.determinant(); }
    bool orientation_preserving() const { return determinant() > 0; }
    bool is_identity() const;

    Vec3 apply(const Vec3& p) const;
    IVec3 apply_units(const IVec3& p) const;

    AffineIsometry inverse() const;

    /// Same motion viewed on a torus whose lattice contains this one's
    /// (e.g. T^3(1) -> T^3(1/2)).
    AffineIsometry reduced_to(Side coarser) const;

    std::string to_string() const;

    friend bool operator==(const AffineIsometry& a, const AffineIsometry& b);
    friend bool operator<(const AffineIsometry& a, const AffineIsometry& b);

private:
    SignedPerm linear_;
    IVec3 shift_{0, 0, 0};
    Side side_ = kUnitSide;
};

/// (g o h)(p) = g(h(p)).
AffineIsometry compose(const AffineIsometry& g, const AffineIsometry& h);

enum class MotionKind {
    identity,
    translation,
    screw,
    axial_rotation,
    reflection,
    glide_reflection,
    central_symmetry,
    rotoinversion,
};

const char* to_string(MotionKind kind);

MotionKind classify(const AffineIsometry& g);

/// One connected component of a fixed-point set: base + span(directions).
struct FixedComponent {
    IVec3 base{0, 0, 0};              // units of side/64
    std::vector<IVec3> directions;    // entries in {-1, 0, 1}

    Vec3 base_point(Side side) const;
};

enum class LocusKind { empty, points, lines, planes, space };

const char* to_string(LocusKind kind);

struct FixedLocus {
    LocusKind kind = LocusKind::empty;
    std::vector<FixedComponent> components;
};

/// Exact solution of g(p) = p modulo the lattice.
FixedLocus fixed_locus(const AffineIsometry& g);

/// Finite group of rigid motions of one torus.
class CrystalGroup {
public:
    CrystalGroup() = default;
    CrystalGroup(std::string name, std::vector<AffineIsometry> elements, Side side);

    const std::string& name() const { return name_; }
    const std::vector<AffineIsometry>& elements() const { return elements_; }
    Side side() const { return side_; }
    std::size_t order() const { return elements_.size(); }

    /// Index of `g` in elements(), or -1.
    int index_of(const AffineIsometry& g) const;
    bool contains(const AffineIsometry& g) const { return index_of(g) >= 0; }

    /// Orientation-preserving elements.
    CrystalGroup proper_subgroup() const;
    /// Orientation-reversing elements (not a group).
    std::vector<AffineIsometry> improper_coset() const;

    bool is_closed() const;
    bool is_subgroup_of(const CrystalGroup& other) const;
    bool is_normal_in(const CrystalGroup& other) const;

private:
    std::string name_;
    std::vector<AffineIsometry> elements_;
    Side side_ = kUnitSide;
};

/// Closure of `generators` under composition and inversion.
CrystalGroup generate(const std::vector<AffineIsometry>& generators, Side side, std::string name = {},
                      std::size_t max_order = 4096);

/// The three screw motions generating I222 on T^3(1).
std::vector<AffineIsometry> i222_screws();
CrystalGroup i222();
CrystalGroup immm();
/// Six face mirrors of C(1/2) and the central symmetry at its center.
std::vector<AffineIsometry> immm_mirror_generators();
CrystalGroup trivial_group(Side side);

/// Symmetry group of the Schwarz P surface cos + cos + cos = 0 in T^3(a):
/// the 48 cube symmetries at the origin combined with the body translation a/2 (1,1,1).
CrystalGroup schwarz_p_symmetry(Side side);

struct NetSummary {
    int edges = 0;
    int vertices = 0;
};

struct SingularSet {
    std::vector<FixedLocus> loci;        // one per non-identity element with fixed points
    std::vector<FixedComponent> lines;   // distinct lines in the torus
    std::vector<IVec3> junctions;        // points where lines meet
    NetSummary quotient;
};

/// Union of fixed loci of non-identity elements and the combinatorics of its image
/// in the quotient orbifold. Requires an orientation-preserving group.
SingularSet singular_set(const CrystalGroup& group);

/// Euclidean distance in T^3(side) from `p` to a fixed line.
double distance_to_line(const Vec3& p, const FixedComponent& line, Side side);

std::string group_table(const CrystalGroup& group);

} // namespace twistedp
