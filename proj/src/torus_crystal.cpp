#include "twistedp/torus_crystal.hpp"

#include "twistedp/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace twistedp {

int wrap_units(int v)
{
    const int r = v % kUnits;
    return r < 0 ? r + kUnits : r;
}

IVec3 wrap_units(const IVec3& v)
{
    return {wrap_units(v[0]), wrap_units(v[1]), wrap_units(v[2])};
}

TorusPoint wrap(const Vec3& p, Side side)
{
    if (!p.allFinite()) {
        throw Error(ErrorKind::non_finite, "wrap: non-finite coordinates");
    }
    const double a = side.value();
    if (!(a > 0)) {
        throw Error(ErrorKind::invalid_argument, "wrap: side must be positive");
    }
    TorusPoint out;
    out.side = side;
    for (int i = 0; i < 3; ++i) {
        double c = p[i] - a * std::floor(p[i] / a);
        if (c >= a) {
            c -= a;
        }
        if (c < 0) {
            c = 0;
        }
        out.coords[i] = c;
    }
    return out;
}

TorusPoint covering_project(const TorusPoint& p)
{
    if (!(p.side == kUnitSide)) {
        throw Error(ErrorKind::side_mismatch, "covering_project expects a point of T^3(1)");
    }
    return wrap(p.coords, kHalfSide);
}

std::vector<TorusPoint> covering_lifts(const TorusPoint& p)
{
    if (!(p.side == kHalfSide)) {
        throw Error(ErrorKind::side_mismatch, "covering_lifts expects a point of T^3(1/2)");
    }
    std::vector<TorusPoint> lifts;
    for (int k = 0; k < 8; ++k) {
        const Vec3 alpha(0.5 * (k & 1), 0.5 * ((k >> 1) & 1), 0.5 * ((k >> 2) & 1));
        lifts.push_back(wrap(p.coords + alpha, kUnitSide));
    }
    return lifts;
}

bool congruent(const Vec3& a, const Vec3& b, Side side, double tol)
{
    const double L = side.value();
    for (int i = 0; i < 3; ++i) {
        const double d = a[i] - b[i];
        if (std::abs(d - L * std::round(d / L)) > tol) {
            return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// SignedPerm

int SignedPerm::determinant() const
{
    // parity of the permutation via inversion count
    int inversions = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
            if (perm[i] > perm[j]) {
                ++inversions;
            }
        }
    }
    const int parity = (inversions % 2 == 0) ? 1 : -1;
    return parity * sign[0] * sign[1] * sign[2];
}

int SignedPerm::trace() const
{
    int t = 0;
    for (int i = 0; i < 3; ++i) {
        if (perm[i] == i) {
            t += sign[i];
        }
    }
    return t;
}

SignedPerm SignedPerm::operator*(const SignedPerm& o) const
{
    SignedPerm c;
    for (int i = 0; i < 3; ++i) {
        c.perm[i] = o.perm[perm[i]];
        c.sign[i] = sign[i] * o.sign[perm[i]];
    }
    return c;
}

SignedPerm SignedPerm::inverse() const
{
    SignedPerm inv;
    for (int i = 0; i < 3; ++i) {
        inv.perm[perm[i]] = i;
        inv.sign[perm[i]] = sign[i];
    }
    return inv;
}

Eigen::Matrix3d SignedPerm::matrix() const
{
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    for (int i = 0; i < 3; ++i) {
        m(i, perm[i]) = sign[i];
    }
    return m;
}

IVec3 SignedPerm::apply(const IVec3& v) const
{
    return {sign[0] * v[perm[0]], sign[1] * v[perm[1]], sign[2] * v[perm[2]]};
}

Vec3 SignedPerm::apply(const Vec3& v) const
{
    return {sign[0] * v[perm[0]], sign[1] * v[perm[1]], sign[2] * v[perm[2]]};
}

std::vector<SignedPerm> all_signed_perms()
{
    std::vector<SignedPerm> out;
    std::array<int, 3> p{0, 1, 2};
    do {
        for (int s = 0; s < 8; ++s) {
            SignedPerm sp;
            sp.perm = p;
            sp.sign = {(s & 1) ? -1 : 1, (s & 2) ? -1 : 1, (s & 4) ? -1 : 1};
            out.push_back(sp);
        }
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

// ---------------------------------------------------------------------------
// AffineIsometry

namespace {

void check_quarter_units(const IVec3& shift)
{
    for (int v : shift) {
        if (v % (kUnits / 4) != 0) {
            throw Error(ErrorKind::invalid_argument, "isometry shifts must be multiples of a quarter side");
        }
    }
}

long gcd_long(long a, long b) { return std::gcd(a < 0 ? -a : a, b < 0 ? -b : b); }

std::string fraction_string(long num, long den)
{
    const long g = gcd_long(num, den);
    num /= g;
    den /= g;
    if (den < 0) {
        num = -num;
        den = -den;
    }
    std::ostringstream os;
    os << num;
    if (den != 1) {
        os << '/' << den;
    }
    return os.str();
}

} // namespace

AffineIsometry::AffineIsometry(SignedPerm linear, IVec3 shift_quarters, Side side)
    : linear_(linear), side_(side)
{
    if (!(side.value() > 0)) {
        throw Error(ErrorKind::invalid_argument, "isometry side must be positive");
    }
    shift_ = wrap_units(IVec3{shift_quarters[0] * (kUnits / 4), shift_quarters[1] * (kUnits / 4),
                              shift_quarters[2] * (kUnits / 4)});
}

AffineIsometry AffineIsometry::from_units(SignedPerm linear, IVec3 shift_units, Side side)
{
    check_quarter_units(wrap_units(shift_units));
    AffineIsometry g(linear, {0, 0, 0}, side);
    g.shift_ = wrap_units(shift_units);
    return g;
}

AffineIsometry AffineIsometry::parse(const std::string& text, Side side)
{
    std::string s;
    for (char c : text) {
        if (c != ' ' && c != '(' && c != ')') {
            s.push_back(c);
        }
    }
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        parts.push_back(item);
    }
    if (parts.size() != 3) {
        throw Error(ErrorKind::invalid_argument, "cannot parse isometry '" + text + "'");
    }
    SignedPerm lin;
    IVec3 units{0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        const std::string& p = parts[i];
        int var = -1;
        int var_sign = 1;
        // shift accumulated as num/den in absolute length
        long num = 0;
        long den = 1;
        std::size_t pos = 0;
        while (pos < p.size()) {
            int sgn = 1;
            while (pos < p.size() && (p[pos] == '+' || p[pos] == '-')) {
                if (p[pos] == '-') {
                    sgn = -sgn;
                }
                ++pos;
            }
            if (pos >= p.size()) {
                throw Error(ErrorKind::invalid_argument, "dangling sign in '" + text + "'");
            }
            const char c = p[pos];
            if (c == 'x' || c == 'y' || c == 'z') {
                if (var >= 0) {
                    throw Error(ErrorKind::invalid_argument, "two variables in one coordinate of '" + text + "'");
                }
                var = c - 'x';
                var_sign = sgn;
                ++pos;
            } else if (std::isdigit(static_cast<unsigned char>(c))) {
                std::size_t used = 0;
                const long a = std::stol(p.substr(pos), &used);
                pos += used;
                long b = 1;
                if (pos < p.size() && p[pos] == '/') {
                    ++pos;
                    b = std::stol(p.substr(pos), &used);
                    pos += used;
                }
                num = num * b + sgn * a * den;
                den = den * b;
            } else {
                throw Error(ErrorKind::invalid_argument, "unexpected character in '" + text + "'");
            }
        }
        if (var < 0) {
            throw Error(ErrorKind::invalid_argument, "missing variable in '" + text + "'");
        }
        lin.perm[i] = var;
        lin.sign[i] = var_sign;
        // units = shift / side * kUnits
        const long u_num = num * side.den * kUnits;
        const long u_den = den * side.num;
        if (u_num % u_den != 0) {
            throw Error(ErrorKind::invalid_argument, "shift in '" + text + "' is not a multiple of side/64");
        }
        units[i] = static_cast<int>(u_num / u_den % kUnits);
    }
    std::array<int, 3> seen{0, 0, 0};
    for (int v : lin.perm) {
        seen[v]++;
    }
    if (seen != std::array<int, 3>{1, 1, 1}) {
        throw Error(ErrorKind::invalid_argument, "linear part of '" + text + "' is not a permutation");
    }
    return from_units(lin, units, side);
}

Vec3 AffineIsometry::shift() const
{
    const double a = side_.value();
    return Vec3(shift_[0], shift_[1], shift_[2]) * (a / kUnits);
}

bool AffineIsometry::is_identity() const
{
    return linear_ == SignedPerm{} && shift_ == IVec3{0, 0, 0};
}

Vec3 AffineIsometry::apply(const Vec3& p) const { return linear_.apply(p) + shift(); }

IVec3 AffineIsometry::apply_units(const IVec3& p) const
{
    IVec3 q = linear_.apply(p);
    for (int i = 0; i < 3; ++i) {
        q[i] += shift_[i];
    }
    return wrap_units(q);
}

AffineIsometry AffineIsometry::inverse() const
{
    AffineIsometry inv;
    inv.side_ = side_;
    inv.linear_ = linear_.inverse();
    const IVec3 t = inv.linear_.apply(shift_);
    inv.shift_ = wrap_units(IVec3{-t[0], -t[1], -t[2]});
    return inv;
}

AffineIsometry AffineIsometry::reduced_to(Side coarser) const
{
    // absolute shift = units/64 * side; in coarser units multiply by side/coarser
    const long num = static_cast<long>(side_.num) * coarser.den;
    const long den = static_cast<long>(side_.den) * coarser.num;
    IVec3 u{};
    for (int i = 0; i < 3; ++i) {
        const long v = shift_[i] * num;
        if (v % den != 0) {
            throw Error(ErrorKind::side_mismatch, "shift does not reduce to the coarser torus");
        }
        u[i] = static_cast<int>(v / den);
    }
    return from_units(linear_, u, coarser);
}

std::string AffineIsometry::to_string() const
{
    static const char* vars = "xyz";
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < 3; ++i) {
        if (i) {
            os << ", ";
        }
        if (linear_.sign[i] < 0) {
            os << '-';
        }
        os << vars[linear_.perm[i]];
        if (shift_[i] != 0) {
            os << '+' << fraction_string(static_cast<long>(shift_[i]) * side_.num, static_cast<long>(kUnits) * side_.den);
        }
    }
    os << ')';
    return os.str();
}

bool operator==(const AffineIsometry& a, const AffineIsometry& b)
{
    return a.side_ == b.side_ && a.linear_ == b.linear_ && a.shift_ == b.shift_;
}

bool operator<(const AffineIsometry& a, const AffineIsometry& b)
{
    if (a.linear_ != b.linear_) {
        return a.linear_ < b.linear_;
    }
    return a.shift_ < b.shift_;
}

AffineIsometry compose(const AffineIsometry& g, const AffineIsometry& h)
{
    if (!(g.side() == h.side())) {
        throw Error(ErrorKind::side_mismatch, "compose: isometries act on different tori");
    }
    const IVec3 t = g.linear().apply(h.shift_units());
    const IVec3 s = g.shift_units();
    return AffineIsometry::from_units(g.linear() * h.linear(), {t[0] + s[0], t[1] + s[1], t[2] + s[2]}, g.side());
}

// ---------------------------------------------------------------------------
// Classification and fixed loci

const char* to_string(MotionKind kind)
{
    switch (kind) {
    case MotionKind::identity: return "identity";
    case MotionKind::translation: return "translation";
    case MotionKind::screw: return "screw";
    case MotionKind::axial_rotation: return "axial_rotation";
    case MotionKind::reflection: return "reflection";
    case MotionKind::glide_reflection: return "glide_reflection";
    case MotionKind::central_symmetry: return "central_symmetry";
    case MotionKind::rotoinversion: return "rotoinversion";
    }
    return "unknown";
}

const char* to_string(LocusKind kind)
{
    switch (kind) {
    case LocusKind::empty: return "empty";
    case LocusKind::points: return "points";
    case LocusKind::lines: return "lines";
    case LocusKind::planes: return "planes";
    case LocusKind::space: return "space";
    }
    return "unknown";
}

MotionKind classify(const AffineIsometry& g)
{
    const SignedPerm& L = g.linear();
    const bool has_fixed = fixed_locus(g).kind != LocusKind::empty;
    if (L == SignedPerm{}) {
        return g.is_identity() ? MotionKind::identity : MotionKind::translation;
    }
    if (L.determinant() > 0) {
        return has_fixed ? MotionKind::axial_rotation : MotionKind::screw;
    }
    if (L.trace() == -3) {
        return MotionKind::central_symmetry;
    }
    if (L.trace() == 1) {
        return has_fixed ? MotionKind::reflection : MotionKind::glide_reflection;
    }
    return MotionKind::rotoinversion;
}

Vec3 FixedComponent::base_point(Side side) const
{
    return Vec3(base[0], base[1], base[2]) * (side.value() / kUnits);
}

FixedLocus fixed_locus(const AffineIsometry& g)
{
    const SignedPerm& L = g.linear();
    const IVec3& t = g.shift_units();

    struct CycleSolution {
        bool free = false;
        std::vector<int> coords;        // j_0, j_1, ...
        std::vector<int> alpha;         // x_{j_k} = alpha_k X + beta_k
        std::vector<int> beta;
        std::vector<int> choices;       // X values when not free
    };
    std::vector<CycleSolution> cycles;
    std::array<bool, 3> visited{false, false, false};
    for (int start = 0; start < 3; ++start) {
        if (visited[start]) {
            continue;
        }
        CycleSolution cyc;
        int j = start;
        do {
            visited[j] = true;
            cyc.coords.push_back(j);
            j = L.perm[j];
        } while (j != start);
        const int len = static_cast<int>(cyc.coords.size());
        cyc.alpha.assign(len, 0);
        cyc.beta.assign(len, 0);
        cyc.alpha[0] = 1;
        // x_i = s_i x_{perm(i)} + t_i, walked backwards from x_{j_L} = x_{j_0} = X
        int a_next = 1;
        int b_next = 0;
        for (int k = len - 1; k >= 1; --k) {
            const int jk = cyc.coords[k];
            cyc.alpha[k] = L.sign[jk] * a_next;
            cyc.beta[k] = L.sign[jk] * b_next + t[jk];
            a_next = cyc.alpha[k];
            b_next = cyc.beta[k];
        }
        const int j0 = cyc.coords[0];
        const int sigma = L.sign[j0] * a_next;
        const int c = wrap_units(L.sign[j0] * b_next + t[j0]);
        if (sigma == 1) {
            if (c != 0) {
                return {}; // empty
            }
            cyc.free = true;
        } else {
            // 2X = c mod 64; c is even because shifts are multiples of 16
            cyc.choices = {c / 2, c / 2 + kUnits / 2};
        }
        cycles.push_back(std::move(cyc));
    }

    FixedLocus locus;
    int free_count = 0;
    for (const auto& c : cycles) {
        free_count += c.free ? 1 : 0;
    }
    static const LocusKind kinds[] = {LocusKind::points, LocusKind::lines, LocusKind::planes, LocusKind::space};
    locus.kind = kinds[free_count];

    // Cartesian product of discrete choices
    std::vector<std::size_t> radix;
    for (const auto& c : cycles) {
        radix.push_back(c.free ? 1 : c.choices.size());
    }
    std::size_t total = 1;
    for (auto r : radix) {
        total *= r;
    }
    for (std::size_t idx = 0; idx < total; ++idx) {
        FixedComponent comp;
        std::size_t rem = idx;
        for (std::size_t ci = 0; ci < cycles.size(); ++ci) {
            const auto& c = cycles[ci];
            const std::size_t pick = rem % radix[ci];
            rem /= radix[ci];
            const int X = c.free ? 0 : c.choices[pick];
            IVec3 dir{0, 0, 0};
            for (std::size_t k = 0; k < c.coords.size(); ++k) {
                comp.base[c.coords[k]] = wrap_units(c.alpha[k] * X + c.beta[k]);
                dir[c.coords[k]] = c.alpha[k];
            }
            if (c.free) {
                comp.directions.push_back(dir);
            }
        }
        locus.components.push_back(comp);
    }
    return locus;
}

// ---------------------------------------------------------------------------
// CrystalGroup

CrystalGroup::CrystalGroup(std::string name, std::vector<AffineIsometry> elements, Side side)
    : name_(std::move(name)), elements_(std::move(elements)), side_(side)
{
    for (const auto& g : elements_) {
        if (!(g.side() == side_)) {
            throw Error(ErrorKind::side_mismatch, "group element on a different torus");
        }
    }
}

int CrystalGroup::index_of(const AffineIsometry& g) const
{
    for (std::size_t i = 0; i < elements_.size(); ++i) {
        if (elements_[i] == g) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

CrystalGroup CrystalGroup::proper_subgroup() const
{
    std::vector<AffineIsometry> out;
    for (const auto& g : elements_) {
        if (g.orientation_preserving()) {
            out.push_back(g);
        }
    }
    return CrystalGroup(name_ + "+", std::move(out), side_);
}

std::vector<AffineIsometry> CrystalGroup::improper_coset() const
{
    std::vector<AffineIsometry> out;
    for (const auto& g : elements_) {
        if (!g.orientation_preserving()) {
            out.push_back(g);
        }
    }
    return out;
}

bool CrystalGroup::is_closed() const
{
    if (!contains(AffineIsometry::identity(side_))) {
        return false;
    }
    for (const auto& g : elements_) {
        if (!contains(g.inverse())) {
            return false;
        }
        for (const auto& h : elements_) {
            if (!contains(compose(g, h))) {
                return false;
            }
        }
    }
    return true;
}

bool CrystalGroup::is_subgroup_of(const CrystalGroup& other) const
{
    if (!is_closed()) {
        return false;
    }
    return std::all_of(elements_.begin(), elements_.end(), [&](const auto& g) { return other.contains(g); });
}

bool CrystalGroup::is_normal_in(const CrystalGroup& other) const
{
    if (!is_subgroup_of(other)) {
        return false;
    }
    for (const auto& g : other.elements()) {
        const AffineIsometry gi = g.inverse();
        for (const auto& h : elements_) {
            if (!contains(compose(compose(g, h), gi))) {
                return false;
            }
        }
    }
    return true;
}

CrystalGroup generate(const std::vector<AffineIsometry>& generators, Side side, std::string name,
                      std::size_t max_order)
{
    for (const auto& g : generators) {
        if (!(g.side() == side)) {
            throw Error(ErrorKind::side_mismatch, "generate: generator on a different torus");
        }
    }
    std::vector<AffineIsometry> elems{AffineIsometry::identity(side)};
    std::set<AffineIsometry> seen(elems.begin(), elems.end());
    for (std::size_t i = 0; i < elems.size(); ++i) {
        for (const auto& g : generators) {
            for (const AffineIsometry& y : {compose(g, elems[i]), compose(g.inverse(), elems[i])}) {
                if (seen.insert(y).second) {
                    elems.push_back(y);
                    if (elems.size() > max_order) {
                        throw Error(ErrorKind::closure_overflow,
                                    "generated set exceeds " + std::to_string(max_order) + " elements");
                    }
                }
            }
        }
    }
    return CrystalGroup(std::move(name), std::move(elems), side);
}

std::vector<AffineIsometry> i222_screws()
{
    return {AffineIsometry::parse("(-x+1/2, -y+1/2, z+1/2)", kUnitSide),
            AffineIsometry::parse("(-x+1/2, y+1/2, -z+1/2)", kUnitSide),
            AffineIsometry::parse("(x+1/2, -y+1/2, -z+1/2)", kUnitSide)};
}

CrystalGroup i222() { return generate(i222_screws(), kUnitSide, "I222"); }

CrystalGroup immm()
{
    auto gens = i222_screws();
    gens.push_back(AffineIsometry::parse("(x, y, -z)", kUnitSide));
    return generate(gens, kUnitSide, "Immm");
}

std::vector<AffineIsometry> immm_mirror_generators()
{
    return {AffineIsometry::parse("(-x, y, z)", kUnitSide),   AffineIsometry::parse("(-x+1, y, z)", kUnitSide),
            AffineIsometry::parse("(x, -y, z)", kUnitSide),   AffineIsometry::parse("(x, -y+1, z)", kUnitSide),
            AffineIsometry::parse("(x, y, -z)", kUnitSide),   AffineIsometry::parse("(x, y, -z+1)", kUnitSide),
            AffineIsometry::parse("(-x+1/2, -y+1/2, -z+1/2)", kUnitSide)};
}

CrystalGroup trivial_group(Side side) { return CrystalGroup("1", {AffineIsometry::identity(side)}, side); }

CrystalGroup schwarz_p_symmetry(Side side)
{
    std::vector<AffineIsometry> elems;
    for (int body = 0; body < 2; ++body) {
        for (const auto& sp : all_signed_perms()) {
            elems.emplace_back(sp, IVec3{2 * body, 2 * body, 2 * body}, side);
        }
    }
    // identity first
    std::stable_partition(elems.begin(), elems.end(), [](const auto& g) { return g.is_identity(); });
    return CrystalGroup("Im-3m", std::move(elems), side);
}

// ---------------------------------------------------------------------------
// Singular set

namespace {

bool point_on_line(const IVec3& p, const FixedComponent& line, int* param = nullptr)
{
    const IVec3& d = line.directions.front();
    int s = -1;
    for (int i = 0; i < 3; ++i) {
        const int diff = wrap_units(p[i] - line.base[i]);
        if (d[i] == 0) {
            if (diff != 0) {
                return false;
            }
        } else {
            const int si = wrap_units(d[i] * diff);
            if (s >= 0 && si != s) {
                return false;
            }
            s = si;
        }
    }
    if (param) {
        *param = s;
    }
    return true;
}

bool same_line(const FixedComponent& a, const FixedComponent& b)
{
    const IVec3& da = a.directions.front();
    const IVec3& db = b.directions.front();
    const IVec3 neg{-db[0], -db[1], -db[2]};
    return (da == db || da == neg) && point_on_line(b.base, a);
}

IVec3 line_point(const FixedComponent& line, int s)
{
    const IVec3& d = line.directions.front();
    return wrap_units(IVec3{line.base[0] + s * d[0], line.base[1] + s * d[1], line.base[2] + s * d[2]});
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
    int classes()
    {
        int c = 0;
        for (std::size_t i = 0; i < parent.size(); ++i) {
            c += find(static_cast<int>(i)) == static_cast<int>(i) ? 1 : 0;
        }
        return c;
    }
};

} // namespace

SingularSet singular_set(const CrystalGroup& group)
{
    SingularSet out;
    for (const auto& g : group.elements()) {
        if (!g.orientation_preserving()) {
            throw Error(ErrorKind::invalid_argument, "singular_set requires an orientation-preserving group");
        }
    }
    for (const auto& g : group.elements()) {
        if (g.is_identity()) {
            continue;
        }
        FixedLocus locus = fixed_locus(g);
        if (locus.kind == LocusKind::empty) {
            continue;
        }
        for (const auto& comp : locus.components) {
            if (comp.directions.size() != 1) {
                throw Error(ErrorKind::invalid_argument, "proper motion with non-linear fixed component");
            }
            const bool dup = std::any_of(out.lines.begin(), out.lines.end(),
                                         [&](const auto& l) { return same_line(l, comp); });
            if (!dup) {
                out.lines.push_back(comp);
            }
        }
        out.loci.push_back(std::move(locus));
    }

    // junctions: pairwise intersections of distinct lines
    std::set<IVec3> junctions;
    for (std::size_t a = 0; a < out.lines.size(); ++a) {
        for (std::size_t b = a + 1; b < out.lines.size(); ++b) {
            for (int s = 0; s < kUnits; ++s) {
                const IVec3 p = line_point(out.lines[a], s);
                if (point_on_line(p, out.lines[b])) {
                    junctions.insert(p);
                }
            }
        }
    }
    out.junctions.assign(junctions.begin(), junctions.end());

    // segments between consecutive junctions on each line, keyed by their midpoints
    struct Segment {
        int line;
        IVec3 mid;
        bool loop;
    };
    std::vector<Segment> segments;
    for (std::size_t li = 0; li < out.lines.size(); ++li) {
        std::vector<int> params;
        for (const auto& j : out.junctions) {
            int s = 0;
            if (point_on_line(j, out.lines[li], &s)) {
                params.push_back(s);
            }
        }
        std::sort(params.begin(), params.end());
        if (params.empty()) {
            segments.push_back({static_cast<int>(li), out.lines[li].base, true});
            continue;
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            const int s0 = params[k];
            const int s1 = (k + 1 < params.size()) ? params[k + 1] : params[0] + kUnits;
            if ((s0 + s1) % 2 != 0) {
                throw Error(ErrorKind::invalid_argument, "segment midpoint is not on the exact grid");
            }
            segments.push_back({static_cast<int>(li), line_point(out.lines[li], (s0 + s1) / 2), false});
        }
    }

    UnionFind edge_classes(segments.size());
    UnionFind vertex_classes(out.junctions.size());
    for (const auto& g : group.elements()) {
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const IVec3 img = g.apply_units(segments[i].mid);
            for (std::size_t j = 0; j < segments.size(); ++j) {
                bool match = false;
                if (segments[i].loop != segments[j].loop) {
                    continue;
                }
                if (segments[i].loop) {
                    // image line must coincide with line j
                    FixedComponent moved;
                    moved.base = img;
                    const IVec3 d = g.linear().apply(out.lines[segments[i].line].directions.front());
                    moved.directions = {d};
                    match = same_line(moved, out.lines[segments[j].line]);
                } else {
                    match = img == segments[j].mid;
                }
                if (match) {
                    edge_classes.unite(static_cast<int>(i), static_cast<int>(j));
                }
            }
        }
        for (std::size_t i = 0; i < out.junctions.size(); ++i) {
            const IVec3 img = g.apply_units(out.junctions[i]);
            const auto it = std::find(out.junctions.begin(), out.junctions.end(), img);
            if (it == out.junctions.end()) {
                throw Error(ErrorKind::not_invariant, "group does not preserve the singular junctions");
            }
            vertex_classes.unite(static_cast<int>(i), static_cast<int>(it - out.junctions.begin()));
        }
    }
    out.quotient.edges = edge_classes.classes();
    out.quotient.vertices = vertex_classes.classes();
    return out;
}

double distance_to_line(const Vec3& p, const FixedComponent& line, Side side)
{
    const double a = side.value();
    const Vec3 base = line.base_point(side);
    const IVec3& di = line.directions.front();
    const Vec3 d = Vec3(di[0], di[1], di[2]).normalized();
    const Vec3 q = wrap(p - base, side).coords;
    double best = std::numeric_limits<double>::infinity();
    for (int i = -2; i <= 2; ++i) {
        for (int j = -2; j <= 2; ++j) {
            for (int k = -2; k <= 2; ++k) {
                const Vec3 r = q + a * Vec3(i, j, k);
                best = std::min(best, (r - r.dot(d) * d).norm());
            }
        }
    }
    return best;
}

std::string group_table(const CrystalGroup& group)
{
    std::ostringstream os;
    os << group.name() << " (order " << group.order() << ", side " << group.side().num << '/' << group.side().den
       << ")\n";
    for (const auto& g : group.elements()) {
        os << "  " << g.to_string() << "  det " << (g.determinant() > 0 ? "+1" : "-1") << "  "
           << to_string(classify(g)) << '\n';
    }
    return os.str();
}

} // namespace twistedp
