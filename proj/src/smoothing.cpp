#include "twistedp/smoothing.hpp"

#include "twistedp/error.hpp"
#include "twistedp/torus_crystal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace twistedp {

namespace {

constexpr double kCentre = 0.25;
constexpr double kOnBody = 1e-12;
constexpr double kStep = 1e-30;   // complex-step increment

using Cplx = std::complex<double>;

double bound(int side)
{
    return side > 0 ? kCubeSide : 0.0;
}

PieceKind kind_of(int clamped)
{
    static const PieceKind kinds[] = {PieceKind::flat_cap, PieceKind::face_cylinder, PieceKind::edge_cylinder,
                                      PieceKind::vertex_cap};
    return kinds[clamped];
}

PieceId make_piece(const std::array<int, 3>& clamp)
{
    PieceId id;
    id.clamp = clamp;
    id.kind = kind_of(id.clamped());
    return id;
}

double angle_between(const Vec4& a, const Vec4& b)
{
    return 2 * std::asin(std::min(1.0, (a - b).norm() / 2));
}

template <class T>
T sq(const T& x)
{
    return x * x;
}

// distance-function normal (p - clamp(p)) / |p - clamp(p)|, analytic in p
Eigen::Matrix<Cplx, 4, 1> body_normal(const Eigen::Matrix<Cplx, 4, 1>& p)
{
    Eigen::Matrix<Cplx, 4, 1> off;
    for (int i = 0; i < 3; ++i) {
        const double re = p[i].real();
        off[i] = re < 0 ? p[i] : re > kCubeSide ? p[i] - kCubeSide : Cplx(0);
    }
    off[3] = p[3];
    Cplx n2 = 0;
    for (int i = 0; i < 4; ++i) {
        n2 += sq(off[i]);
    }
    return off / std::sqrt(n2);
}

template <class T>
Eigen::Matrix<T, 4, 1> chart_map(const Eigen::Matrix<T, 3, 1>& p, double eps, double ratio)
{
    Eigen::Matrix<T, 4, 1> out;
    out[3] = T(eps);
    for (int i = 0; i < 3; ++i) {
        const T d = ratio * (p[i] - kCentre);
        const double re = std::real(d);
        if (std::abs(re) > kCentre) {
            const double sg = re > 0 ? 1.0 : -1.0;
            const T alpha = (sg * d - kCentre) / eps;
            out[i] = kCentre + sg * (kCentre + eps * sin(alpha));
            out[3] = eps * cos(alpha);
        } else {
            out[i] = kCentre + d;
        }
    }
    return out;
}

Vec4 sample_direction(std::mt19937_64& rng, const std::array<int, 3>& clamp, bool top_only)
{
    std::normal_distribution<double> gauss;
    Vec4 d = Vec4::Zero();
    for (int i = 0; i < 3; ++i) {
        if (clamp[i] != 0) {
            d[i] = clamp[i] * std::abs(gauss(rng));
        }
    }
    if (!top_only) {
        d[3] = std::abs(gauss(rng));
    }
    if (d.norm() < 1e-12) {
        return sample_direction(rng, clamp, top_only);
    }
    return d.normalized();
}

std::array<int, 3> random_clamp(std::mt19937_64& rng, int count)
{
    std::array<int, 3> axes{0, 1, 2};
    std::shuffle(axes.begin(), axes.end(), rng);
    std::array<int, 3> clamp{0, 0, 0};
    for (int k = 0; k < count; ++k) {
        clamp[axes[k]] = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
    }
    return clamp;
}

Vec4 point_on_piece(std::mt19937_64& rng, const std::array<int, 3>& clamp, const Vec4& dir, double eps)
{
    std::uniform_real_distribution<double> unit(0.0, kCubeSide);
    Vec4 p;
    for (int i = 0; i < 3; ++i) {
        p[i] = clamp[i] != 0 ? bound(clamp[i]) : unit(rng);
    }
    p[3] = 0;
    return p + eps * dir;
}

} // namespace

const char* to_string(PieceKind kind)
{
    switch (kind) {
    case PieceKind::flat_cap: return "flat_cap";
    case PieceKind::face_cylinder: return "face_cylinder";
    case PieceKind::edge_cylinder: return "edge_cylinder";
    case PieceKind::vertex_cap: return "vertex_cap";
    }
    return "?";
}

int PieceId::clamped() const
{
    return static_cast<int>(std::count_if(clamp.begin(), clamp.end(), [](int c) { return c != 0; }));
}

std::string PieceId::name() const
{
    std::string s = to_string(kind);
    if (kind != PieceKind::flat_cap) {
        s += "(";
        const char* axes = "xyz";
        for (int i = 0; i < 3; ++i) {
            if (clamp[i] != 0) {
                s += axes[i];
                s += clamp[i] > 0 ? "=1/2" : "=0";
                s += ',';
            }
        }
        s.back() = ')';
    }
    return s;
}

double dist_cube(const Vec4& p)
{
    if (!p.allFinite()) {
        throw Error(ErrorKind::non_finite, "point has non-finite coordinates");
    }
    double s = p[3] * p[3];
    for (int i = 0; i < 3; ++i) {
        const double e = p[i] - std::clamp(p[i], 0.0, kCubeSide);
        s += e * e;
    }
    return std::sqrt(s);
}

BoundaryPoint classify_boundary_point(const Vec4& p, double eps)
{
    if (!(eps > 0) || std::abs(dist_cube(p) - eps) > kOnBody || p[3] < -kOnBody) {
        throw Error(ErrorKind::invalid_argument, "point is not on E_eps");
    }
    BoundaryPoint b;
    std::array<int, 3> clamp{0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        b.foot[i] = std::clamp(p[i], 0.0, kCubeSide);
        const double e = p[i] - b.foot[i];
        if (std::abs(e) > kOnBody) {
            clamp[i] = e > 0 ? 1 : -1;
        }
    }
    b.piece = make_piece(clamp);
    return b;
}

Vec4 reconstruct(const BoundaryPoint& b, const Vec4& p, double eps)
{
    Vec4 out;
    out.head<3>() = b.foot;
    out[3] = 0;
    return out + eps * piece_normal(b.piece, p);
}

Vec4 piece_normal(const PieceId& piece, const Vec4& p)
{
    if (piece.kind == PieceKind::flat_cap) {
        return Vec4(0, 0, 0, 1);
    }
    Vec4 v = Vec4::Zero();
    for (int i = 0; i < 3; ++i) {
        if (piece.clamp[i] != 0) {
            v[i] = p[i] - bound(piece.clamp[i]);
        }
    }
    v[3] = p[3];
    if (v.norm() < 1e-300) {
        throw Error(ErrorKind::invalid_argument, "point lies on the cube itself");
    }
    return v.normalized();
}

std::array<double, 3> piece_curvatures(PieceKind kind, double eps)
{
    const double k = 1 / eps;
    switch (kind) {
    case PieceKind::flat_cap: return {0, 0, 0};
    case PieceKind::face_cylinder: return {k, 0, 0};
    case PieceKind::edge_cylinder: return {k, k, 0};
    case PieceKind::vertex_cap: return {k, k, k};
    }
    return {0, 0, 0};
}

std::array<double, 3> measured_curvatures(const Vec4& p, double eps)
{
    classify_boundary_point(p, eps);
    const Eigen::Matrix<Cplx, 4, 1> pc = p.cast<Cplx>();
    const Vec4 n = body_normal(pc).real();
    const Eigen::Matrix4d basis = Eigen::HouseholderQR<Eigen::Matrix<double, 4, 1>>(n).householderQ();
    const Eigen::Matrix<double, 4, 3> T = basis.rightCols<3>();
    Eigen::Matrix<double, 4, 3> dN;
    for (int k = 0; k < 3; ++k) {
        const Eigen::Matrix<Cplx, 4, 1> moved = pc + Cplx(0, kStep) * T.col(k).cast<Cplx>();
        dN.col(k) = body_normal(moved).imag() / kStep;
    }
    Eigen::Matrix3d W = T.transpose() * dN;
    W = 0.5 * (W + W.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(W);
    const Eigen::Vector3d ev = es.eigenvalues();
    return {ev[2], ev[1], ev[0]};
}

GluingReport c1_gluing_check(double eps, int samples, std::uint64_t seed)
{
    if (!(eps > 0) || samples <= 0) {
        throw Error(ErrorKind::invalid_argument, "gluing check needs eps > 0 and a positive sample count");
    }
    std::mt19937_64 rng(seed);
    GluingReport out;
    // interface between pieces with k and k + 1 clamped coordinates
    for (int k = 0; k < 3; ++k) {
        InterfaceCheck c;
        c.name = std::string(to_string(kind_of(k))) + "/" + to_string(kind_of(k + 1));
        c.samples = samples;
        const auto ka = piece_curvatures(kind_of(k), eps), kb = piece_curvatures(kind_of(k + 1), eps);
        for (int i = 0; i < 3; ++i) {
            c.curvature_jump = std::max(c.curvature_jump, std::abs(ka[i] - kb[i]));
        }
        for (int s = 0; s < samples; ++s) {
            const std::array<int, 3> outer = random_clamp(rng, k + 1);
            std::array<int, 3> inner = outer;
            for (int i = 0, dropped = 0; i < 3 && !dropped; ++i) {
                if (inner[i] != 0) {
                    inner[i] = 0;
                    dropped = 1;
                }
            }
            // on the inner piece with the dropped coordinate at its bound
            const Vec4 dir = k == 0 ? Vec4(0, 0, 0, 1) : sample_direction(rng, inner, false);
            const Vec4 p = point_on_piece(rng, outer, dir, eps);
            const double jump = angle_between(piece_normal(make_piece(inner), p), piece_normal(make_piece(outer), p));
            c.normal_jump = std::max(c.normal_jump, jump);
        }
        out.normal_jump_max = std::max(out.normal_jump_max, c.normal_jump);
        out.interfaces.push_back(c);
    }
    for (int s = 0; s < samples; ++s) {
        const std::array<int, 3> clamp = random_clamp(rng, 1 + s % 3);
        const Vec4 p = point_on_piece(rng, clamp, sample_direction(rng, clamp, true), eps);
        out.orthogonality_max = std::max(out.orthogonality_max, std::abs(piece_normal(make_piece(clamp), p)[3]));
    }
    return out;
}

Vec4 antipodal_identify(const Vec4& p, double eps)
{
    if (std::abs(p[3]) > kOnBody || std::abs(dist_cube(p) - eps) > kOnBody) {
        throw Error(ErrorKind::invalid_argument, "point is not on the boundary of E_eps");
    }
    const Vec4 c(kCentre, kCentre, kCentre, 0);
    return 2 * c - p;
}

DilationChart::DilationChart(double eps) : eps_(eps), ratio_((kCubeSide + std::numbers::pi * eps) / kCubeSide)
{}

bool DilationChart::in_domain(const Eigen::Vector3d& p) const
{
    int outside = 0;
    for (int i = 0; i < 3; ++i) {
        if (p[i] < -1e-15 || p[i] > kCubeSide + 1e-15) {
            return false;
        }
        outside += std::abs(p[i] - kCentre) * ratio_ > kCentre;
    }
    return outside <= 1;
}

Vec4 DilationChart::map(const Eigen::Vector3d& p) const
{
    if (!in_domain(p)) {
        throw Error(ErrorKind::invalid_argument, "point is outside the chart domain");
    }
    return chart_map<double>(p, eps_, ratio_);
}

Eigen::Vector3d DilationChart::inverse(const Vec4& q) const
{
    Eigen::Vector3d p;
    for (int i = 0; i < 3; ++i) {
        const double d = q[i] - kCentre;
        double developed = d;
        if (std::abs(d) > kCentre) {
            const double alpha = std::atan2(std::abs(d) - kCentre, q[3]);
            developed = (d > 0 ? 1 : -1) * (kCentre + eps_ * alpha);
        }
        p[i] = kCentre + developed / ratio_;
    }
    return p;
}

Eigen::Matrix<double, 4, 3> DilationChart::jacobian(const Eigen::Vector3d& p) const
{
    if (!in_domain(p)) {
        throw Error(ErrorKind::invalid_argument, "point is outside the chart domain");
    }
    Eigen::Matrix<double, 4, 3> J;
    for (int k = 0; k < 3; ++k) {
        Eigen::Matrix<Cplx, 3, 1> pc = p.cast<Cplx>();
        pc[k] += Cplx(0, kStep);
        J.col(k) = chart_map<Cplx>(pc, eps_, ratio_).imag() / kStep;
    }
    return J;
}

DilationChart build_dilation(double eps)
{
    if (!(eps > 0) || eps > 1 / (2 * std::numbers::pi)) {
        throw Error(ErrorKind::invalid_argument, "eps must lie in (0, 1/(2 pi)]");
    }
    return DilationChart(eps);
}

DilationReport measure_dilation(const DilationChart& chart, int samples, std::uint64_t seed)
{
    if (samples <= 0) {
        throw Error(ErrorKind::invalid_argument, "sample count must be positive");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, kCubeSide);
    DilationReport out;
    out.samples = samples;
    out.ratio_cubes = (kCubeSide + std::numbers::pi * chart.eps()) / kCubeSide;
    out.ratio_stated = 1 + std::numbers::pi / 2 * chart.eps();
    double lo = INFINITY, hi = -INFINITY, sum = 0;
    for (int s = 0; s < samples;) {
        const Eigen::Vector3d p(unit(rng), unit(rng), unit(rng));
        if (!chart.in_domain(p)) {
            continue;
        }
        const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>>(chart.jacobian(p)).singularValues();
        lo = std::min(lo, sv.minCoeff());
        hi = std::max(hi, sv.maxCoeff());
        sum += sv.sum();
        ++s;
    }
    out.ratio_measured = sum / (3.0 * samples);
    out.ratio_spread = hi - lo;

    // speed of the image of x -> (x, 1/4, 1/4), midpoint rule
    const int steps = 2000;
    for (int k = 0; k < steps; ++k) {
        const Eigen::Vector3d p((k + 0.5) * kCubeSide / steps, kCentre, kCentre);
        out.developed_side += chart.jacobian(p).col(0).norm() * kCubeSide / steps;
    }

    const Eigen::Vector3d a(0.2, 0.3, 0.22), b(0.3, 0.21, 0.27);
    double len = 0;
    Vec4 prev = chart.map(a);
    for (int k = 1; k <= 64; ++k) {
        const Vec4 cur = chart.map(a + (b - a) * (k / 64.0));
        len += (cur - prev).norm();
        prev = cur;
    }
    out.polyline_ratio = len / (b - a).norm();

    // the face screws of I222 against the antipodal map of the developed boundary
    const auto screws = i222_screws();
    const double flat = 0.9 * kCentre / chart.ratio();
    std::uniform_real_distribution<double> inflat(kCentre - flat, kCentre + flat);
    for (int s = 0; s < samples; ++s) {
        const int axis = s % 3;
        Eigen::Vector3d p(inflat(rng), inflat(rng), inflat(rng));
        p[axis] = (s / 3) % 2 == 0 ? 0.0 : kCubeSide;
        const Vec4 partner = antipodal_identify(chart.map(p), chart.eps());
        const Eigen::Vector3d q = chart.inverse(partner);
        for (const auto& g : screws) {
            if (g.linear().sign[axis] > 0) {
                const Eigen::Vector3d diff = g.apply(p) - q;
                const Eigen::Vector3d wrapped = diff - diff.array().round().matrix();
                out.screw_gluing_max = std::max(out.screw_gluing_max, wrapped.cwiseAbs().maxCoeff());
            }
        }
    }
    out.stated_constant_matches = std::abs(out.ratio_stated - out.ratio_measured) < 1e-9;
    return out;
}

SmoothingReport smoothing_report(double eps, int samples, std::uint64_t seed)
{
    const DilationChart chart = build_dilation(eps);
    SmoothingReport out;
    out.eps = eps;
    out.samples = samples;
    out.seed = seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> box(-1.5 * eps, kCubeSide + 1.5 * eps), height(0.0, 1.5 * eps);
    std::array<std::vector<Vec4>, 4> by_kind;
    for (int s = 0; s < samples; ++s) {
        Vec4 p(box(rng), box(rng), box(rng), height(rng));
        Vec4 off = p;
        for (int i = 0; i < 3; ++i) {
            off[i] = p[i] - std::clamp(p[i], 0.0, kCubeSide);
        }
        if (off.norm() < 1e-9) {
            off = Vec4(0, 0, 0, 1e-9);
        }
        p += (eps / off.norm() - 1) * off;
        try {
            const BoundaryPoint b = classify_boundary_point(p, eps);
            const int k = static_cast<int>(b.piece.kind);
            ++out.piece_counts[k];
            out.reconstruction_max = std::max(out.reconstruction_max, (reconstruct(b, p, eps) - p).norm());
            if (by_kind[k].size() < 64) {
                by_kind[k].push_back(p);
            }
        } catch (const Error&) {
            ++out.unclassified;
        }
    }
    for (int k = 0; k < 4; ++k) {
        CurvatureRow row;
        row.kind = static_cast<PieceKind>(k);
        row.closed_form = piece_curvatures(row.kind, eps);
        row.measured = {NAN, NAN, NAN};
        for (std::size_t j = 0; j < by_kind[k].size(); ++j) {
            const auto m = measured_curvatures(by_kind[k][j], eps);
            if (j == 0) {
                row.measured = m;
            }
            for (int i = 0; i < 3; ++i) {
                row.max_error = std::max(row.max_error, std::abs(m[i] - row.closed_form[i]));
            }
        }
        if (by_kind[k].empty()) {
            row.max_error = INFINITY;
        }
        out.curvature_table.push_back(row);
    }
    out.gluing = c1_gluing_check(eps, std::max(1, samples / 4), seed + 1);
    out.dilation = measure_dilation(chart, std::max(1, samples / 4), seed + 2);

    std::mt19937_64 arng(seed + 3);
    for (int s = 0; s < std::max(1, samples / 4); ++s) {
        const std::array<int, 3> clamp = random_clamp(arng, 1 + s % 3);
        const Vec4 p = point_on_piece(arng, clamp, sample_direction(arng, clamp, true), eps);
        const Vec4 q = antipodal_identify(p, eps);
        out.antipodal_max = std::max({out.antipodal_max, (antipodal_identify(q, eps) - p).norm(),
                                      std::abs(dist_cube(q) - eps), std::abs(q[3])});
    }
    return out;
}

} // namespace twistedp
