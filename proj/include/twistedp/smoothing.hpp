#pragma once

// The convex body B_eps around the cube C(1/2) embedded in {t = 0} of R^4, the
// four kinds of pieces of its top boundary E_eps, and the dilation chart from
// the cube onto the flat part of E_eps.

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace twistedp {

using Vec4 = Eigen::Vector4d;

inline constexpr double kCubeSide = 0.5;

enum class PieceKind { flat_cap, face_cylinder, edge_cylinder, vertex_cap };

const char* to_string(PieceKind kind);

/// clamp[i] is -1 (foot on x_i = 0), +1 (foot on x_i = 1/2) or 0 (free).
struct PieceId {
    PieceKind kind = PieceKind::flat_cap;
    std::array<int, 3> clamp{0, 0, 0};

    int clamped() const;
    std::string name() const;
    bool operator==(const PieceId&) const = default;
};

/// Distance in R^4 to the solid cube [0, 1/2]^3 x {0}.
double dist_cube(const Vec4& p);

struct BoundaryPoint {
    PieceId piece;
    Eigen::Vector3d foot = Eigen::Vector3d::Zero();
};

/// Piece of E_eps containing p; a coordinate counts as clamped only when it
/// leaves [0, 1/2] by more than 1e-12, so interface points go to the piece with
/// fewer clamped coordinates. Throws invalid_argument when p is not on E_eps.
BoundaryPoint classify_boundary_point(const Vec4& p, double eps);

/// foot + eps * n, n the unit outward normal of the piece at p.
Vec4 reconstruct(const BoundaryPoint& b, const Vec4& p, double eps);

/// Outward unit normal at p from the closed form of one piece. p need not lie in
/// the interior of the piece, which is how one-sided normals at interfaces are taken.
Vec4 piece_normal(const PieceId& piece, const Vec4& p);

/// Principal curvatures of the piece kind, largest first, for the outward normal
/// (positive on a convex body).
std::array<double, 3> piece_curvatures(PieceKind kind, double eps);

/// Principal curvatures at a point of E_eps from the shape operator of the
/// distance-function normal, differentiated by complex step.
std::array<double, 3> measured_curvatures(const Vec4& p, double eps);

struct InterfaceCheck {
    std::string name;              // e.g. "flat_cap/face_cylinder"
    int samples = 0;
    double normal_jump = 0;        // max angle between the two one-sided normals
    double curvature_jump = 0;     // largest principal-curvature difference of the two closed forms
};

struct GluingReport {
    std::vector<InterfaceCheck> interfaces;
    double normal_jump_max = 0;
    double orthogonality_max = 0;  // max |n_t| over sampled points of the boundary t = 0
};

GluingReport c1_gluing_check(double eps, int samples, std::uint64_t seed = 1);

/// 2c - p for p on the boundary circle of E_eps at t = 0, c = (1/4, 1/4, 1/4, 0).
/// Throws invalid_argument for other points.
Vec4 antipodal_identify(const Vec4& p, double eps);

/// phi = f o h: h the homothety about the cube centre onto the cube of side
/// 1/2 + pi eps, f the isometric rolling of that cube onto the flat cap and the
/// face cylinders.
class DilationChart {
public:
    explicit DilationChart(double eps);

    double eps() const { return eps_; }
    /// Side of the developed cube over 1/2.
    double ratio() const { return ratio_; }
    /// Points of C(1/2) whose image avoids the edge cylinders.
    bool in_domain(const Eigen::Vector3d& p) const;
    Vec4 map(const Eigen::Vector3d& p) const;
    Eigen::Vector3d inverse(const Vec4& q) const;
    /// 4x3 Jacobian of map, by complex step.
    Eigen::Matrix<double, 4, 3> jacobian(const Eigen::Vector3d& p) const;

private:
    double eps_;
    double ratio_;
};

/// Throws invalid_argument unless 0 < eps <= 1/(2 pi).
DilationChart build_dilation(double eps);

struct DilationReport {
    int samples = 0;
    double ratio_measured = 0;     // mean singular value of the Jacobian
    double ratio_spread = 0;       // max - min over all singular values at all samples
    double ratio_cubes = 0;        // (1/2 + pi eps) / (1/2)
    double ratio_stated = 0;       // 1 + (pi/2) eps
    double developed_side = 0;     // length of the image of a face-to-face segment through the centre
    double polyline_ratio = 0;     // image polyline length over source length, straight segment in the cap
    double screw_gluing_max = 0;   // antipodal map against the face screws of I222, after development
    bool stated_constant_matches = false;
};

DilationReport measure_dilation(const DilationChart& chart, int samples, std::uint64_t seed = 1);

struct CurvatureRow {
    PieceKind kind = PieceKind::flat_cap;
    std::array<double, 3> closed_form{};
    std::array<double, 3> measured{};
    double max_error = 0;
};

struct SmoothingReport {
    double eps = 0;
    int samples = 0;
    std::uint64_t seed = 0;
    std::array<int, 4> piece_counts{};   // per PieceKind
    int unclassified = 0;
    double reconstruction_max = 0;
    std::vector<CurvatureRow> curvature_table;
    GluingReport gluing;
    DilationReport dilation;
    double antipodal_max = 0;            // |identify(identify(p)) - p| and dist_cube residual of partners
};

SmoothingReport smoothing_report(double eps, int samples, std::uint64_t seed = 1);

} // namespace twistedp
