#include "fixtures.hpp"

#include "twistedp/eigensolvers.hpp"
#include "twistedp/error.hpp"
#include "twistedp/jacobi_spectrum.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace twistedp;
using std::numbers::pi;

namespace {

// 1D Dirichlet Laplacian on m interior points of [0, 1] with unit mass:
// eigenvalues 4 (m+1)^2 sin^2(j pi / (2 (m+1))).
SparseMatrix path_laplacian(int m)
{
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < m; ++i) {
        t.emplace_back(i, i, 2.0);
        if (i + 1 < m) {
            t.emplace_back(i, i + 1, -1.0);
            t.emplace_back(i + 1, i, -1.0);
        }
    }
    SparseMatrix A(m, m);
    A.setFromTriplets(t.begin(), t.end());
    return A * double((m + 1) * (m + 1));
}

SpectrumReport synthetic(std::initializer_list<double> values)
{
    SpectrumReport r;
    r.eigenvalues = Eigen::VectorXd(static_cast<int>(values.size()));
    int i = 0;
    for (double v : values) {
        r.eigenvalues[i++] = v;
    }
    return r;
}

} // namespace

TEST_CASE("eigensolvers agree with the closed form")
{
    const int m = 300;
    const SparseMatrix A = path_laplacian(m);
    const Eigen::VectorXd mass = Eigen::VectorXd::Ones(m);
    for (EigenMethod method : {EigenMethod::dense, EigenMethod::shift_invert}) {
        const EigenResult r = lowest_eigenpairs(A, mass, 6, -1.0, method);
        CHECK(r.method == method);
        for (int j = 0; j < 6; ++j) {
            const double s = std::sin((j + 1) * pi / (2.0 * (m + 1)));
            CHECK(r.values[j] == doctest::Approx(4.0 * (m + 1) * (m + 1) * s * s).epsilon(1e-10));
        }
        CHECK(r.max_residual < 1e-10 * 4 * (m + 1) * (m + 1));
        const Eigen::MatrixXd G = r.vectors.transpose() * mass.asDiagonal() * r.vectors;
        CHECK((G - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-10);
    }
    CHECK_THROWS_AS(lowest_eigenpairs(A, mass, 6, 100.0, EigenMethod::shift_invert), Error);
    CHECK_THROWS_AS(lowest_eigenpairs(A, Eigen::VectorXd::Ones(m - 1), 6, -1.0), Error);
}

TEST_CASE("flat torus: zero potential and index 0")
{
    const PeriodicMesh flat = testing::flat_torus(12);
    const OperatorTriple ops = assemble(flat);
    CHECK(ops.P.cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ops.S * Eigen::VectorXd::Ones(ops.size())).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ops.M.minCoeff() > 0);
    CHECK(ops.M.sum() == doctest::Approx(0.25).epsilon(1e-12));

    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 5; ++trial) {
        Eigen::VectorXd u(ops.size());
        for (auto& x : u) {
            x = nd(rng);
        }
        CHECK(index_form(ops, u, u) >= 0);
    }

    SpectrumReport r = spectrum(flat, 6);
    CHECK(std::abs(r.eigenvalues[0]) < 1e-8);
    // the first nonzero level of the flat square torus of side 1/2 is (2 pi / (1/2))^2, four-fold
    CHECK(r.eigenvalues[1] == doctest::Approx(16 * pi * pi).epsilon(0.05));
    const IndexNullity in = index_nullity(r, 1e-8);
    CHECK(in.index == 0);
    CHECK(in.nullity == 1);
}

TEST_CASE("sphere spectrum and scale covariance")
{
    // the potential is -2K, which equals |A|^2 only on minimal surfaces; on a round
    // sphere it is -2/r^2 and the levels are (l(l+1) + 2)/r^2
    const double r = 0.2;
    const PeriodicMesh s = testing::icosphere(3, r);
    const SpectrumReport a = spectrum(s, 6);
    CHECK(a.eigenvalues[0] == doctest::Approx(2 / (r * r)).epsilon(0.01));
    for (int i = 1; i <= 3; ++i) {
        CHECK(a.eigenvalues[i] == doctest::Approx(4 / (r * r)).epsilon(0.01));
    }
    CHECK(a.eigenvalues[4] == doctest::Approx(8 / (r * r)).epsilon(0.02));
    CHECK(a.ground_sign_definite);

    const double c = 1.7;
    PeriodicMesh scaled = s;
    for (Vec3& p : scaled.positions) {
        p = Vec3(0.5, 0.5, 0.5) + c * (p - Vec3(0.5, 0.5, 0.5));
    }
    const SpectrumReport b = spectrum(scaled, 6);
    for (int i = 0; i < 6; ++i) {
        CHECK(std::abs(b.eigenvalues[i] * c * c - a.eigenvalues[i]) <= 1e-6 * std::abs(a.eigenvalues[0]));
    }
}

TEST_CASE("operators on the P surface")
{
    const PeriodicMesh& m = testing::sigma(32).mesh;
    const OperatorTriple ops = assemble(m);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(ops.size());
    CHECK(index_form(ops, one, one) == doctest::Approx(-16 * pi).epsilon(0.01));
    CHECK((ops.S * one).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((SparseMatrix(ops.S.transpose()) - ops.S).norm() == 0);
    CHECK(ops.ricci == 0);

    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    Eigen::VectorXd u(ops.size()), v(ops.size());
    for (int i = 0; i < ops.size(); ++i) {
        u[i] = nd(rng);
        v[i] = nd(rng);
    }
    const double uv = index_form(ops, u, v), vu = index_form(ops, v, u);
    CHECK(std::abs(uv - vu) <= 1e-12 * std::max(1.0, std::abs(uv)));
    CHECK_THROWS_AS(index_form(ops, u, Eigen::VectorXd::Ones(3)), Error);

    const SpectrumReport r = spectrum(m, 8);
    CHECK(r.rayleigh_defect < 1e-8);
    CHECK(r.ground_sign_definite);
    const Eigen::VectorXd phi0 = r.eigenvectors.col(0);
    CHECK(index_form(ops, phi0, phi0) == doctest::Approx(r.eigenvalues[0] * phi0.dot(ops.M.asDiagonal() * phi0)).epsilon(1e-8));
    CHECK(index_form(ops, phi0, phi0) < 0);
}

TEST_CASE("dense and shift-invert paths agree on the P surface")
{
    const PeriodicMesh& m = testing::sigma(16).mesh;
    const SpectrumReport a = spectrum(m, 8, EigenMethod::dense);
    const SpectrumReport b = spectrum(m, 8, EigenMethod::shift_invert);
    CHECK(a.method == EigenMethod::dense);
    CHECK(b.method == EigenMethod::shift_invert);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(a.eigenvalues[i] - b.eigenvalues[i]) < 1e-8 * std::abs(a.eigenvalues[0]));
    }
}

TEST_CASE("P surface verdict at 16 against 24")
{
    SpectrumReport a = spectrum(testing::sigma(16).mesh, 8);
    SpectrumReport b = spectrum(testing::sigma(24).mesh, 8);
    const double e = refinement_error(a, b);
    CHECK(e < std::abs(a.eigenvalues[0]) / 10);
    const IndexNullity in = index_nullity(a, e);
    CHECK(in.index == 1);
    CHECK(in.nullity == 3);
    CHECK(a.eigenvalues[4] > a.delta);
    CHECK(kernel_match(a, testing::sigma(16).mesh) < 0.1);
}

TEST_CASE("zero classification")
{
    SpectrumReport r = synthetic({-5, -0.01, 0.005, 0.02, 2});
    IndexNullity in = index_nullity(r, 0.01);
    CHECK(in.index == 1);
    CHECK(in.nullity == 3);
    CHECK_FALSE(in.ambiguous);
    CHECK(r.delta == doctest::Approx(0.03));
    CHECK(r.trace.size() == 6);

    SpectrumReport s = synthetic({-5, 0.05, 2});
    CHECK(index_nullity(s, 0.01).ambiguous);

    // floor relative to |lambda_0| when the refinement error vanishes
    SpectrumReport f = synthetic({-1e6, 0.5, 2});
    in = index_nullity(f, 0);
    CHECK(f.delta == doctest::Approx(1.0));
    CHECK(in.nullity == 1);

    CHECK_THROWS_AS(index_nullity(r, -1), Error);
    CHECK(refinement_error(synthetic({1, 2, 3}), synthetic({1.5, 2, 2})) == doctest::Approx(1.0));
    CHECK(refinement_error(synthetic({1, 2, 3}), synthetic({1.5, 2, 2}), 2) == doctest::Approx(0.5));
}

TEST_CASE("kernel matching")
{
    const PeriodicMesh& m = testing::sigma(16).mesh;
    const OperatorTriple ops = assemble(m);
    const auto normals = vertex_normals(m);
    Eigen::MatrixXd N(m.vertex_count(), 3);
    for (int v = 0; v < m.vertex_count(); ++v) {
        N.row(v) = normals[v].transpose();
    }
    CHECK(principal_angle(N, N, ops.M) < 1e-7);

    std::mt19937 rng(11);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd R(m.vertex_count(), 3);
    for (int i = 0; i < R.size(); ++i) {
        R.data()[i] = nd(rng);
    }
    CHECK(principal_angle(R, N, ops.M) > 1.4);

    SpectrumReport r = spectrum(m, 6);
    index_nullity(r, 0);
    r.nullity = 0;
    CHECK_THROWS_AS(kernel_match(r, m), Error);
}

TEST_CASE("Dirichlet problems")
{
    const MeshWithBoundary sq = calibration_square(40);
    const SpectrumReport r = dirichlet_spectrum(sq, 5);
    CHECK(r.kind == ProblemKind::dirichlet);
    CHECK(r.eigenvalues[0] == doctest::Approx(2 * pi * pi).epsilon(0.02));
    CHECK(r.eigenvalues[1] == doctest::Approx(5 * pi * pi).epsilon(0.03));
    CHECK(r.ground_sign_definite);
    const auto mask = sq.boundary_mask();
    CHECK(static_cast<int>(r.interior.size()) == r.eigenvectors.rows());
    for (int v : r.interior) {
        REQUIRE_FALSE(mask[v]);
    }
    CHECK(static_cast<int>(r.interior.size()) == 39 * 39);

    const CatenoidResult cat = extract_catenoid(testing::sigma(16).mesh);
    const SpectrumReport c = dirichlet_spectrum(cat.annulus, 5);
    CHECK(c.eigenvalues[0] > 0);
    CHECK(c.ground_sign_definite);

    MeshWithBoundary all_boundary = sq;
    all_boundary.loops.push_back({});
    for (int v = 0; v < sq.mesh.vertex_count(); ++v) {
        all_boundary.loops.back().push_back(v);
    }
    CHECK_THROWS_AS(dirichlet_spectrum(all_boundary, 5), Error);
}

TEST_CASE("argument checks")
{
    CHECK_THROWS_AS(spectrum(testing::icosphere(1, 0.2), 3), Error);
    PeriodicMesh bad = testing::icosphere(1, 0.2);
    bad.positions[bad.faces[0][1]] = bad.positions[bad.faces[0][0]];
    CHECK_THROWS_AS(assemble(bad), Error);
}
