#include "twistedp/jacobi_spectrum.hpp"

#include "twistedp/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace twistedp {

const char* to_string(ProblemKind kind)
{
    return kind == ProblemKind::closed ? "closed" : "dirichlet";
}

SparseMatrix OperatorTriple::jacobi() const
{
    SparseMatrix J = S;
    for (int i = 0; i < size(); ++i) {
        J.coeffRef(i, i) -= P[i];
    }
    return J;
}

OperatorTriple assemble(const PeriodicMesh& mesh)
{
    const int V = mesh.vertex_count();
    const MeshGeometry geo = compute_geometry(mesh);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(12 * static_cast<std::size_t>(mesh.face_count()));
    for (int f = 0; f < mesh.face_count(); ++f) {
        for (int c = 0; c < 3; ++c) {
            const int i = mesh.faces[f][(c + 1) % 3];
            const int j = mesh.faces[f][(c + 2) % 3];
            const double w = 0.5 * geo.corner_cot(f, c);
            trips.emplace_back(i, j, -w);
            trips.emplace_back(j, i, -w);
            trips.emplace_back(i, i, w);
            trips.emplace_back(j, j, w);
        }
    }
    OperatorTriple ops;
    ops.S.resize(V, V);
    ops.S.setFromTriplets(trips.begin(), trips.end());
    ops.M = geo.vertex_area;
    const Eigen::VectorXd defect = angle_defects(mesh, geo);
    ops.K = defect.cwiseQuotient(ops.M);
    // |A|^2 = -2K for minimal surfaces, integrated over the vertex area
    ops.P = -2.0 * defect + ops.ricci * ops.M;
    if (!ops.M.allFinite() || !ops.P.allFinite() || (ops.M.array() <= 0).any()) {
        throw Error(ErrorKind::non_finite, "degenerate triangles give non-finite operator entries");
    }
    for (int k = 0; k < ops.S.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(ops.S, k); it; ++it) {
            if (!std::isfinite(it.value())) {
                throw Error(ErrorKind::non_finite, "degenerate triangles give non-finite stiffness entries");
            }
        }
    }
    return ops;
}

double index_form(const OperatorTriple& ops, const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
    if (u.size() != ops.size() || v.size() != ops.size()) {
        throw Error(ErrorKind::dimension_mismatch, "function length differs from the vertex count");
    }
    return u.dot(ops.S * v) - u.dot(ops.P.cwiseProduct(v));
}

namespace {

double shift_bound(const Eigen::VectorXd& P, const Eigen::VectorXd& M)
{
    // S is positive semidefinite, so S - P >= -P in the mass metric
    const double low = (-P.cwiseQuotient(M)).minCoeff();
    return low - 1e-2 * std::abs(low) - 1.0;
}

SpectrumReport solve(const SparseMatrix& J, const Eigen::VectorXd& P, const Eigen::VectorXd& M, int k,
                     EigenMethod method)
{
    if (k < 5) {
        throw Error(ErrorKind::invalid_argument, "at least five eigenpairs are required");
    }
    k = std::min(k, static_cast<int>(M.size()));
    const EigenResult er = lowest_eigenpairs(J, M, k, shift_bound(P, M), method);
    SpectrumReport r;
    r.eigenvalues = er.values;
    r.eigenvectors = er.vectors;
    r.method = er.method;
    r.max_residual = er.max_residual;
    for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd u = r.eigenvectors.col(i);
        const double mu = u.dot(M.cwiseProduct(u));
        const double q = u.dot(J * u);
        r.rayleigh_defect = std::max(r.rayleigh_defect, std::abs(q - r.eigenvalues[i] * mu) / mu);
    }
    const Eigen::VectorXd g = r.eigenvectors.col(0);
    const double scale = g.cwiseAbs().maxCoeff();
    r.ground_sign_definite = (g.array() >= -1e-9 * scale).all() || (g.array() <= 1e-9 * scale).all();
    return r;
}

} // namespace

SpectrumReport spectrum(const OperatorTriple& ops, int k, std::string surface_id, EigenMethod method)
{
    SpectrumReport r = solve(ops.jacobi(), ops.P, ops.M, k, method);
    r.surface_id = std::move(surface_id);
    r.kind = ProblemKind::closed;
    return r;
}

SpectrumReport spectrum(const PeriodicMesh& mesh, int k, EigenMethod method)
{
    return spectrum(assemble(mesh), k, mesh.id, method);
}

SpectrumReport dirichlet_spectrum(const MeshWithBoundary& domain, int k, EigenMethod method)
{
    const OperatorTriple ops = assemble(domain.mesh);
    const std::vector<bool> boundary = domain.boundary_mask();
    std::vector<int> interior;
    std::vector<int> slot(ops.size(), -1);
    for (int v = 0; v < ops.size(); ++v) {
        if (!boundary[v]) {
            slot[v] = static_cast<int>(interior.size());
            interior.push_back(v);
        }
    }
    if (interior.empty()) {
        throw Error(ErrorKind::invalid_argument, "domain has no interior vertices");
    }
    const int n = static_cast<int>(interior.size());
    const SparseMatrix J = ops.jacobi();
    std::vector<Eigen::Triplet<double>> trips;
    for (int col = 0; col < J.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(J, col); it; ++it) {
            const int a = slot[it.row()], b = slot[it.col()];
            if (a >= 0 && b >= 0) {
                trips.emplace_back(a, b, it.value());
            }
        }
    }
    SparseMatrix Ji(n, n);
    Ji.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd Pi(n), Mi(n);
    for (int i = 0; i < n; ++i) {
        Pi[i] = ops.P[interior[i]];
        Mi[i] = ops.M[interior[i]];
    }
    SpectrumReport r = solve(Ji, Pi, Mi, k, method);
    r.surface_id = domain.mesh.id;
    r.kind = ProblemKind::dirichlet;
    r.interior = std::move(interior);
    return r;
}

IndexNullity index_nullity(SpectrumReport& report, double e, const ZeroPolicy& policy)
{
    if (!(e >= 0) || !std::isfinite(e)) {
        throw Error(ErrorKind::invalid_argument, "index and nullity need a refinement-error estimate");
    }
    const Eigen::VectorXd& lam = report.eigenvalues;
    if (lam.size() == 0) {
        throw Error(ErrorKind::invalid_argument, "empty spectrum");
    }
    const double floor = policy.relative_floor * std::abs(lam[0]);
    const double delta = std::max(policy.factor * e, floor);
    IndexNullity out;
    report.trace.clear();
    {
        std::ostringstream os;
        os.precision(6);
        os << "delta = max(" << policy.factor << " * e, " << policy.relative_floor << " * |lambda_0|) = max("
           << policy.factor * e << ", " << floor << ") = " << delta;
        report.trace.push_back(os.str());
    }
    for (int i = 0; i < lam.size(); ++i) {
        std::ostringstream os;
        os.precision(8);
        os << "lambda_" << i << " = " << lam[i] << ": ";
        if (std::abs(lam[i]) <= delta) {
            ++out.nullity;
            os << "zero";
        } else if (lam[i] < 0) {
            ++out.index;
            os << "negative";
        } else {
            os << "positive";
        }
        if (std::abs(lam[i]) > delta && std::abs(lam[i]) < 3 * delta) {
            out.ambiguous = true;
            os << " (ambiguous: within 3 delta)";
        }
        report.trace.push_back(os.str());
    }
    report.index = out.index;
    report.nullity = out.nullity;
    report.delta = delta;
    report.refinement_error = e;
    report.ambiguous = out.ambiguous;
    return out;
}

double refinement_error(const SpectrumReport& coarse, const SpectrumReport& fine, int count)
{
    int n = static_cast<int>(std::min(coarse.eigenvalues.size(), fine.eigenvalues.size()));
    if (count > 0) {
        n = std::min(n, count);
    }
    if (n == 0) {
        throw Error(ErrorKind::invalid_argument, "no common eigenvalues to compare");
    }
    double e = 0;
    for (int i = 0; i < n; ++i) {
        e = std::max(e, std::abs(coarse.eigenvalues[i] - fine.eigenvalues[i]));
    }
    return e;
}

double principal_angle(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W, const Eigen::VectorXd& mass)
{
    if (U.rows() != mass.size() || W.rows() != mass.size()) {
        throw Error(ErrorKind::dimension_mismatch, "subspace bases and mass differ in length");
    }
    const Eigen::VectorXd root = mass.cwiseSqrt();
    auto basis = [&](const Eigen::MatrixXd& X) {
        const Eigen::MatrixXd Y = root.asDiagonal() * X;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Y);
        if (qr.rank() < X.cols()) {
            throw Error(ErrorKind::rank_deficient, "subspace basis is rank deficient");
        }
        return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(Y.rows(), X.cols()));
    };
    const Eigen::MatrixXd Qu = basis(U), Qw = basis(W);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Qu.transpose() * Qw);
    const Eigen::VectorXd s = svd.singularValues();
    return std::acos(std::clamp(s.minCoeff(), -1.0, 1.0));
}

double kernel_match(SpectrumReport& report, const PeriodicMesh& mesh)
{
    if (report.nullity <= 0) {
        throw Error(ErrorKind::invalid_argument, "nullity is zero; no kernel to match");
    }
    if (report.kind != ProblemKind::closed || report.eigenvectors.rows() != mesh.vertex_count()) {
        throw Error(ErrorKind::dimension_mismatch, "report does not belong to this closed mesh");
    }
    std::vector<int> zero;
    for (int i = 0; i < report.eigenvalues.size(); ++i) {
        if (std::abs(report.eigenvalues[i]) <= report.delta) {
            zero.push_back(i);
        }
    }
    Eigen::MatrixXd U(mesh.vertex_count(), static_cast<int>(zero.size()));
    for (std::size_t j = 0; j < zero.size(); ++j) {
        U.col(static_cast<int>(j)) = report.eigenvectors.col(zero[j]);
    }
    const auto normals = vertex_normals(mesh);
    Eigen::MatrixXd N(mesh.vertex_count(), 3);
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        N.row(v) = normals[v].transpose();
    }
    const Eigen::VectorXd mass = compute_geometry(mesh).vertex_area;
    report.kernel_match_angle = principal_angle(U, N, mass);
    return report.kernel_match_angle;
}

} // namespace twistedp
