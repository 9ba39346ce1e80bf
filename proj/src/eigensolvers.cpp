#include "twistedp/eigensolvers.hpp"

#include "twistedp/error.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace twistedp {

const char* to_string(EigenMethod method)
{
    switch (method) {
    case EigenMethod::automatic: return "automatic";
    case EigenMethod::dense: return "dense";
    case EigenMethod::shift_invert: return "shift_invert";
    }
    return "?";
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

EigenResult dense_solve(const SparseMatrix& C, const VectorXd& dinv, int k)
{
    const int n = static_cast<int>(C.rows());
    MatrixXd a = MatrixXd(C);
    VectorXd w(n);
    MatrixXd z(n, k);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'U', n, a.data(), n, 0.0, 0.0, 1, k, 0.0, &found,
                                           w.data(), z.data(), n, support.data());
    if (info != 0 || found != k) {
        throw Error(ErrorKind::no_convergence, "dense eigensolver failed (info " + std::to_string(info) + ")");
    }
    EigenResult r;
    r.method = EigenMethod::dense;
    r.values = w.head(k);
    r.vectors = dinv.asDiagonal() * z;
    return r;
}

// Orthonormalises the columns of W against `basis` (first `used` columns) and
// among themselves; columns that vanish are replaced by random directions.
void orthonormalise(MatrixXd& W, const MatrixXd& basis, int used, std::mt19937& rng)
{
    std::normal_distribution<double> normal;
    for (int col = 0; col < W.cols(); ++col) {
        for (int attempt = 0; attempt < 4; ++attempt) {
            const double before = W.col(col).norm();
            for (int pass = 0; pass < 2; ++pass) {
                if (used > 0) {
                    W.col(col) -= basis.leftCols(used) * (basis.leftCols(used).transpose() * W.col(col));
                }
                if (col > 0) {
                    W.col(col) -= W.leftCols(col) * (W.leftCols(col).transpose() * W.col(col));
                }
            }
            const double after = W.col(col).norm();
            if (after > 1e-10 * std::max(before, 1e-300)) {
                W.col(col) /= after;
                break;
            }
            for (int i = 0; i < W.rows(); ++i) {
                W(i, col) = normal(rng);
            }
        }
    }
}

EigenResult shift_invert_solve(const SparseMatrix& C, const VectorXd& dinv, int k, double sigma, unsigned seed)
{
    const int n = static_cast<int>(C.rows());
    SparseMatrix shifted = C;
    for (int i = 0; i < n; ++i) {
        shifted.coeffRef(i, i) -= sigma;
    }
    Eigen::SimplicialLLT<SparseMatrix> llt(shifted);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::no_convergence, "shifted operator is not positive definite");
    }
    const int block = std::min(8, n);
    const int capacity = std::min(n, std::max(12 * k + 4 * block, 160));
    std::mt19937 rng(seed);
    std::normal_distribution<double> normal;

    MatrixXd start(n, block);
    for (int i = 0; i < start.size(); ++i) {
        start.data()[i] = normal(rng);
    }
    const double tol = 1e-11;
    EigenResult r;
    r.method = EigenMethod::shift_invert;
    MatrixXd ritz;   // converged or best Ritz vectors (C-orthonormal basis)
    for (int restart = 0; restart < 30; ++restart) {
        MatrixXd V(n, capacity);
        MatrixXd W(n, capacity);
        int used = 0;
        MatrixXd Q = start;
        orthonormalise(Q, V, 0, rng);
        bool converged = false;
        Eigen::SelfAdjointEigenSolver<MatrixXd> small;
        while (used + Q.cols() <= capacity) {
            const int b = static_cast<int>(Q.cols());
            V.middleCols(used, b) = Q;
            W.middleCols(used, b) = llt.solve(Q);
            used += b;
            ++r.iterations;
            if (used >= std::min(n, k + block)) {
                const MatrixXd H = V.leftCols(used).transpose() * W.leftCols(used);
                small.compute(0.5 * (H + H.transpose()));
                converged = true;
                for (int i = 0; i < std::min(k, used); ++i) {
                    const int idx = used - 1 - i;   // largest theta first
                    const double theta = small.eigenvalues()[idx];
                    const VectorXd s = small.eigenvectors().col(idx);
                    const double res = (W.leftCols(used) * s - theta * (V.leftCols(used) * s)).norm();
                    if (res > tol * std::abs(theta)) {
                        converged = false;
                        break;
                    }
                }
                if (converged && used >= k) {
                    break;
                }
            }
            if (used == n) {
                break;
            }
            MatrixXd next = W.middleCols(used - b, b);
            orthonormalise(next, V, used, rng);
            Q = next;
        }
        const int keep = std::min(used, k + block);
        ritz = V.leftCols(used) * small.eigenvectors().rightCols(keep);
        if (converged || used == n) {
            break;
        }
        start = ritz;
        if (restart == 29) {
            throw Error(ErrorKind::no_convergence, "shift-invert Lanczos did not converge");
        }
    }
    // final Rayleigh-Ritz on the operator itself
    const MatrixXd G = ritz.transpose() * (C * ritz);
    Eigen::SelfAdjointEigenSolver<MatrixXd> fin(0.5 * (G + G.transpose()));
    r.values = fin.eigenvalues().head(k);
    r.vectors = dinv.asDiagonal() * (ritz * fin.eigenvectors().leftCols(k));
    return r;
}

} // namespace

EigenResult lowest_eigenpairs(const SparseMatrix& A, const Eigen::VectorXd& mass, int k, double lower_bound,
                              EigenMethod method, unsigned seed)
{
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || mass.size() != n) {
        throw Error(ErrorKind::dimension_mismatch, "operator and mass sizes differ");
    }
    if (k < 1 || k > n) {
        throw Error(ErrorKind::invalid_argument, "requested eigenpair count out of range");
    }
    if ((mass.array() <= 0).any() || !mass.allFinite()) {
        throw Error(ErrorKind::non_finite, "mass must be positive and finite");
    }
    const VectorXd dinv = mass.array().rsqrt();
    SparseMatrix C = dinv.asDiagonal() * A * dinv.asDiagonal();
    C = 0.5 * (SparseMatrix(C.transpose()) + C);
    if (method == EigenMethod::automatic) {
        method = n <= kDenseLimit ? EigenMethod::dense : EigenMethod::shift_invert;
    }
    EigenResult r = method == EigenMethod::dense ? dense_solve(C, dinv, k)
                                                 : shift_invert_solve(C, dinv, k, lower_bound, seed);
    for (int i = 0; i < k; ++i) {
        const VectorXd u = r.vectors.col(i);
        const VectorXd Mu = mass.asDiagonal() * u;
        r.max_residual = std::max(r.max_residual, (A * u - r.values[i] * Mu).norm() / Mu.norm());
    }
    return r;
}

} // namespace twistedp
