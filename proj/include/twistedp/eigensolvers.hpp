#pragma once

// Lowest eigenpairs of A u = lambda diag(mass) u for sparse symmetric A.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <string>

namespace twistedp {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class EigenMethod { automatic, dense, shift_invert };

const char* to_string(EigenMethod method);

struct EigenResult {
    Eigen::VectorXd values;    // ascending
    Eigen::MatrixXd vectors;   // mass-orthonormal columns
    EigenMethod method = EigenMethod::dense;
    int iterations = 0;        // Krylov blocks used by the shift-invert path
    double max_residual = 0;   // max ||A u - lambda M u|| / ||M u||
};

/// Unknown counts up to this size use the dense solver under EigenMethod::automatic.
inline constexpr int kDenseLimit = 4000;

/// `lower_bound` must be strictly below the smallest eigenvalue for the
/// shift-invert path (it is used as the shift of a Cholesky factorisation).
EigenResult lowest_eigenpairs(const SparseMatrix& A, const Eigen::VectorXd& mass, int k, double lower_bound,
                              EigenMethod method = EigenMethod::automatic, unsigned seed = 7);

} // namespace twistedp
