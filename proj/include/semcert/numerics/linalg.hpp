#pragma once

#include <Eigen/Dense>

namespace semcert::numerics {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

/// Lower-triangular L with L·Lᵀ = m. Throws NumericError when m is not
/// numerically symmetric positive definite.
DenseMatrix cholesky_lower(const DenseMatrix& m);

/// Solves m·s = rhs for SPD m (the Gauss-Newton normal equations JᵀJ + σ²I).
Vector gauss_newton_solve(const DenseMatrix& m, const Vector& rhs);

/// 2·Σ log L_ii of the Cholesky factor.
double log_det_spd(const DenseMatrix& m);

/// Moore-Penrose pseudo-inverse; singular values below rel_tol·σ_max are zeroed.
DenseMatrix pinv(const DenseMatrix& a, double rel_tol = 1e-10);

}  // namespace semcert::numerics
