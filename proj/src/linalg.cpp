#include "semcert/numerics/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcert/errors.hpp"

namespace semcert::numerics {

DenseMatrix cholesky_lower(const DenseMatrix& m) {
  if (m.rows() != m.cols()) throw ContractError("cholesky: matrix is not square");
  if (!m.allFinite()) throw NumericError("cholesky: non-finite entries");
  const Eigen::Index n = m.rows();
  const double scale = m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, scale)) {
    throw NumericError("cholesky: matrix is not symmetric");
  }
  DenseMatrix l = DenseMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = m(j, j);
    for (Eigen::Index k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0)) {
      throw NumericError("cholesky: non-positive pivot " + std::to_string(diag) + " at column " +
                         std::to_string(j));
    }
    l(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

Vector gauss_newton_solve(const DenseMatrix& m, const Vector& rhs) {
  if (rhs.size() != m.rows()) throw ContractError("gauss_newton_solve: dimension mismatch");
  const DenseMatrix l = cholesky_lower(m);
  const Eigen::Index n = m.rows();
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double s = rhs(i);
    for (Eigen::Index k = 0; k < i; ++k) s -= l(i, k) * z(k);
    z(i) = s / l(i, i);
  }
  Vector x(n);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    double s = z(i);
    for (Eigen::Index k = i + 1; k < n; ++k) s -= l(k, i) * x(k);
    x(i) = s / l(i, i);
  }
  return x;
}

double log_det_spd(const DenseMatrix& m) {
  const DenseMatrix l = cholesky_lower(m);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

DenseMatrix pinv(const DenseMatrix& a, double rel_tol) {
  if (a.size() == 0) return DenseMatrix(a.cols(), a.rows());
  Eigen::JacobiSVD<DenseMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace semcert::numerics
