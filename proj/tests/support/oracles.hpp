#pragma once
// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "semcert/density.hpp"

namespace semcert::oracle {

/// log N(y; x + β·1, σ²I + κ²11ᵀ): exact density of additive brightness smoothing.
inline double additive_log_density(const ImageTensor& y, const ImageTensor& x, double beta, double sigma,
                                   double kappa) {
  const double n = static_cast<double>(y.size());
  double sum = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y.values()[i] - x.values()[i] - beta;
    sum += r;
    sq += r * r;
  }
  const double s2 = sigma * sigma;
  const double quad = (sq - kappa * kappa * sum * sum / (s2 + n * kappa * kappa)) / s2;
  const double logdet = n * std::log(s2) + std::log1p(n * kappa * kappa / s2);
  return -0.5 * quad - 0.5 * logdet - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// 1ᵀ(y − x − β1)/(σ² + nκ²): β-score of the additive density.
inline double additive_score(const ImageTensor& y, const ImageTensor& x, double beta, double sigma, double kappa) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += y.values()[i] - x.values()[i] - beta;
  return sum / (sigma * sigma + static_cast<double>(y.size()) * kappa * kappa);
}

namespace detail {

inline double log_integrand(const SmoothingSpec& spec, const ImageTensor& y, const ImageTensor& x_hat,
                            const Params& a) {
  const ImageTensor phi = spec.transform.apply(x_hat, psi_forward(spec.maps, a));
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y.values()[i] - phi.values()[i];
    sq += r * r;
  }
  return -sq / (2.0 * spec.sigma * spec.sigma) - 0.5 * a.squaredNorm();
}

inline double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

/// Latent mode of the integrand by coarse grid search refined by golden-section
/// sweeps per coordinate.
inline Params latent_mode(const SmoothingSpec& spec, const ImageTensor& y, const ImageTensor& x_hat) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  Params best = Params::Zero(d);
  double best_val = detail::log_integrand(spec, y, x_hat, best);
  const int coarse = d == 1 ? 1601 : 161;
  const double span = 6.0;
  if (d == 1) {
    for (int i = 0; i < coarse; ++i) {
      Params a = Params::Constant(1, -span + 2 * span * i / (coarse - 1));
      const double v = detail::log_integrand(spec, y, x_hat, a);
      if (v > best_val) best_val = v, best = a;
    }
  } else {
    for (int i = 0; i < coarse; ++i) {
      for (int j = 0; j < coarse; ++j) {
        Params a(2);
        a << -span + 2 * span * i / (coarse - 1), -span + 2 * span * j / (coarse - 1);
        const double v = detail::log_integrand(spec, y, x_hat, a);
        if (v > best_val) best_val = v, best = a;
      }
    }
  }
  double radius = 2 * span / (coarse - 1);
  for (int sweep = 0; sweep < 40; ++sweep) {
    for (Eigen::Index k = 0; k < d; ++k) {
      double lo = best(k) - radius;
      double hi = best(k) + radius;
      const double g = (std::sqrt(5.0) - 1) / 2;
      for (int it = 0; it < 80; ++it) {
        const double m1 = hi - g * (hi - lo);
        const double m2 = lo + g * (hi - lo);
        Params a1 = best, a2 = best;
        a1(k) = m1;
        a2(k) = m2;
        if (detail::log_integrand(spec, y, x_hat, a1) > detail::log_integrand(spec, y, x_hat, a2)) {
          hi = m2;
        } else {
          lo = m1;
        }
      }
      best(k) = 0.5 * (lo + hi);
    }
    radius *= 0.5;
  }
  return best;
}

/// log ρ(y | x̂) = log ∫ N(y; φ(x̂, ψ(a)), σ²I) N(a; 0, I) da by trapezoid
/// quadrature over ±12 posterior widths around `mode`, in the coordinates
/// that whiten the finite-difference Hessian of the integrand.
inline double brute_log_rho(const SmoothingSpec& spec, const ImageTensor& y, const ImageTensor& x_hat,
                            const Params& mode) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const double n = static_cast<double>(y.size());
  const double s = spec.sigma;
  const double constant = -0.5 * n * std::log(2 * std::numbers::pi * s * s) -
                          0.5 * static_cast<double>(d) * std::log(2 * std::numbers::pi);
  auto f = [&](const Params& a) { return detail::log_integrand(spec, y, x_hat, a); };
  const double h = 1e-3;
  Eigen::MatrixXd hess(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Params pp = mode, pm = mode, mp = mode, mm = mode;
      pp(i) += h, pp(j) += h;
      pm(i) += h, pm(j) -= h;
      mp(i) -= h, mp(j) += h;
      mm(i) -= h, mm(j) -= h;
      hess(i, j) = -(f(pp) - f(pm) - f(mp) + f(mm)) / (4 * h * h);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(1e-6);
  const Eigen::MatrixXd basis = eig.eigenvectors() * lambda.cwiseSqrt().cwiseInverse().asDiagonal();
  const double log_jac = -0.5 * lambda.array().log().sum();

  const int nodes = d == 1 ? 4001 : 401;
  const double half = 12.0;
  const double step = 2 * half / (nodes - 1);
  std::vector<double> logs;
  logs.reserve(static_cast<std::size_t>(d == 1 ? nodes : nodes * nodes));
  const int outer = d == 1 ? 1 : nodes;
  for (int i = 0; i < outer; ++i) {
    for (int j = 0; j < nodes; ++j) {
      Params u(d);
      double w = static_cast<double>(d) * std::log(step);
      if (d == 1) {
        u(0) = -half + step * j;
      } else {
        u << -half + step * i, -half + step * j;
        if (i == 0 || i == nodes - 1) w += std::log(0.5);
      }
      if (j == 0 || j == nodes - 1) w += std::log(0.5);
      logs.push_back(f(mode + basis * u) + w);
    }
  }
  return constant + log_jac + detail::log_sum_exp(logs);
}

}  // namespace semcert::oracle
