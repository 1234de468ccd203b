#include "semcert/density.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "semcert/errors.hpp"

namespace semcert {
namespace {

using numerics::DenseMatrix;
using numerics::Vector;

constexpr double kLatentStep = 1e-6;
constexpr double kDensityStep = 1e-4;

double scaled_step(double base, double v) { return base * std::max(1.0, std::abs(v)); }

Vector central_gradient(const std::function<double(const Params&)>& f, const Params& at, double base) {
  Vector grad(at.size());
  for (Eigen::Index k = 0; k < at.size(); ++k) {
    const double h = scaled_step(base, at(k));
    Params plus = at;
    Params minus = at;
    plus(k) += h;
    minus(k) -= h;
    grad(k) = (f(plus) - f(minus)) / (2.0 * h);
  }
  return grad;
}

}  // namespace

void SmoothingSpec::validate() const {
  if (transform.size() == 0) throw ContractError("smoothing spec has no transform");
  if (maps.size() != transform.dim()) {
    throw ContractError("smoothing spec needs one distribution per parameter coordinate (" +
                        std::to_string(transform.dim()) + "), got " + std::to_string(maps.size()));
  }
  for (const auto& m : maps) m.validate();
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be finite and non-negative");
  if (n_samples == 0) throw DomainError("n_samples must be positive");
  if (gn_iterations == 0) throw DomainError("gn_iterations must be positive");
}

ImageTensor sample_y(const SmoothingSpec& spec, const ImageTensor& x_hat, const Params& alpha,
                     std::span<const double> noise) {
  ImageTensor y = spec.transform.apply(x_hat, psi_forward(spec.maps, alpha));
  if (spec.sigma > 0.0) {
    if (noise.size() != y.size()) throw ContractError("sample_y: noise length does not match the image");
    auto v = y.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += spec.sigma * noise[i];
  }
  return y;
}

double laplace_log_constant(std::size_t n, std::size_t d, double sigma) {
  return -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi * sigma * sigma) +
         static_cast<double>(d) * std::log(sigma);
}

LogDensityEval laplace_log_rho(const SmoothingSpec& spec, const ImageTensor& y, const ImageTensor& x_hat,
                               const Params& alpha) {
  if (!(spec.sigma > 0.0)) throw DomainError("laplace_log_rho requires sigma > 0");
  if (!y.same_shape(x_hat)) throw ContractError("laplace_log_rho: y and x_hat differ in shape");
  const double s2 = spec.sigma * spec.sigma;
  auto yv = y.values();
  const Eigen::Map<const Vector> y_vec(yv.data(), static_cast<Eigen::Index>(yv.size()));

  LogDensityEval out;
  Params point = alpha;
  for (std::size_t iter = 0; iter < spec.gn_iterations; ++iter) {
    const Params theta = psi_forward(spec.maps, point);
    const ImageTensor phi = spec.transform.apply(x_hat, theta);
    DenseMatrix jac = spec.transform.jacobian(x_hat, theta);
    jac *= psi_jacobian_diag(spec.maps, point).asDiagonal();
    auto pv = phi.values();
    const Eigen::Map<const Vector> phi_vec(pv.data(), static_cast<Eigen::Index>(pv.size()));

    out.mu = y_vec - phi_vec + jac * point;
    out.m = jac.transpose() * jac;
    out.m.diagonal().array() += s2;
    out.alpha0 = numerics::gauss_newton_solve(out.m, jac.transpose() * out.mu);
    out.z = -out.mu.squaredNorm() / (2.0 * s2) + out.alpha0.dot(out.m * out.alpha0) / (2.0 * s2) -
            0.5 * numerics::log_det_spd(out.m);
    point = out.alpha0;
  }
  if (!std::isfinite(out.z)) throw NumericError("laplace_log_rho: non-finite log-density");
  return out;
}

Params latent_resolve(const SmoothingSpec& spec, const Params& alpha, const Params& beta) {
  return spec.transform.resolve(psi_forward(spec.maps, alpha), beta);
}

ResolveJacobians latent_resolve_jacobians(const SmoothingSpec& spec, const Params& alpha,
                                          const Params& beta) {
  const auto d = alpha.size();
  ResolveJacobians out{DenseMatrix(d, d), DenseMatrix(d, d)};
  for (Eigen::Index k = 0; k < d; ++k) {
    const double ha = scaled_step(kLatentStep, alpha(k));
    Params ap = alpha;
    Params am = alpha;
    ap(k) += ha;
    am(k) -= ha;
    out.d_alpha.col(k) = (latent_resolve(spec, ap, beta) - latent_resolve(spec, am, beta)) / (2.0 * ha);

    const double hb = scaled_step(kLatentStep, beta(k));
    Params bp = beta;
    Params bm = beta;
    bp(k) += hb;
    bm(k) -= hb;
    out.d_beta.col(k) = (latent_resolve(spec, alpha, bp) - latent_resolve(spec, alpha, bm)) / (2.0 * hb);
  }
  return out;
}

double latent_log_density(const SmoothingSpec& spec, const Params& alpha, const Params& beta) {
  const auto d = alpha.size();
  DenseMatrix jac(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double h = scaled_step(kLatentStep, alpha(k));
    Params ap = alpha;
    Params am = alpha;
    ap(k) += h;
    am(k) -= h;
    jac.col(k) = (latent_resolve(spec, ap, beta) - latent_resolve(spec, am, beta)) / (2.0 * h);
  }
  const double det = d == 1 ? jac(0, 0) : jac.partialPivLu().determinant();
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) {
    throw NumericError("latent_log_density: singular resolving Jacobian");
  }
  return -0.5 * alpha.squaredNorm() - 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi) -
         std::log(std::abs(det));
}

Params grad_log_rho_beta(const SmoothingSpec& spec, const ImageTensor& y, const ImageTensor& x,
                         const Params& alpha, const Params& beta) {
  const auto d = static_cast<Eigen::Index>(spec.dim());
  if (alpha.size() != d || beta.size() != d) throw ContractError("grad_log_rho_beta: dimension mismatch");

  std::function<double(const Params&, const Params&)> z;
  if (spec.sigma > 0.0) {
    z = [&](const Params& a, const Params& b) {
      return laplace_log_rho(spec, y, spec.transform.apply(x, b), a).z;
    };
  } else {
    z = [&](const Params& a, const Params& b) { return latent_log_density(spec, a, b); };
  }
  const Vector dz_db = central_gradient([&](const Params& b) { return z(alpha, b); }, beta, kDensityStep);
  const Vector dz_da = central_gradient([&](const Params& a) { return z(a, beta); }, alpha, kDensityStep);
  const ResolveJacobians jac = latent_resolve_jacobians(spec, alpha, beta);
  const Vector correction = (dz_da.transpose() * numerics::pinv(jac.d_alpha) * jac.d_beta).transpose();
  return dz_db - correction;
}

}  // namespace semcert
