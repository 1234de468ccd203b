#include <cmath>
#include <vector>

#include "../support/oracles.hpp"
#include "doctest.h"
#include "semcert/density.hpp"
#include "semcert/errors.hpp"
#include "semcert/rng.hpp"

using namespace semcert;

namespace {

SmoothingSpec brightness_spec(double sigma, double kappa) {
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::brightness});
  spec.maps = {ParamMap::normal(kappa)};
  spec.sigma = sigma;
  return spec;
}

ImageTensor random_image(std::size_t h, std::size_t w, std::uint64_t seed) {
  Rng rng(seed);
  ImageTensor img(h, w, 1);
  for (double& v : img.values()) v = 0.1 + 0.8 * rng.uniform();
  return img;
}

ImageTensor draw_y(const SmoothingSpec& spec, const ImageTensor& x_hat, Rng& rng, Params& alpha) {
  alpha.resize(static_cast<Eigen::Index>(spec.dim()));
  for (Eigen::Index k = 0; k < alpha.size(); ++k) alpha(k) = rng.normal();
  std::vector<double> noise(x_hat.size());
  rng.fill_normal(noise);
  return sample_y(spec, x_hat, alpha, noise);
}

Params scalar(double v) { return Params::Constant(1, v); }

}  // namespace

TEST_CASE("sample_y") {
  const ImageTensor x = random_image(4, 4, 1);
  SmoothingSpec spec = brightness_spec(0.0, 0.3);
  CHECK(sample_y(spec, x, scalar(0.0), {}) == x);
  const ImageTensor y = sample_y(spec, x, scalar(1.5), {});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.values()[i] == x.values()[i] + 0.3 * 1.5);

  spec.sigma = 0.1;
  const ImageTensor big = random_image(100, 100, 2);
  Rng rng(3);
  std::vector<double> noise(big.size());
  rng.fill_normal(noise);
  const ImageTensor yb = sample_y(spec, big, scalar(0.7), noise);
  double mean = 0.0;
  for (std::size_t i = 0; i < big.size(); ++i) mean += yb.values()[i] - big.values()[i];
  mean /= static_cast<double>(big.size());
  CHECK(std::abs(mean - 0.3 * 0.7) <= 3 * 0.1 / std::sqrt(1e4));
  CHECK_THROWS_AS(sample_y(spec, big, scalar(0.7), std::vector<double>(3)), ContractError);
}

TEST_CASE("laplace estimate is exact for additive brightness") {
  const double sigma = 0.2, kappa = 0.5;
  const SmoothingSpec spec = brightness_spec(sigma, kappa);
  const ImageTensor x = random_image(2, 2, 4);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Params alpha;
    const ImageTensor y = draw_y(spec, x, rng, alpha);
    const LogDensityEval e = laplace_log_rho(spec, y, x, alpha);
    const double full = e.z + laplace_log_constant(y.size(), 1, sigma);
    CHECK(std::abs(full - oracle::additive_log_density(y, x, 0.0, sigma, kappa)) <= 1e-6);
    // The expansion point is irrelevant for a linear model.
    CHECK(std::abs(laplace_log_rho(spec, y, x, scalar(2.0)).z - e.z) <= 1e-9);
  }
}

TEST_CASE("laplace at the unperturbed image") {
  const SmoothingSpec spec = brightness_spec(0.1, 0.4);
  const ImageTensor x = random_image(3, 3, 6);
  const LogDensityEval e = laplace_log_rho(spec, x, x, scalar(0.0));
  CHECK(e.mu.norm() == 0.0);
  CHECK(e.alpha0.norm() == 0.0);
  CHECK(std::abs(e.z + 0.5 * std::log(e.m.determinant())) <= 1e-12);
  CHECK(e.m(0, 0) == doctest::Approx(9 * 0.16 + 0.01));
  CHECK_THROWS_AS(laplace_log_rho(brightness_spec(0.0, 0.4), x, x, scalar(0.0)), DomainError);
}

TEST_CASE("laplace estimate tracks brute-force quadrature for a nonlinear transform") {
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::contrast});
  spec.maps = {ParamMap::lognormal(0.0, 0.2)};
  spec.sigma = 0.1;
  spec.gn_iterations = 3;
  const ImageTensor x = random_image(4, 4, 7);
  Rng rng(8);
  for (int trial = 0; trial < 3; ++trial) {
    Params alpha;
    const ImageTensor y = draw_y(spec, x, rng, alpha);
    const double brute = oracle::brute_log_rho(spec, y, x, oracle::latent_mode(spec, y, x));
    const double approx = laplace_log_rho(spec, y, x, alpha).z + laplace_log_constant(y.size(), 1, spec.sigma);
    CHECK(std::abs(brute - approx) <= 1e-2);
  }
}

TEST_CASE("finite-difference derivative of z in alpha is stable") {
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::gamma});
  spec.maps = {ParamMap::lognormal(0.0, 0.3)};
  spec.sigma = 0.05;
  const ImageTensor x = random_image(3, 3, 9);
  Rng rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    Params alpha;
    const ImageTensor y = draw_y(spec, x, rng, alpha);
    auto dz = [&](double h) {
      return (laplace_log_rho(spec, y, x, alpha + scalar(h)).z - laplace_log_rho(spec, y, x, alpha - scalar(h)).z) /
             (2 * h);
    };
    const double coarse = dz(1e-4);
    const double fine = dz(1e-5);
    CHECK(std::abs(coarse - fine) <= 1e-4 * std::max(1.0, std::abs(fine)));
  }
}

TEST_CASE("brightness score matches the closed form") {
  const double sigma = 0.15, kappa = 0.3;
  const SmoothingSpec spec = brightness_spec(sigma, kappa);
  const ImageTensor x = random_image(3, 3, 11);
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const double beta = 0.4 * rng.uniform() - 0.2;
    Params alpha;
    const ImageTensor y = draw_y(spec, brightness(x, beta), rng, alpha);
    const double grad = grad_log_rho_beta(spec, y, x, alpha, scalar(beta))(0);
    const double expected = oracle::additive_score(y, x, beta, sigma, kappa);
    CHECK(std::abs(grad - expected) <= 1e-5 * std::max(1.0, std::abs(expected)));
  }
}

TEST_CASE("noise-free score of additive brightness") {
  const double kappa = 0.6;
  const SmoothingSpec spec = brightness_spec(0.0, kappa);
  const ImageTensor x(1, 1, 1, 0.5);
  for (double a : {-1.3, 0.0, 0.4, 2.2}) {
    // θ = β + κα ~ N(β, κ²): ∂/∂β log density = (θ − β)/κ² = α/κ.
    CHECK(grad_log_rho_beta(spec, x, x, scalar(a), scalar(0.1))(0) == doctest::Approx(a / kappa).epsilon(1e-6));
  }
}

TEST_CASE("contrast score matches finite differences of the Laplace density") {
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::contrast});
  spec.maps = {ParamMap::lognormal(0.0, 0.25)};
  spec.sigma = 0.1;
  spec.gn_iterations = 4;
  const ImageTensor x = random_image(4, 4, 13);
  Rng rng(14);
  for (int trial = 0; trial < 5; ++trial) {
    const double beta = 0.8 + 0.4 * rng.uniform();
    Params alpha;
    const ImageTensor y = draw_y(spec, contrast(x, beta), rng, alpha);
    // Laplace density at converged Gauss-Newton points: insensitive to the
    // expansion point, so a plain β difference is the total derivative.
    auto logrho = [&](double b) {
      return laplace_log_rho(spec, y, contrast(x, b), alpha).z;
    };
    const double h = 1e-4;
    const double fd = (logrho(beta + h) - logrho(beta - h)) / (2 * h);
    const double grad = grad_log_rho_beta(spec, y, x, alpha, scalar(beta))(0);
    CHECK(std::abs(grad - fd) <= 1e-3 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("score has zero mean at the generating parameter") {
  struct Case {
    std::vector<TransformKind> kinds;
    std::vector<ParamMap> maps;
    double sigma;
    std::size_t draws;
  };
  const std::vector<Case> cases = {
      {{TransformKind::brightness}, {ParamMap::normal(0.3)}, 0.0, 100000},
      {{TransformKind::contrast}, {ParamMap::lognormal(0.0, 0.3)}, 0.0, 100000},
      {{TransformKind::gamma}, {ParamMap::lognormal(0.0, 0.3)}, 0.0, 100000},
      {{TransformKind::translate}, {ParamMap::normal(2.0), ParamMap::normal(2.0)}, 0.0, 50000},
      {{TransformKind::contrast, TransformKind::brightness},
       {ParamMap::lognormal(0.0, 0.3), ParamMap::normal(0.2)}, 0.0, 50000},
      {{TransformKind::brightness}, {ParamMap::normal(0.3)}, 0.1, 20000},
      {{TransformKind::contrast}, {ParamMap::lognormal(0.0, 0.2)}, 0.1, 20000},
  };
  // Laplace accuracy needs enough pixels to concentrate the latent posterior.
  const ImageTensor x = random_image(8, 8, 15);
  for (const auto& c : cases) {
    SmoothingSpec spec;
    spec.transform = CompositeTransform(c.kinds);
    spec.maps = c.maps;
    spec.sigma = c.sigma;
    spec.gn_iterations = 3;
    const Params beta = spec.transform.identity() + (spec.transform.pointwise() ? Params::Constant(spec.dim(), 0.05)
                                                                                 : Params::Constant(spec.dim(), 0.5));
    Rng rng(16);
    const auto d = static_cast<Eigen::Index>(spec.dim());
    Params sum = Params::Zero(d), sumsq = Params::Zero(d);
    const ImageTensor x_hat = spec.transform.apply(x, beta);
    for (std::size_t k = 0; k < c.draws; ++k) {
      Params alpha;
      const ImageTensor y = c.sigma > 0 ? draw_y(spec, x_hat, rng, alpha) : x;
      if (c.sigma == 0) {
        alpha.resize(d);
        for (Eigen::Index i = 0; i < d; ++i) alpha(i) = rng.normal();
      }
      const Params g = grad_log_rho_beta(spec, y, x, alpha, beta);
      sum += g;
      sumsq += g.cwiseProduct(g);
    }
    const double n = static_cast<double>(c.draws);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double mean = sum(i) / n;
      const double se = std::sqrt((sumsq(i) / n - mean * mean) / n);
      INFO("first transform ", to_string(c.kinds.front()), " sigma ", c.sigma, " coord ", i, " mean ", mean, " se ", se);
      CHECK(std::abs(mean) <= 3 * se);
    }
  }
}

TEST_CASE("noise-free blur score sees a moving support") {
  // θ = √(R² + β²) with R ~ Rayleigh(1) has density θ·exp(−(θ² − β²)/2) on
  // [β, ∞): its β-score is the constant β, and the centered score vanishes.
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::blur});
  spec.maps = {ParamMap::rayleigh(1.0)};
  const ImageTensor x(1, 1, 1, 0.5);
  for (double a : {-1.0, 0.0, 0.5, 2.0}) {
    CHECK(grad_log_rho_beta(spec, x, x, scalar(a), scalar(0.5))(0) == doctest::Approx(0.5).epsilon(1e-5));
  }
}

TEST_CASE("resolving jacobians for contrast-brightness") {
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::contrast, TransformKind::brightness});
  spec.maps = {ParamMap::lognormal(0.0, 0.3), ParamMap::normal(0.2)};
  Params alpha(2), beta(2);
  alpha << 0.4, -0.7;
  beta << 1.1, 0.05;
  const ResolveJacobians j = latent_resolve_jacobians(spec, alpha, beta);
  // Γ = (c_a·c_b, c_a·b_b + b_a) with c_a = e^{0.3α₁}, b_a = 0.2α₂.
  const double ca = std::exp(0.3 * 0.4);
  CHECK(j.d_alpha(0, 0) == doctest::Approx(0.3 * ca * 1.1).epsilon(1e-8));
  CHECK(j.d_alpha(1, 0) == doctest::Approx(0.3 * ca * 0.05).epsilon(1e-6));
  CHECK(j.d_alpha(1, 1) == doctest::Approx(0.2).epsilon(1e-8));
  CHECK(j.d_beta(0, 0) == doctest::Approx(ca).epsilon(1e-8));
  CHECK(j.d_beta(1, 1) == doctest::Approx(ca).epsilon(1e-8));
  CHECK(std::abs(j.d_beta(0, 1)) <= 1e-9);
}
