#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "semcert/certify.hpp"
#include "semcert/errors.hpp"
#include "semcert/numerics/special.hpp"

using namespace semcert;

namespace {

Params scalar(double v) { return Params::Constant(1, v); }

BoundTable additive_table(double sigma, double kappa) {
  SmoothingSpec spec;
  spec.transform = CompositeTransform({TransformKind::brightness});
  spec.maps = {ParamMap::normal(kappa)};
  spec.sigma = sigma;
  spec.n_samples = 100000;
  BoundsOptions opt;
  opt.seed = 77;
  opt.ray_samples = 2;
  const ParameterGrid grid =
      ParameterGrid::tensor(Params::Zero(1), Params::Constant(1, -1.0), Params::Constant(1, 1.0), 3);
  return compute_normed_bounds(ImageTensor(1, 1, 1, 0.5), spec, grid, opt);
}

const Certifier& kappa06() {
  static const Certifier cert(additive_table(0.0, 0.6));
  return cert;
}

// One-dimensional table with a flat profile and the given magnitude samples on both rays.
BoundTable hand_table(std::vector<double> radii, std::vector<double> magnitude, double scale) {
  BoundTable t;
  t.n_samples = 4;
  t.p = {1, 1, 1, 1, 1};
  t.scale = scale;
  const double reach = radii.back();
  t.grid = ParameterGrid::tensor(Params::Zero(1), scalar(-reach), scalar(reach), 3);
  t.rays = {Ray{scalar(-1.0), radii, magnitude}, Ray{scalar(1.0), radii, magnitude}};
  t.point_ray = {0, -1, 1};
  t.g = {magnitude.back() * reach, 0.0, magnitude.back() * reach};
  return t;
}

double certified_radius(const Certifier& cert, double h) {
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (certify_point(cert, h, scalar(mid)).certified ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST_CASE("xi of a flat profile is linear") {
  const Certifier cert(hand_table({0.0, 1.0}, {1.0, 1.0}, 1.0));
  for (double h : {0.0, 0.1, 0.25, 0.6, 1.0}) CHECK(cert.xi(h) == doctest::Approx(h).epsilon(1e-14));
}

TEST_CASE("xi matches the closed form for additive brightness") {
  for (auto [sigma, kappa] : {std::pair{0.0, 0.6}, std::pair{0.3, 0.4}}) {
    const Certifier cert = sigma == 0.0 ? kappa06() : Certifier(additive_table(sigma, kappa));
    const double s = std::hypot(sigma, kappa);
    double worst = 0.0;
    for (int i = 10; i <= 90; ++i) {
      const double h = i / 100.0;
      worst = std::max(worst, std::abs(cert.xi(h) - cert.xi(0.5) - analytic_additive_xi(h, sigma, kappa)));
    }
    CHECK(worst <= 0.05 * s);
    const auto v = cert.xi_curve().values();
    for (std::size_t i = 1; i < v.size(); ++i) REQUIRE(v[i] > v[i - 1]);
  }
}

TEST_CASE("ghat along rays") {
  const double s = 0.8;
  const Certifier flat(hand_table({0.0, 0.5, 1.0}, {s, s, s}, s));
  CHECK(flat.ghat(scalar(0.0)).value == 0.0);
  CHECK(flat.ghat(scalar(0.7)).value == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(flat.ghat(scalar(-0.3)).value == doctest::Approx(0.3).epsilon(1e-12));
  const Certifier half(hand_table({0.0, 0.5, 1.0}, {s, s, s}, 2 * s));
  CHECK(half.ghat(scalar(0.7)).value == doctest::Approx(0.35).epsilon(1e-12));
  CHECK_FALSE(flat.ghat(scalar(0.9)).extrapolated);
  CHECK(flat.ghat(scalar(1.5)).extrapolated);

  // Nonlinear magnitude m(r) = 1 + r² sampled at 9 radii, against fine quadrature
  // of the same piecewise-linear interpolant.
  std::vector<double> radii, mags;
  for (int i = 0; i <= 8; ++i) {
    radii.push_back(i / 8.0);
    mags.push_back(1.0 + (i / 8.0) * (i / 8.0));
  }
  const Certifier curved(hand_table(radii, mags, 1.0));
  const double r = 0.83;
  double fine = 0.0;
  const int steps = 200000;
  for (int k = 0; k < steps; ++k) {
    const double u = (k + 0.5) / steps * r;
    const auto it = std::upper_bound(radii.begin(), radii.end(), u);
    const std::size_t j = static_cast<std::size_t>(it - radii.begin()) - 1;
    const double w = (u - radii[j]) / (radii[j + 1] - radii[j]);
    fine += ((1 - w) * mags[j] + w * mags[j + 1]) * r / steps;
  }
  CHECK(std::abs(curved.ghat(scalar(r)).value - fine) <= 1e-3 * fine);
}

TEST_CASE("ghat off the stored rays interpolates the endpoint values") {
  BoundTable t;
  t.n_samples = 2;
  t.p = {1, 1, 1};
  t.scale = 1.0;
  t.grid = ParameterGrid::tensor(Params::Zero(2), Params::Constant(2, -1), Params::Constant(2, 1), 3);
  t.point_ray.assign(9, -1);
  t.g.assign(9, 0.0);
  for (std::size_t j = 0; j < 9; ++j) {
    const Params off = t.grid.points[j];
    if (off.norm() == 0.0) continue;
    t.rays.push_back(Ray{off / off.norm(), {0.0, off.norm()}, {1.0, 1.0}});
    t.point_ray[j] = static_cast<long>(t.rays.size() - 1);
    t.g[j] = off.norm();
  }
  const Certifier cert(t);
  Params q(2);
  q << 0.5, 0.25;
  // Cell [0,1]×[0,1] corners: ĝ = 0, 1, 1, √2 at (0,0), (0,1), (1,0), (1,1).
  const double expected = 0.5 * 0.75 * 0.0 + 0.5 * 0.25 * 1.0 + 0.5 * 0.75 * 1.0 + 0.5 * 0.25 * std::sqrt(2.0);
  CHECK(cert.ghat(q).value == doctest::Approx(expected).epsilon(1e-12));
  CHECK_FALSE(cert.ghat(q).extrapolated);
  q << 0.3, 1.7;
  CHECK(cert.ghat(q).extrapolated);
}

TEST_CASE("certify_point") {
  const Certifier& cert = kappa06();
  CHECK(cert.threshold(0.5) == 0.0);
  CHECK_FALSE(certify_point(cert, 0.5, scalar(0.0)).certified);
  CHECK(certify_point(cert, 0.5, scalar(0.3)).margin <= 0.0);
  for (double h : {0.51, 0.7, 0.99}) CHECK(certify_point(cert, h, scalar(0.0)).certified);

  const double analytic = 0.6 * numerics::std_normal_inv_cdf(0.9);
  const double radius = certified_radius(cert, 0.9);
  CHECK(std::abs(radius - analytic) <= 0.05);
  CHECK(certify_point(cert, 0.9, scalar(-0.7)).certified);
  CHECK_FALSE(certify_point(cert, 0.9, scalar(0.85)).certified);
  CHECK(certify_point(cert, 0.9, scalar(0.3)).certified == (certify_point(cert, 0.9, scalar(0.3)).margin > 0));
}

TEST_CASE("certify_region") {
  const Certifier& cert = kappa06();
  const std::size_t res[] = {17};
  const RegionResult point = certify_region(cert, 0.7, scalar(0.0), scalar(0.0), res);
  CHECK(point.certified);
  CHECK(point.evaluated == 1);

  const RegionResult wide = certify_region(cert, 0.9, scalar(-0.4), scalar(0.4), res);
  CHECK(wide.certified);
  CHECK(wide.fraction == 1.0);
  CHECK(wide.evaluated == 17);

  const RegionResult weak = certify_region(cert, 0.55, scalar(-0.4), scalar(0.4), res);
  CHECK_FALSE(weak.certified);
  REQUIRE_FALSE(weak.witnesses.empty());
  double far = 0.0;
  for (const auto& w : weak.witnesses) far = std::max(far, std::abs(w.beta(0)));
  CHECK(far == doctest::Approx(0.4));
  const double radius = 0.6 * numerics::std_normal_inv_cdf(0.55);
  for (const auto& w : weak.witnesses) CHECK(std::abs(w.beta(0)) >= radius - 0.05);
}

TEST_CASE("monotone in confidence and sound against the closed form") {
  const Certifier& cert = kappa06();
  double prev_threshold = -1.0;
  std::vector<bool> prev(41, false);
  for (int i = 50; i <= 99; ++i) {
    const double h = i / 100.0;
    const double th = cert.threshold(h);
    CHECK(th >= prev_threshold);
    prev_threshold = th;
    for (int k = 0; k <= 40; ++k) {
      const bool c = certify_point(cert, h, scalar(-1.0 + k / 20.0)).certified;
      if (prev[static_cast<std::size_t>(k)]) CHECK(c);
      prev[static_cast<std::size_t>(k)] = c;
    }
    if (i >= 55 && i <= 95 && i % 5 == 0) {
      CHECK(certified_radius(cert, h) <= 0.6 * numerics::std_normal_inv_cdf(h) + 0.05);
    }
  }
  for (double b : {0.1, 0.3, 0.5}) {
    for (double lambda : {0.0, 0.5, 1.0}) {
      CHECK(cert.ghat(scalar((1 + lambda) * b)).value >= cert.ghat(scalar(b)).value);
    }
  }
}
