#include "semcert/certify.hpp"

#include <algorithm>
#include <cmath>

#include "semcert/errors.hpp"
#include "semcert/numerics/sequence.hpp"
#include "semcert/numerics/special.hpp"

namespace semcert {
namespace {

constexpr double kDirectionTol = 1e-9;

numerics::Interpolant1D magnitude_curve(const Ray& ray) {
  return numerics::Interpolant1D(ray.radii, ray.magnitude);
}

double integrate_along(const numerics::Interpolant1D& m, double radius, std::size_t nodes) {
  if (radius == 0.0) return 0.0;
  numerics::Vector start = numerics::Vector::Zero(1);
  numerics::Vector end = numerics::Vector::Constant(1, radius);
  return radius * numerics::trapezoid_path_integral([&](const numerics::Vector& v) { return m(v(0)); }, start,
                                                     end, nodes);
}

}  // namespace

numerics::Interpolant1D build_xi(const BoundTable& table, double clip_floor) {
  if (table.p.size() < 2) throw ContractError("build_xi: profile needs at least two levels");
  if (!(table.scale > 0.0)) throw ContractError("build_xi: table scale must be positive");
  const std::vector<double> p = clip_profile(table.p, clip_floor);
  const std::size_t intervals = p.size() - 1;
  const double step = 1.0 / static_cast<double>(intervals);
  std::vector<double> knots(p.size());
  std::vector<double> xi(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) knots[i] = static_cast<double>(i) * step;
  knots.back() = 1.0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    xi[i] = xi[i - 1] + 0.5 * step * (1.0 / p[i - 1] + 1.0 / p[i]) / table.scale;
  }
  for (std::size_t i = 1; i < xi.size(); ++i) {
    if (!(xi[i] > xi[i - 1])) throw NumericError("build_xi: xi is not strictly increasing");
  }
  return numerics::Interpolant1D(std::move(knots), std::move(xi));
}

std::vector<double> build_ghat(const BoundTable& table, std::size_t nodes) {
  if (!(table.scale > 0.0)) throw ContractError("build_ghat: table scale must be positive");
  std::vector<numerics::Interpolant1D> curves;
  curves.reserve(table.rays.size());
  for (const auto& ray : table.rays) curves.push_back(magnitude_curve(ray));
  std::vector<double> out(table.grid.size(), 0.0);
  for (std::size_t j = 0; j < out.size(); ++j) {
    if (table.point_ray[j] < 0) continue;
    const double radius = (table.grid.points[j] - table.grid.beta0).norm();
    out[j] = integrate_along(curves[static_cast<std::size_t>(table.point_ray[j])], radius, nodes) / table.scale;
  }
  return out;
}

double analytic_additive_xi(double h, double sigma, double kappa) {
  return std::sqrt(sigma * sigma + kappa * kappa) * numerics::std_normal_inv_cdf(h);
}

Certifier::Certifier(BoundTable table, double clip_floor) : table_(std::move(table)) {
  if (table_.point_ray.size() != table_.grid.size() || table_.g.size() != table_.grid.size()) {
    throw ContractError("certifier: table arrays do not match the grid");
  }
  xi_ = build_xi(table_, clip_floor);
  for (const auto& ray : table_.rays) ray_magnitude_.push_back(magnitude_curve(ray));
  ghat_points_ = build_ghat(table_);
}

double Certifier::threshold(double h_lower) const {
  if (!(h_lower >= 0.0 && h_lower <= 1.0)) throw DomainError("h_lower must lie in [0, 1]");
  return xi_(0.5) - xi_(1.0 - h_lower);
}

double Certifier::ray_integral(std::size_t ray, double radius) const {
  return integrate_along(ray_magnitude_[ray], radius, 129) / table_.scale;
}

GhatValue Certifier::ghat(const Params& beta) const {
  if (static_cast<std::size_t>(beta.size()) != dim()) throw ContractError("ghat: dimension mismatch");
  const Params offset = beta - beta0();
  const double radius = offset.norm();
  if (radius == 0.0) return {};
  const Params u = offset / radius;
  for (std::size_t r = 0; r < table_.rays.size(); ++r) {
    if ((table_.rays[r].direction - u).lpNorm<Eigen::Infinity>() < kDirectionTol) {
      const double reach = table_.rays[r].radii.back();
      return {ray_integral(r, radius), radius > reach * (1.0 + 1e-12)};
    }
  }
  return grid_interpolate(beta);
}

GhatValue Certifier::grid_interpolate(const Params& beta) const {
  const ParameterGrid& grid = table_.grid;
  const std::size_t d = grid.dim();
  GhatValue out;
  std::vector<std::size_t> base(d, 0);
  std::vector<double> frac(d, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    double v = beta(kk);
    if (v < grid.lower(kk) || v > grid.upper(kk)) {
      out.extrapolated = true;
      v = std::clamp(v, grid.lower(kk), grid.upper(kk));
    }
    if (grid.shape[k] == 1) continue;
    const double pos = (v - grid.lower(kk)) / (grid.upper(kk) - grid.lower(kk)) *
                       static_cast<double>(grid.shape[k] - 1);
    const auto cell = std::min(static_cast<std::size_t>(std::floor(pos)), grid.shape[k] - 2);
    base[k] = cell;
    frac[k] = pos - static_cast<double>(cell);
  }
  std::vector<std::size_t> multi(d);
  for (std::size_t corner = 0; corner < (std::size_t{1} << d); ++corner) {
    double weight = 1.0;
    for (std::size_t k = 0; k < d; ++k) {
      const bool up = (corner >> k) & 1U;
      if (grid.shape[k] == 1) {
        if (up) weight = 0.0;
        multi[k] = 0;
        continue;
      }
      multi[k] = base[k] + (up ? 1 : 0);
      weight *= up ? frac[k] : 1.0 - frac[k];
    }
    if (weight == 0.0) continue;
    out.value += weight * ghat_points_[grid.flat_index(multi)];
  }
  return out;
}

CertificationResult certify_point(const Certifier& cert, double h_lower, const Params& beta) {
  CertificationResult result;
  result.h_lower = h_lower;
  result.beta = beta;
  const double threshold = cert.threshold(h_lower);
  const GhatValue g = cert.ghat(beta);
  result.ghat = g.value;
  result.extrapolated = g.extrapolated;
  result.margin = threshold - g.value;
  result.certified = h_lower > 0.5 && result.margin > 0.0;
  return result;
}

RegionResult certify_region(const Certifier& cert, double h_lower, const Params& lower, const Params& upper,
                            std::span<const std::size_t> resolution) {
  std::vector<std::size_t> shape(resolution.begin(), resolution.end());
  for (std::size_t k = 0; k < shape.size() && k < static_cast<std::size_t>(lower.size()); ++k) {
    if (lower(static_cast<Eigen::Index>(k)) == upper(static_cast<Eigen::Index>(k))) shape[k] = 1;
  }
  const ParameterGrid box = ParameterGrid::tensor(cert.beta0(), lower, upper, shape);
  RegionResult out;
  std::size_t passed = 0;
  for (const Params& beta : box.points) {
    CertificationResult r = certify_point(cert, h_lower, beta);
    if (r.certified) {
      ++passed;
    } else {
      out.witnesses.push_back(std::move(r));
    }
  }
  out.evaluated = box.size();
  out.fraction = static_cast<double>(passed) / static_cast<double>(out.evaluated);
  out.certified = out.witnesses.empty();
  return out;
}

}  // namespace semcert
