#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semcert/transforms.hpp"

namespace semcert {

enum class DistributionKind { normal, lognormal, rayleigh, shifted_rayleigh };

std::string_view to_string(DistributionKind kind) noexcept;
DistributionKind parse_distribution_kind(std::string_view name);

/// Coordinatewise map ψ = F⁻¹∘Φ from a standard normal coordinate to the
/// smoothing distribution F. Strictly increasing; ψ(0) is the median of F.
///
///   normal(loc, scale)            loc + scale·α
///   lognormal(mu, s)              exp(mu + s·α)
///   rayleigh(scale)               scale·√(−2 ln(1 − Φ(α)))
///   shifted_rayleigh(loc, scale)  loc + rayleigh(scale)
struct ParamMap {
  DistributionKind kind = DistributionKind::normal;
  double loc = 0.0;
  double scale = 1.0;

  static ParamMap normal(double scale, double loc = 0.0) { return {DistributionKind::normal, loc, scale}; }
  static ParamMap lognormal(double mu, double s) { return {DistributionKind::lognormal, mu, s}; }
  static ParamMap rayleigh(double scale) { return {DistributionKind::rayleigh, 0.0, scale}; }
  static ParamMap shifted_rayleigh(double loc, double scale) {
    return {DistributionKind::shifted_rayleigh, loc, scale};
  }

  /// Throws DomainError for a non-positive scale.
  void validate() const;
  double forward(double alpha) const;
  double derivative(double alpha) const;
  /// Target CDF F(v).
  double cdf(double v) const;
  std::string describe() const;
};

/// Applies maps[i] to alpha[i].
Params psi_forward(std::span<const ParamMap> maps, const Params& alpha);
/// Diagonal of ∂ψ/∂α.
Params psi_jacobian_diag(std::span<const ParamMap> maps, const Params& alpha);

}  // namespace semcert
