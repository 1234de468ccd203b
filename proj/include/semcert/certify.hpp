#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semcert/bounds.hpp"
#include "semcert/numerics/interpolate.hpp"

namespace semcert {

/// ξ over h ∈ [0,1] from the clipped envelope: cumulative trapezoid of 1/p on
/// the table's uniform h-grid, anchored at ξ(0) = 0, divided by N_s·scale.
numerics::Interpolant1D build_xi(const BoundTable& table, double clip_floor = 1e-4);

/// ĝ at each grid point: ‖β_j − β₀‖·∫₀¹ m(t·‖β_j − β₀‖) dt / scale, with m
/// linearly interpolated along the point's ray. 0 at β₀.
std::vector<double> build_ghat(const BoundTable& table, std::size_t nodes = 129);

/// √(σ² + κ²)·Φ⁻¹(h): ξ(h) − ξ(1/2) for additive brightness with N(0, κ²)
/// parameter noise on a single pixel.
double analytic_additive_xi(double h, double sigma, double kappa);

struct GhatValue {
  double value = 0.0;
  bool extrapolated = false;  ///< query left the sampled ray or the grid box
};

struct CertificationResult {
  bool certified = false;
  double margin = 0.0;  ///< ξ(1/2) − ξ(1 − h_lower) − ĝ(β)
  double h_lower = 0.0;
  Params beta;
  double ghat = 0.0;
  bool extrapolated = false;
};

struct RegionResult {
  bool certified = false;
  double fraction = 0.0;  ///< share of evaluated points that certify
  std::size_t evaluated = 0;
  std::vector<CertificationResult> witnesses;  ///< points that fail
};

/// Immutable certification state built once per bound table.
class Certifier {
 public:
  explicit Certifier(BoundTable table, double clip_floor = 1e-4);

  double xi(double h) const { return xi_(h); }
  const numerics::Interpolant1D& xi_curve() const noexcept { return xi_; }
  /// ξ(1/2) − ξ(1 − h).
  double threshold(double h_lower) const;
  GhatValue ghat(const Params& beta) const;

  const BoundTable& table() const noexcept { return table_; }
  const Params& beta0() const noexcept { return table_.grid.beta0; }
  std::span<const double> ghat_endpoints() const noexcept { return ghat_points_; }
  std::size_t dim() const noexcept { return table_.grid.dim(); }

 private:
  double ray_integral(std::size_t ray, double radius) const;
  GhatValue grid_interpolate(const Params& beta) const;

  BoundTable table_;
  numerics::Interpolant1D xi_;
  std::vector<numerics::Interpolant1D> ray_magnitude_;
  std::vector<double> ghat_points_;
};

/// certified ⇔ h_lower > 1/2 and ĝ(β) < ξ(1/2) − ξ(1 − h_lower).
CertificationResult certify_point(const Certifier& cert, double h_lower, const Params& beta);

/// Checks every point of the tensor grid over [lower, upper] (resolution points
/// per dimension; a dimension with lower == upper uses a single point).
RegionResult certify_region(const Certifier& cert, double h_lower, const Params& lower, const Params& upper,
                            std::span<const std::size_t> resolution);

}  // namespace semcert
