#pragma once

#include <span>
#include <vector>

namespace semcert::numerics {

/// Piecewise-linear interpolant with clamp-to-endpoint extrapolation.
/// Linear segments keep monotone data monotone.
class Interpolant1D {
 public:
  Interpolant1D() = default;
  /// Throws DomainError unless knots are strictly increasing and sizes match.
  Interpolant1D(std::vector<double> knots, std::vector<double> values);

  double operator()(double x) const;
  bool contains(double x) const noexcept {
    return !knots_.empty() && x >= knots_.front() && x <= knots_.back();
  }

  std::span<const double> knots() const noexcept { return knots_; }
  std::span<const double> values() const noexcept { return values_; }
  bool empty() const noexcept { return knots_.empty(); }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
};

}  // namespace semcert::numerics
