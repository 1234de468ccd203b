#include "semcert/numerics/interpolate.hpp"

#include <algorithm>
#include <cmath>

#include "semcert/errors.hpp"

namespace semcert::numerics {

Interpolant1D::Interpolant1D(std::vector<double> knots, std::vector<double> values)
    : knots_(std::move(knots)), values_(std::move(values)) {
  if (knots_.size() != values_.size()) throw DomainError("interpolant: knots and values differ in length");
  if (knots_.empty()) throw DomainError("interpolant: no knots");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i]) || !std::isfinite(values_[i])) {
      throw DomainError("interpolant: non-finite knot or value");
    }
    if (i > 0 && !(knots_[i] > knots_[i - 1])) throw DomainError("interpolant: knots not strictly increasing");
  }
}

double Interpolant1D::operator()(double x) const {
  if (knots_.empty()) throw DomainError("interpolant: evaluated while empty");
  if (x <= knots_.front()) return values_.front();
  if (x >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), x);
  const std::size_t hi = static_cast<std::size_t>(it - knots_.begin());
  const std::size_t lo = hi - 1;
  if (x == knots_[lo]) return values_[lo];
  const double w = (x - knots_[lo]) / (knots_[hi] - knots_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

}  // namespace semcert::numerics
