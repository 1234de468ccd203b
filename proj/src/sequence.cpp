#include "semcert/numerics/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "semcert/errors.hpp"

namespace semcert::numerics {
namespace {

void reject_nan(std::span<const double> v, const char* what) {
  if (std::any_of(v.begin(), v.end(), [](double x) { return std::isnan(x); })) {
    throw DomainError(std::string(what) + ": NaN input");
  }
}

}  // namespace

std::vector<double> cumsum(std::span<const double> v) {
  reject_nan(v, "cumsum");
  std::vector<double> out(v.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = (acc += v[i]);
  return out;
}

std::vector<double> sort_descending(std::span<const double> v) {
  reject_nan(v, "sort_descending");
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

double mean(std::span<const double> v) {
  if (v.empty()) throw DomainError("mean: empty input");
  reject_nan(v, "mean");
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double trapezoid_path_integral(const ScalarField& f, const Vector& start, const Vector& end,
                               std::size_t n_nodes) {
  if (n_nodes < 2) throw DomainError("trapezoid_path_integral: need at least 2 nodes");
  if (start.size() != end.size()) throw ContractError("trapezoid_path_integral: endpoint dimensions differ");
  const double h = 1.0 / static_cast<double>(n_nodes - 1);
  double acc = 0.0;
  for (std::size_t k = 0; k < n_nodes; ++k) {
    const double t = static_cast<double>(k) * h;
    const Vector point = (1.0 - t) * start + t * end;
    const double w = (k == 0 || k + 1 == n_nodes) ? 0.5 : 1.0;
    acc += w * f(point);
  }
  return acc * h;
}

}  // namespace semcert::numerics
