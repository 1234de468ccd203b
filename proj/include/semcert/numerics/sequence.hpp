#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "semcert/numerics/linalg.hpp"

namespace semcert::numerics {

// All of these reject NaN input with DomainError.
std::vector<double> cumsum(std::span<const double> v);
std::vector<double> sort_descending(std::span<const double> v);
/// Throws DomainError on an empty input.
double mean(std::span<const double> v);

using ScalarField = std::function<double(const Vector&)>;

/// Trapezoid rule for ∫₀¹ f((1-t)·start + t·end) dt on n_nodes uniform nodes
/// (n_nodes - 1 intervals).
double trapezoid_path_integral(const ScalarField& f, const Vector& start, const Vector& end,
                               std::size_t n_nodes = 129);

}  // namespace semcert::numerics
