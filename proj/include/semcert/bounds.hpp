#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "semcert/density.hpp"
#include "semcert/image.hpp"

namespace semcert {

/// Tensor grid of endpoints over an axis-aligned box, plus the identity β₀.
struct ParameterGrid {
  Params beta0;
  Params lower;
  Params upper;
  std::vector<std::size_t> shape;  ///< points per dimension
  std::vector<Params> points;      ///< row-major over `shape`, last dimension fastest

  std::size_t dim() const noexcept { return static_cast<std::size_t>(beta0.size()); }
  std::size_t size() const noexcept { return points.size(); }

  /// Throws DomainError for lower > upper, a zero count, or a dimension mismatch.
  static ParameterGrid tensor(const Params& beta0, const Params& lower, const Params& upper,
                              std::span<const std::size_t> shape);
  static ParameterGrid tensor(const Params& beta0, const Params& lower, const Params& upper,
                              std::size_t per_dim);
  /// Flat index of a multi-index.
  std::size_t flat_index(std::span<const std::size_t> multi) const;
};

/// Straight ray β₀ + r·u sampled at increasing radii, with the unit-direction
/// bound magnitude m(r) = max of the centered profile at each radius.
struct Ray {
  Params direction;
  std::vector<double> radii;
  std::vector<double> magnitude;
};

struct BoundTable {
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  ParameterGrid grid;
  /// Envelope over all normalized profiles, N_s + 1 entries at h = i/N_s.
  std::vector<double> p;
  /// g_j = m_j·‖β_j − β₀‖ per grid point (0 at β₀).
  std::vector<double> g;
  std::vector<Ray> rays;
  /// Ray index per grid point, −1 for β₀.
  std::vector<long> point_ray;
  /// Largest unit-direction magnitude over every evaluated point.
  double scale = 0.0;
  std::vector<std::string> warnings;
};

struct BoundsOptions {
  std::uint64_t seed = 0;
  std::size_t ray_samples = 8;  ///< extra uniform radii per ray besides the endpoints
  std::size_t threads = 1;
};

/// (1/N_w)·Σ of the ⌊h·N_w⌋ largest etas.
double worst_classifier_bound(std::span<const double> etas, double h);

/// Centered, descending-sorted, cumulative profile of projected scores:
/// entry i is (1/N)·Σ of the i largest centered values; N + 1 entries, both ends 0.
std::vector<double> bound_profile(std::span<const double> etas);

/// Projected scores ⟨∇_β log ρ, u⟩ at β = β₀ + r·u for N_s common draws.
/// Draw k uses the stream derive_seed(seed, k) for both α and pixel noise.
std::vector<double> projected_scores(const ImageTensor& x, const SmoothingSpec& spec, const Params& beta0,
                                     const Params& direction, double radius, std::uint64_t seed);

/// Builds the p envelope and g magnitudes over the grid. Throws NumericError
/// when a profile is identically zero (the transform carries no signal),
/// ContractError for an empty grid or N_s < 1000 (unless allow_small).
BoundTable compute_normed_bounds(const ImageTensor& x, const SmoothingSpec& spec, const ParameterGrid& grid,
                                 const BoundsOptions& options = {}, bool allow_small = false);

/// Replaces entries below `floor` by `floor`.
std::vector<double> clip_profile(std::span<const double> p, double floor = 1e-4);

}  // namespace semcert
