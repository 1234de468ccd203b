#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "semcert/density.hpp"
#include "semcert/model.hpp"

namespace semcert {

/// Lower Clopper-Pearson limit Beta⁻¹(α*/2; n, N − n + 1); 0 when n = 0.
double clopper_pearson_lower(std::size_t n, std::size_t n_max, double alpha_star);

struct SmoothedEstimate {
  std::size_t n = 0;       ///< draws with f_c > 1/2
  std::size_t n_max = 0;
  double alpha_star = 0.0;
  double h_lower = 0.0;
  int class_id = 0;
};

/// Draw j uses the stream derive_seed(seed, j): α first, then pixel noise.
/// The perturbed image is clamped to [0,1] before the forward pass.
ImageTensor smoothing_draw(const ImageTensor& x, const SmoothingSpec& spec, std::uint64_t seed, std::size_t j);

/// Counts f_c > 1/2 over n_max draws and bounds the smoothed confidence.
SmoothedEstimate smoothed_predict(const ImageTensor& x, const Classifier& model, const SmoothingSpec& spec,
                                  int class_id, std::size_t n_max, double alpha_star, std::uint64_t seed);

struct MajorityDecision {
  bool majority = false;   ///< more than n_max/2 draws had f_c > 1/2
  std::size_t n = 0;       ///< successes among the draws actually evaluated
  std::size_t draws = 0;   ///< evaluated draws (≤ n_max; fewer when the outcome was settled early)
};

/// Same draws as smoothed_predict, stopping as soon as the majority outcome is fixed.
MajorityDecision smoothed_majority(const ImageTensor& x, const Classifier& model, const SmoothingSpec& spec,
                                   int class_id, std::size_t n_max, std::uint64_t seed);

}  // namespace semcert
