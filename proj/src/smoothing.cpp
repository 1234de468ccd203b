#include "semcert/smoothing.hpp"

#include <algorithm>

#include "semcert/errors.hpp"
#include "semcert/numerics/special.hpp"
#include "semcert/rng.hpp"

namespace semcert {
namespace {

constexpr std::size_t kChunk = 128;

// Evaluates draws [start, stop) and returns how many have f_c > 1/2.
std::size_t count_chunk(const ImageTensor& x, const Classifier& model, const SmoothingSpec& spec, int class_id,
                        std::uint64_t seed, std::size_t start, std::size_t stop) {
  std::vector<ImageTensor> batch;
  batch.reserve(stop - start);
  for (std::size_t j = start; j < stop; ++j) batch.push_back(smoothing_draw(x, spec, seed, j));
  const numerics::DenseMatrix probs = model.forward_batch(stack_images(batch));
  if (probs.rows() != static_cast<Eigen::Index>(model.num_classes())) {
    throw ContractError("classifier returned the wrong number of classes");
  }
  std::size_t hits = 0;
  for (Eigen::Index b = 0; b < probs.cols(); ++b) {
    const double f = probs(class_id, b);
    if (!(f >= 0.0 && f <= 1.0)) throw ContractError("classifier output outside [0, 1]");
    if (f > 0.5) ++hits;
  }
  return hits;
}

void check_args(const Classifier& model, int class_id, std::size_t n_max) {
  if (n_max == 0) throw DomainError("n_max must be positive");
  if (class_id < 0 || static_cast<std::size_t>(class_id) >= model.num_classes()) {
    throw ContractError("class id out of range");
  }
}

}  // namespace

double clopper_pearson_lower(std::size_t n, std::size_t n_max, double alpha_star) {
  if (n > n_max) throw DomainError("clopper_pearson_lower: n exceeds n_max");
  if (!(alpha_star > 0.0 && alpha_star < 1.0)) throw DomainError("alpha_star must lie in (0, 1)");
  if (n == 0) return 0.0;
  return numerics::beta_inv_cdf(alpha_star / 2.0, static_cast<double>(n), static_cast<double>(n_max - n + 1));
}

ImageTensor smoothing_draw(const ImageTensor& x, const SmoothingSpec& spec, std::uint64_t seed, std::size_t j) {
  Rng rng(derive_seed(seed, j));
  Params alpha(static_cast<Eigen::Index>(spec.dim()));
  for (Eigen::Index k = 0; k < alpha.size(); ++k) alpha(k) = rng.normal();
  std::vector<double> noise(spec.sigma > 0.0 ? x.size() : 0);
  rng.fill_normal(noise);
  return sample_y(spec, x, alpha, noise).clamped();
}

SmoothedEstimate smoothed_predict(const ImageTensor& x, const Classifier& model, const SmoothingSpec& spec,
                                  int class_id, std::size_t n_max, double alpha_star, std::uint64_t seed) {
  check_args(model, class_id, n_max);
  if (!(alpha_star > 0.0 && alpha_star < 1.0)) throw DomainError("alpha_star must lie in (0, 1)");
  SmoothedEstimate est;
  est.n_max = n_max;
  est.alpha_star = alpha_star;
  est.class_id = class_id;
  for (std::size_t start = 0; start < n_max; start += kChunk) {
    est.n += count_chunk(x, model, spec, class_id, seed, start, std::min(n_max, start + kChunk));
  }
  est.h_lower = clopper_pearson_lower(est.n, n_max, alpha_star);
  return est;
}

MajorityDecision smoothed_majority(const ImageTensor& x, const Classifier& model, const SmoothingSpec& spec,
                                   int class_id, std::size_t n_max, std::uint64_t seed) {
  check_args(model, class_id, n_max);
  const std::size_t need = n_max / 2 + 1;
  MajorityDecision out;
  for (std::size_t start = 0; start < n_max; start += kChunk) {
    const std::size_t stop = std::min(n_max, start + kChunk);
    out.n += count_chunk(x, model, spec, class_id, seed, start, stop);
    out.draws = stop;
    if (out.n >= need) break;
    if (out.n + (n_max - stop) < need) break;
  }
  out.majority = out.n >= need;
  return out;
}

}  // namespace semcert
