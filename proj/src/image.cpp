#include "semcert/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcert/errors.hpp"

namespace semcert {

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill)
    : height_(height), width_(width), channels_(channels), data_(height * width * channels, fill) {}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::size_t channels,
                         std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (data_.size() != height_ * width_ * channels_) {
    throw ConsistencyError("image data length " + std::to_string(data_.size()) +
                           " does not match shape " + std::to_string(height_) + "x" +
                           std::to_string(width_) + "x" + std::to_string(channels_));
  }
}

ImageTensor ImageTensor::clamped() const {
  ImageTensor out = *this;
  for (double& v : out.data_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

bool ImageTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ContractError("max_abs_diff: shape mismatch");
  double worst = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) worst = std::max(worst, std::abs(av[i] - bv[i]));
  return worst;
}

void LabeledDataset::validate() const {
  if (images.empty()) throw ConsistencyError("dataset has no images");
  if (images.size() != labels.size()) {
    throw ConsistencyError("dataset has " + std::to_string(images.size()) + " images but " +
                           std::to_string(labels.size()) + " labels");
  }
  if (num_classes <= 0) throw ConsistencyError("dataset class count must be positive");
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (!images[i].same_shape(images.front())) {
      throw ConsistencyError("image " + std::to_string(i) + " has a different shape");
    }
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw ConsistencyError("label " + std::to_string(labels[i]) + " at index " +
                             std::to_string(i) + " outside [0, " + std::to_string(num_classes) +
                             ")");
    }
  }
}

}  // namespace semcert
