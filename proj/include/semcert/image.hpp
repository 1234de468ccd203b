#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace semcert {

/// H×W×C intensity grid stored row-major with interleaved channels.
///
/// Intensities are nominally in [0,1]; transforms may leave that range and
/// clamping is explicit (see clamped()).
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0);
  ImageTensor(std::size_t height, std::size_t width, std::size_t channels, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  double& operator()(std::size_t row, std::size_t col, std::size_t ch = 0) noexcept {
    return data_[(row * width_ + col) * channels_ + ch];
  }
  double operator()(std::size_t row, std::size_t col, std::size_t ch = 0) const noexcept {
    return data_[(row * width_ + col) * channels_ + ch];
  }

  bool same_shape(const ImageTensor& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  /// Copy with every intensity clamped to [0,1].
  ImageTensor clamped() const;
  bool all_finite() const noexcept;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> data_;
};

/// Elementwise max |a - b|. Shapes must match.
double max_abs_diff(const ImageTensor& a, const ImageTensor& b);

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t size() const noexcept { return images.size(); }
  /// Throws ConsistencyError when labels, shapes or counts disagree.
  void validate() const;
};

}  // namespace semcert
