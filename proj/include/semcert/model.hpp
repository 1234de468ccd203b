#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semcert/density.hpp"
#include "semcert/image.hpp"
#include "semcert/numerics/linalg.hpp"

namespace semcert {

/// Base classifier f: X → [0,1]^C.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual std::size_t num_classes() const = 0;
  /// Flattened input length expected by forward_batch (0 accepts any).
  virtual std::size_t input_size() const = 0;
  /// Column-wise probabilities (C × B) for flattened images stored as columns (n × B).
  virtual numerics::DenseMatrix forward_batch(const numerics::DenseMatrix& inputs) const = 0;

  std::vector<double> forward(const ImageTensor& x) const;
};

/// Returns the same probability vector for every input.
class ConstantClassifier final : public Classifier {
 public:
  explicit ConstantClassifier(std::vector<double> probabilities);
  std::size_t num_classes() const override { return probs_.size(); }
  std::size_t input_size() const override { return 0; }
  numerics::DenseMatrix forward_batch(const numerics::DenseMatrix& inputs) const override;

 private:
  std::vector<double> probs_;
};

struct MlpShape {
  std::size_t height = 28;
  std::size_t width = 28;
  std::size_t channels = 1;
  std::size_t hidden = 128;
  std::size_t classes = 10;

  std::size_t inputs() const noexcept { return height * width * channels; }
  std::size_t parameter_count() const noexcept { return hidden * inputs() + hidden + classes * hidden + classes; }
  bool operator==(const MlpShape&) const = default;
};

/// flatten → dense(hidden) → ReLU → dense(classes) → softmax, in doubles.
class Mlp final : public Classifier {
 public:
  /// Zero weights.
  explicit Mlp(const MlpShape& shape);
  /// He-normal first layer, Glorot-normal second layer, zero biases.
  static Mlp initialized(const MlpShape& shape, std::uint64_t seed);

  const MlpShape& shape() const noexcept { return shape_; }
  std::size_t num_classes() const override { return shape_.classes; }
  std::size_t input_size() const override { return shape_.inputs(); }
  numerics::DenseMatrix forward_batch(const numerics::DenseMatrix& inputs) const override;
  numerics::DenseMatrix logits_batch(const numerics::DenseMatrix& inputs) const;

  numerics::DenseMatrix& w1() noexcept { return w1_; }
  numerics::Vector& b1() noexcept { return b1_; }
  numerics::DenseMatrix& w2() noexcept { return w2_; }
  numerics::Vector& b2() noexcept { return b2_; }
  const numerics::DenseMatrix& w1() const noexcept { return w1_; }
  const numerics::Vector& b1() const noexcept { return b1_; }
  const numerics::DenseMatrix& w2() const noexcept { return w2_; }
  const numerics::Vector& b2() const noexcept { return b2_; }

  /// Flat parameter vector in the order w1, b1, w2, b2 (column-major matrices).
  numerics::Vector parameters() const;
  void set_parameters(const numerics::Vector& flat);

  /// Mean cross-entropy over the batch and its gradient in parameters() order.
  double loss_and_gradient(const numerics::DenseMatrix& inputs, const std::vector<int>& labels,
                           numerics::Vector* gradient) const;

  bool operator==(const Mlp& other) const;

 private:
  MlpShape shape_;
  numerics::DenseMatrix w1_;
  numerics::Vector b1_;
  numerics::DenseMatrix w2_;
  numerics::Vector b2_;
};

/// Flattens images as columns.
numerics::DenseMatrix stack_images(const std::vector<ImageTensor>& images);

struct TrainConfig {
  std::size_t epochs = 2;
  double learning_rate = 1e-3;
  double momentum = 0.95;
  std::size_t batch_size = 32;
  std::size_t hidden = 128;
  std::optional<SmoothingSpec> augmentation;  ///< each image drawn at ψ(α) plus σ-noise, clamped
  std::uint64_t seed = 0;
  std::ostream* log = nullptr;  ///< receives "epoch,loss,acc" lines

  void validate() const;
};

/// SGD with momentum on augmented cross-entropy. Throws NumericError when the loss diverges.
Mlp train_augmented(const LabeledDataset& data, const TrainConfig& config);
/// Continues training an existing model.
void train_augmented(Mlp& model, const LabeledDataset& data, const TrainConfig& config);

/// Fraction of images whose argmax matches the label.
double accuracy(const Classifier& model, const LabeledDataset& data);

/// Versioned little-endian binary weight file.
void save_weights(const Mlp& model, const std::string& path);
Mlp load_weights(const std::string& path);
/// Header bytes preceding the parameter block.
inline constexpr std::size_t kWeightHeaderBytes = 32;

}  // namespace semcert
