#include "semcert/model.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <ostream>

#include "semcert/errors.hpp"
#include "semcert/rng.hpp"

namespace semcert {
namespace {

using numerics::DenseMatrix;
using numerics::Vector;

constexpr std::array<char, 8> kMagic = {'S', 'C', 'M', 'L', 'P', '\0', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

DenseMatrix softmax_columns(DenseMatrix logits) {
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    auto col = logits.col(c);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
  return logits;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

void put_f64(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((bits >> (8 * i)) & 0xFFU));
}

std::uint64_t get_bytes(const std::vector<unsigned char>& buf, std::size_t& pos, int count) {
  if (pos + static_cast<std::size_t>(count) > buf.size()) throw FormatError("weight file is truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v |= static_cast<std::uint64_t>(buf[pos + static_cast<std::size_t>(i)]) << (8 * i);
  pos += static_cast<std::size_t>(count);
  return v;
}

}  // namespace

std::vector<double> Classifier::forward(const ImageTensor& x) const {
  if (input_size() != 0 && x.size() != input_size()) {
    throw ContractError("classifier input has " + std::to_string(x.size()) + " values, expected " +
                        std::to_string(input_size()));
  }
  auto v = x.values();
  DenseMatrix col = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
  const DenseMatrix out = forward_batch(col);
  return {out.data(), out.data() + out.size()};
}

ConstantClassifier::ConstantClassifier(std::vector<double> probabilities) : probs_(std::move(probabilities)) {
  if (probs_.empty()) throw ContractError("constant classifier needs at least one class");
}

DenseMatrix ConstantClassifier::forward_batch(const DenseMatrix& inputs) const {
  DenseMatrix out(static_cast<Eigen::Index>(probs_.size()), inputs.cols());
  for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
    for (std::size_t k = 0; k < probs_.size(); ++k) out(static_cast<Eigen::Index>(k), c) = probs_[k];
  }
  return out;
}

Mlp::Mlp(const MlpShape& shape) : shape_(shape) {
  if (shape.inputs() == 0 || shape.hidden == 0 || shape.classes == 0) {
    throw ContractError("mlp shape must be positive in every field");
  }
  const auto n = static_cast<Eigen::Index>(shape.inputs());
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  const auto c = static_cast<Eigen::Index>(shape.classes);
  w1_ = DenseMatrix::Zero(h, n);
  b1_ = Vector::Zero(h);
  w2_ = DenseMatrix::Zero(c, h);
  b2_ = Vector::Zero(c);
}

Mlp Mlp::initialized(const MlpShape& shape, std::uint64_t seed) {
  Mlp model(shape);
  Rng rng(derive_seed(seed, 0, 0x6d6c70));
  const double s1 = std::sqrt(2.0 / static_cast<double>(shape.inputs()));
  const double s2 = std::sqrt(2.0 / static_cast<double>(shape.hidden + shape.classes));
  for (Eigen::Index i = 0; i < model.w1_.size(); ++i) model.w1_.data()[i] = s1 * rng.normal();
  for (Eigen::Index i = 0; i < model.w2_.size(); ++i) model.w2_.data()[i] = s2 * rng.normal();
  return model;
}

DenseMatrix Mlp::logits_batch(const DenseMatrix& inputs) const {
  if (inputs.rows() != w1_.cols()) throw ContractError("mlp input size mismatch");
  DenseMatrix hidden = (w1_ * inputs).colwise() + b1_;
  hidden = hidden.cwiseMax(0.0);
  return (w2_ * hidden).colwise() + b2_;
}

DenseMatrix Mlp::forward_batch(const DenseMatrix& inputs) const { return softmax_columns(logits_batch(inputs)); }

Vector Mlp::parameters() const {
  Vector flat(static_cast<Eigen::Index>(shape_.parameter_count()));
  Eigen::Index at = 0;
  flat.segment(at, w1_.size()) = w1_.reshaped();
  at += w1_.size();
  flat.segment(at, b1_.size()) = b1_;
  at += b1_.size();
  flat.segment(at, w2_.size()) = w2_.reshaped();
  at += w2_.size();
  flat.segment(at, b2_.size()) = b2_;
  return flat;
}

void Mlp::set_parameters(const Vector& flat) {
  if (flat.size() != static_cast<Eigen::Index>(shape_.parameter_count())) {
    throw ContractError("mlp parameter vector has the wrong length");
  }
  Eigen::Index at = 0;
  w1_.reshaped() = flat.segment(at, w1_.size());
  at += w1_.size();
  b1_ = flat.segment(at, b1_.size());
  at += b1_.size();
  w2_.reshaped() = flat.segment(at, w2_.size());
  at += w2_.size();
  b2_ = flat.segment(at, b2_.size());
}

double Mlp::loss_and_gradient(const DenseMatrix& inputs, const std::vector<int>& labels, Vector* gradient) const {
  const Eigen::Index batch = inputs.cols();
  if (batch == 0 || static_cast<Eigen::Index>(labels.size()) != batch) {
    throw ContractError("loss_and_gradient: labels do not match the batch");
  }
  const DenseMatrix pre = (w1_ * inputs).colwise() + b1_;
  const DenseMatrix hidden = pre.cwiseMax(0.0);
  DenseMatrix probs = softmax_columns((w2_ * hidden).colwise() + b2_);
  double loss = 0.0;
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= static_cast<int>(shape_.classes)) throw ContractError("label out of range");
    loss -= std::log(std::max(probs(y, b), 1e-300));
    probs(y, b) -= 1.0;
  }
  const double inv = 1.0 / static_cast<double>(batch);
  loss *= inv;
  if (gradient != nullptr) {
    const DenseMatrix d_logits = probs * inv;
    const DenseMatrix d_pre = (w2_.transpose() * d_logits).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    gradient->resize(static_cast<Eigen::Index>(shape_.parameter_count()));
    Eigen::Index at = 0;
    gradient->segment(at, w1_.size()) = (d_pre * inputs.transpose()).reshaped();
    at += w1_.size();
    gradient->segment(at, b1_.size()) = d_pre.rowwise().sum();
    at += b1_.size();
    gradient->segment(at, w2_.size()) = (d_logits * hidden.transpose()).reshaped();
    at += w2_.size();
    gradient->segment(at, b2_.size()) = d_logits.rowwise().sum();
  }
  return loss;
}

bool Mlp::operator==(const Mlp& other) const {
  return shape_ == other.shape_ && w1_ == other.w1_ && b1_ == other.b1_ && w2_ == other.w2_ && b2_ == other.b2_;
}

DenseMatrix stack_images(const std::vector<ImageTensor>& images) {
  if (images.empty()) return {};
  const auto n = static_cast<Eigen::Index>(images.front().size());
  DenseMatrix out(n, static_cast<Eigen::Index>(images.size()));
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (static_cast<Eigen::Index>(images[i].size()) != n) throw ContractError("stack_images: size mismatch");
    auto v = images[i].values();
    out.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Vector>(v.data(), n);
  }
  return out;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
  if (batch_size == 0) throw DomainError("batch size must be positive");
  if (hidden == 0) throw DomainError("hidden width must be positive");
  if (augmentation) augmentation->validate();
}

void train_augmented(Mlp& model, const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() == 0) throw ContractError("training set is empty");
  if (data.images.front().size() != model.input_size()) throw ContractError("training images do not match the model");

  const std::size_t n = data.size();
  Vector velocity = Vector::Zero(static_cast<Eigen::Index>(model.shape().parameter_count()));
  Vector params = model.parameters();
  Vector grad;
  std::vector<std::size_t> order(n);
  std::vector<double> noise;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(config.seed, epoch, 0x73687566));
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<ImageTensor> batch;
      std::vector<int> labels;
      batch.reserve(stop - start);
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t idx = order[b];
        labels.push_back(data.labels[idx]);
        if (!config.augmentation) {
          batch.push_back(data.images[idx]);
          continue;
        }
        const SmoothingSpec& aug = *config.augmentation;
        Rng rng(derive_seed(config.seed, epoch * n + b, 0x61756720));
        Params alpha(static_cast<Eigen::Index>(aug.dim()));
        for (Eigen::Index k = 0; k < alpha.size(); ++k) alpha(k) = rng.normal();
        noise.assign(aug.sigma > 0.0 ? data.images[idx].size() : 0, 0.0);
        rng.fill_normal(noise);
        batch.push_back(sample_y(aug, data.images[idx], alpha, noise).clamped());
      }
      const DenseMatrix inputs = stack_images(batch);
      model.set_parameters(params);
      const DenseMatrix probs = model.forward_batch(inputs);
      for (Eigen::Index b = 0; b < probs.cols(); ++b) {
        Eigen::Index arg = 0;
        probs.col(b).maxCoeff(&arg);
        if (arg == labels[static_cast<std::size_t>(b)]) ++correct;
      }
      const double loss = model.loss_and_gradient(inputs, labels, &grad);
      if (!std::isfinite(loss)) throw NumericError("training diverged (non-finite loss)");
      loss_sum += loss * static_cast<double>(stop - start);
      velocity = config.momentum * velocity - config.learning_rate * grad;
      params += velocity;
    }
    model.set_parameters(params);
    if (config.log != nullptr) {
      *config.log << (epoch + 1) << ',' << loss_sum / static_cast<double>(n) << ','
                  << static_cast<double>(correct) / static_cast<double>(n) << '\n';
    }
  }
}

Mlp train_augmented(const LabeledDataset& data, const TrainConfig& config) {
  config.validate();
  data.validate();
  if (data.size() == 0) throw ContractError("training set is empty");
  const ImageTensor& first = data.images.front();
  MlpShape shape{first.height(), first.width(), first.channels(), config.hidden,
                 static_cast<std::size_t>(data.num_classes)};
  Mlp model = Mlp::initialized(shape, config.seed);
  train_augmented(model, data, config);
  return model;
}

double accuracy(const Classifier& model, const LabeledDataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  constexpr std::size_t chunk = 256;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    const std::size_t stop = std::min(data.size(), start + chunk);
    std::vector<ImageTensor> batch(data.images.begin() + static_cast<long>(start),
                                   data.images.begin() + static_cast<long>(stop));
    const DenseMatrix probs = model.forward_batch(stack_images(batch));
    for (Eigen::Index b = 0; b < probs.cols(); ++b) {
      Eigen::Index arg = 0;
      probs.col(b).maxCoeff(&arg);
      if (arg == data.labels[start + static_cast<std::size_t>(b)]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void save_weights(const Mlp& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kVersion);
  const MlpShape& s = model.shape();
  for (std::size_t v : {s.height, s.width, s.channels, s.hidden, s.classes}) put_u32(out, static_cast<std::uint32_t>(v));
  const Vector flat = model.parameters();
  for (Eigen::Index i = 0; i < flat.size(); ++i) put_f64(out, flat(i));
  if (!out) throw IoError("failed writing " + path);
}

Mlp load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("weight file not found: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < kWeightHeaderBytes || std::memcmp(buf.data(), kMagic.data(), kMagic.size()) != 0) {
    throw FormatError("not a weight file: " + path);
  }
  std::size_t pos = kMagic.size();
  if (get_bytes(buf, pos, 4) != kVersion) throw FormatError("unsupported weight file version");
  MlpShape shape;
  shape.height = get_bytes(buf, pos, 4);
  shape.width = get_bytes(buf, pos, 4);
  shape.channels = get_bytes(buf, pos, 4);
  shape.hidden = get_bytes(buf, pos, 4);
  shape.classes = get_bytes(buf, pos, 4);
  if (shape.inputs() == 0 || shape.hidden == 0 || shape.classes == 0) throw FormatError("weight file has an empty shape");
  if (buf.size() != kWeightHeaderBytes + 8 * shape.parameter_count()) {
    throw FormatError("weight file size does not match its header");
  }
  Vector flat(static_cast<Eigen::Index>(shape.parameter_count()));
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) = std::bit_cast<double>(get_bytes(buf, pos, 8));
  Mlp model(shape);
  model.set_parameters(flat);
  return model;
}

}  // namespace semcert
