#include "semcert/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcert/errors.hpp"

namespace semcert {
namespace {

long wrap_index(long i, long n) noexcept {
  const long m = i % n;
  return m < 0 ? m + n : m;
}

// Whole-sample mirror (d c b | a b c d | c b a), periodic with period 2n-2.
long reflect_index(long i, long n) noexcept {
  if (n == 1) return 0;
  const long period = 2 * n - 2;
  const long m = wrap_index(i, period);
  return m < n ? m : period - m;
}

long boundary_index(long i, long n, Boundary boundary) noexcept {
  return boundary == Boundary::wrap ? wrap_index(i, n) : reflect_index(i, n);
}

void require_dim(const Params& theta, std::size_t d, std::string_view name) {
  if (static_cast<std::size_t>(theta.size()) != d) {
    throw ContractError(std::string(name) + ": expected " + std::to_string(d) + " parameters, got " +
                        std::to_string(theta.size()));
  }
}

}  // namespace

std::string_view to_string(TransformKind kind) noexcept {
  switch (kind) {
    case TransformKind::brightness: return "brightness";
    case TransformKind::contrast: return "contrast";
    case TransformKind::gamma: return "gamma";
    case TransformKind::translate: return "translate";
    case TransformKind::blur: return "blur";
  }
  return "unknown";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (auto kind : {TransformKind::brightness, TransformKind::contrast, TransformKind::gamma,
                    TransformKind::translate, TransformKind::blur}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown transform '" + std::string(name) + "'");
}

ImageTensor brightness(const ImageTensor& x, double b) {
  ImageTensor out = x;
  for (double& v : out.values()) v += b;
  return out;
}

ImageTensor contrast(const ImageTensor& x, double c) {
  if (!(c > 0.0)) throw DomainError("contrast factor must be positive");
  ImageTensor out = x;
  for (double& v : out.values()) v *= c;
  return out;
}

ImageTensor gamma_correct(const ImageTensor& x, double g) {
  if (!(g > 0.0)) throw DomainError("gamma exponent must be positive");
  ImageTensor out = x;
  for (double& v : out.values()) {
    if (v < 0.0) throw DomainError("gamma correction of a negative intensity");
    v = v == 0.0 ? 0.0 : std::pow(v, g);
  }
  return out;
}

ImageTensor translate(const ImageTensor& x, long tx, long ty, Boundary boundary) {
  const long h = static_cast<long>(x.height());
  const long w = static_cast<long>(x.width());
  if (boundary == Boundary::reflect && (std::labs(tx) >= w || std::labs(ty) >= h)) {
    throw DomainError("translation magnitude must be smaller than the image extent");
  }
  if (tx == 0 && ty == 0) return x;
  ImageTensor out(x.height(), x.width(), x.channels());
  const std::size_t c = x.channels();
  for (long r = 0; r < h; ++r) {
    const long sr = boundary_index(r - ty, h, boundary);
    for (long col = 0; col < w; ++col) {
      const long sc = boundary_index(col - tx, w, boundary);
      for (std::size_t ch = 0; ch < c; ++ch) {
        out(static_cast<std::size_t>(r), static_cast<std::size_t>(col), ch) =
            x(static_cast<std::size_t>(sr), static_cast<std::size_t>(sc), ch);
      }
    }
  }
  return out;
}

std::vector<double> blur_kernel(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("blur radius must be non-negative");
  if (r == 0.0) return {1.0};
  const double t = r * r;
  auto weight = [t](long n) {
    if (t <= 600.0) return std::exp(-t) * std::cyl_bessel_i(static_cast<double>(n), t);
    return std::exp(-0.5 * static_cast<double>(n * n) / t);
  };
  // The discrete kernel has Poisson-like tails, heavier than a sampled
  // Gaussian for small r: extend past 6r until the weights are negligible.
  const long min_radius = std::max(1L, static_cast<long>(std::ceil(6.0 * r)));
  std::vector<double> half;
  const double w0 = weight(0);
  for (long n = 0;; ++n) {
    const double w = weight(n);
    half.push_back(w);
    if (n >= min_radius && w < 1e-17 * w0) break;
  }
  const long radius = static_cast<long>(half.size()) - 1;
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  for (long n = 0; n <= radius; ++n) {
    k[static_cast<std::size_t>(radius + n)] = half[static_cast<std::size_t>(n)];
    k[static_cast<std::size_t>(radius - n)] = half[static_cast<std::size_t>(n)];
  }
  double total = 0.0;
  for (double w : k) total += w;
  for (double& w : k) w /= total;
  return k;
}

ImageTensor gaussian_blur(const ImageTensor& x, double r, Boundary boundary) {
  const std::vector<double> kernel = blur_kernel(r);
  if (kernel.size() == 1) return x;
  const long radius = static_cast<long>(kernel.size() / 2);
  const long h = static_cast<long>(x.height());
  const long w = static_cast<long>(x.width());
  const std::size_t c = x.channels();

  ImageTensor rows(x.height(), x.width(), c);
  for (long r0 = 0; r0 < h; ++r0) {
    for (long col = 0; col < w; ++col) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long sc = boundary_index(col - k, w, boundary);
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 x(static_cast<std::size_t>(r0), static_cast<std::size_t>(sc), ch);
        }
        rows(static_cast<std::size_t>(r0), static_cast<std::size_t>(col), ch) = acc;
      }
    }
  }
  ImageTensor out(x.height(), x.width(), c);
  for (long r0 = 0; r0 < h; ++r0) {
    for (long col = 0; col < w; ++col) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          const long sr = boundary_index(r0 - k, h, boundary);
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 rows(static_cast<std::size_t>(sr), static_cast<std::size_t>(col), ch);
        }
        out(static_cast<std::size_t>(r0), static_cast<std::size_t>(col), ch) = acc;
      }
    }
  }
  return out;
}

Params ResolvableTransform::identity() const {
  switch (kind_) {
    case TransformKind::brightness:
    case TransformKind::blur: return Params::Zero(1);
    case TransformKind::contrast:
    case TransformKind::gamma: return Params::Ones(1);
    case TransformKind::translate: return Params::Zero(2);
  }
  return {};
}

ImageTensor ResolvableTransform::apply(const ImageTensor& x, const Params& theta) const {
  require_dim(theta, dim(), name());
  switch (kind_) {
    case TransformKind::brightness: return brightness(x, theta(0));
    case TransformKind::contrast: return contrast(x, theta(0));
    case TransformKind::gamma: return gamma_correct(x, theta(0));
    // Continuous shift parameters are discretized to the nearest pixel.
    case TransformKind::translate: return translate(x, std::lround(theta(0)), std::lround(theta(1)));
    case TransformKind::blur: return gaussian_blur(x, theta(0));
  }
  return x;
}

Params ResolvableTransform::resolve(const Params& alpha, const Params& beta) const {
  require_dim(alpha, dim(), name());
  require_dim(beta, dim(), name());
  switch (kind_) {
    case TransformKind::brightness:
    case TransformKind::translate: return alpha + beta;
    case TransformKind::contrast:
    case TransformKind::gamma: return alpha.cwiseProduct(beta);
    case TransformKind::blur: {
      Params out(1);
      out(0) = std::hypot(alpha(0), beta(0));
      return out;
    }
  }
  return beta;
}

bool has_exchange_rule(TransformKind first, TransformKind second) noexcept {
  using K = TransformKind;
  if (first == second) return true;
  if (first == K::translate || second == K::translate) return true;
  auto pair_is = [&](K a, K b) { return (first == a && second == b) || (first == b && second == a); };
  if (pair_is(K::blur, K::brightness) || pair_is(K::blur, K::contrast)) return true;
  if (pair_is(K::brightness, K::contrast) || pair_is(K::contrast, K::gamma)) return true;
  return false;
}

std::optional<std::pair<TransformStep, TransformStep>> exchange_steps(const TransformStep& first,
                                                                      const TransformStep& second) {
  using K = TransformKind;
  if (!has_exchange_rule(first.kind, second.kind)) return std::nullopt;
  TransformStep new_second = second;
  TransformStep new_first = first;
  if (first.kind == K::brightness && second.kind == K::contrast) {
    // c(x + b) = c·x + c·b
    new_first.theta = first.theta * second.theta(0);
  } else if (first.kind == K::contrast && second.kind == K::brightness) {
    // c·x + b = c(x + b/c)
    new_second.theta = second.theta / first.theta(0);
  } else if (first.kind == K::contrast && second.kind == K::gamma) {
    // (c·x)^g = c^g · x^g
    new_first.theta(0) = std::pow(first.theta(0), second.theta(0));
  } else if (first.kind == K::gamma && second.kind == K::contrast) {
    // c · x^g = (c^{1/g} · x)^g
    new_second.theta(0) = std::pow(second.theta(0), 1.0 / first.theta(0));
  }
  return std::make_pair(std::move(new_second), std::move(new_first));
}

CompositeTransform::CompositeTransform(std::vector<TransformKind> parts) {
  if (parts.empty()) throw UnsupportedError("a transform chain needs at least one part");
  for (std::size_t i = 0; i < parts.size(); ++i) {
    for (std::size_t j = i + 1; j < parts.size(); ++j) {
      if (!has_exchange_rule(parts[j], parts[i])) {
        throw UnsupportedError("unsupported composition: no resolving rule for " +
                               std::string(to_string(parts[i])) + " followed by " +
                               std::string(to_string(parts[j])));
      }
    }
  }
  for (auto kind : parts) {
    parts_.emplace_back(kind);
    offsets_.push_back(dim_);
    dim_ += parts_.back().dim();
  }
}

Params CompositeTransform::identity() const {
  Params out(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(parts_[i].dim())) =
        parts_[i].identity();
  }
  return out;
}

bool CompositeTransform::pointwise() const noexcept {
  return std::all_of(parts_.begin(), parts_.end(), [](const auto& p) { return p.pointwise(); });
}

ImageTensor CompositeTransform::apply(const ImageTensor& x, const Params& theta) const {
  require_dim(theta, dim_, "composite transform");
  ImageTensor out = x;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    const Params part = theta.segment(static_cast<Eigen::Index>(offsets_[i]),
                                      static_cast<Eigen::Index>(parts_[i].dim()));
    out = parts_[i].apply(out, part);
  }
  return out;
}

Params CompositeTransform::resolve(const Params& alpha, const Params& beta) const {
  require_dim(alpha, dim_, "composite resolve");
  require_dim(beta, dim_, "composite resolve");
  auto segment = [&](const Params& v, std::size_t i) -> Params {
    return v.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(parts_[i].dim()));
  };
  std::vector<TransformStep> chain;
  chain.reserve(parts_.size());
  for (std::size_t i = 0; i < parts_.size(); ++i) chain.push_back({parts_[i].kind(), segment(beta, i)});

  // Outer step i moves inward past steps k-1..i+1, then merges with step i.
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    TransformStep outer{parts_[i].kind(), segment(alpha, i)};
    for (std::size_t j = parts_.size() - 1; j > i; --j) {
      auto swapped = exchange_steps(chain[j], outer);
      if (!swapped) throw UnsupportedError("unsupported composition in resolve");
      outer = std::move(swapped->first);
      chain[j] = std::move(swapped->second);
    }
    chain[i].theta = parts_[i].resolve(outer.theta, chain[i].theta);
  }
  Params out(static_cast<Eigen::Index>(dim_));
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    out.segment(static_cast<Eigen::Index>(offsets_[i]), static_cast<Eigen::Index>(parts_[i].dim())) =
        chain[i].theta;
  }
  return out;
}

numerics::DenseMatrix jacobian_fd(const CompositeTransform& transform, const ImageTensor& x,
                                  const Params& theta, double step) {
  if (!(step > 0.0)) throw DomainError("jacobian_fd: step must be positive");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(transform.dim());
  numerics::DenseMatrix jac(n, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    Params plus = theta;
    Params minus = theta;
    plus(k) += step;
    minus(k) -= step;
    const ImageTensor fp = transform.apply(x, plus);
    const ImageTensor fm = transform.apply(x, minus);
    auto vp = fp.values();
    auto vm = fm.values();
    for (Eigen::Index i = 0; i < n; ++i) jac(i, k) = (vp[static_cast<std::size_t>(i)] - vm[static_cast<std::size_t>(i)]) / (2.0 * step);
  }
  return jac;
}

numerics::DenseMatrix CompositeTransform::jacobian(const ImageTensor& x, const Params& theta) const {
  require_dim(theta, dim_, "composite jacobian");
  const auto n = static_cast<Eigen::Index>(x.size());
  const auto d = static_cast<Eigen::Index>(dim_);
  if (!pointwise()) {
    numerics::DenseMatrix jac = jacobian_fd(*this, x, theta, 1e-5);
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i].kind() == TransformKind::translate) {
        jac.middleCols(static_cast<Eigen::Index>(offsets_[i]), 2).setZero();
      }
    }
    return jac;
  }
  numerics::DenseMatrix jac(n, d);
  std::vector<double> grad(dim_);
  auto px = x.values();
  for (Eigen::Index row = 0; row < n; ++row) {
    double v = px[static_cast<std::size_t>(row)];
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const std::size_t col = offsets_[i];
      const double p = theta(static_cast<Eigen::Index>(col));
      switch (parts_[i].kind()) {
        case TransformKind::brightness:
          v += p;
          grad[col] += 1.0;
          break;
        case TransformKind::contrast:
          if (!(p > 0.0)) throw DomainError("contrast factor must be positive");
          for (double& g : grad) g *= p;
          grad[col] += v;
          v *= p;
          break;
        case TransformKind::gamma: {
          if (!(p > 0.0)) throw DomainError("gamma exponent must be positive");
          if (v < 0.0) throw DomainError("gamma correction of a negative intensity");
          const double out = v == 0.0 ? 0.0 : std::pow(v, p);
          const double dv = v == 0.0 ? 0.0 : p * out / v;
          for (double& g : grad) g *= dv;
          grad[col] += v == 0.0 ? 0.0 : out * std::log(v);
          v = out;
          break;
        }
        default: break;
      }
    }
    for (Eigen::Index k = 0; k < d; ++k) jac(row, k) = grad[static_cast<std::size_t>(k)];
  }
  return jac;
}

}  // namespace semcert
