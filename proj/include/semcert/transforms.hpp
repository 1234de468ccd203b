#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "semcert/image.hpp"
#include "semcert/numerics/linalg.hpp"

namespace semcert {

using Params = numerics::Vector;

enum class TransformKind { brightness, contrast, gamma, translate, blur };

std::string_view to_string(TransformKind kind) noexcept;
/// Accepts brightness, contrast, gamma, translate, blur. Throws ConfigError otherwise.
TransformKind parse_transform_kind(std::string_view name);

/// Boundary handling for the spatial transforms. `wrap` (periodic) is the one
/// used by registered transforms: it is the boundary under which integer
/// translation and Gaussian blur are exactly resolvable and commute.
enum class Boundary { wrap, reflect };

// Pointwise transforms never clamp.
ImageTensor brightness(const ImageTensor& x, double b);
/// Throws DomainError for c <= 0.
ImageTensor contrast(const ImageTensor& x, double c);
/// x^g with 0^g = 0. Throws DomainError for g <= 0 or negative intensities.
ImageTensor gamma_correct(const ImageTensor& x, double g);

/// Integer shift: output(r, c) = x(r - ty, c - tx). With Boundary::reflect the
/// shift must be smaller than the image extent (DomainError otherwise).
ImageTensor translate(const ImageTensor& x, long tx, long ty, Boundary boundary = Boundary::wrap);

/// Separable convolution with the discrete Gaussian kernel e^{-r²} I_n(r²)
/// (variance r² per axis), truncated at 6r and renormalized.
/// Throws DomainError for r < 0.
ImageTensor gaussian_blur(const ImageTensor& x, double r, Boundary boundary = Boundary::wrap);

/// Kernel weights for offsets -R..R used by gaussian_blur.
std::vector<double> blur_kernel(double r);

/// One registered resolvable transform φ(x, θ) with its identity parameter
/// and resolving function γ: φ(φ(x, β), α) = φ(x, γ(α, β)).
class ResolvableTransform {
 public:
  explicit ResolvableTransform(TransformKind kind) noexcept : kind_(kind) {}

  TransformKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }
  std::size_t dim() const noexcept { return kind_ == TransformKind::translate ? 2 : 1; }
  Params identity() const;
  bool pointwise() const noexcept {
    return kind_ == TransformKind::brightness || kind_ == TransformKind::contrast ||
           kind_ == TransformKind::gamma;
  }

  ImageTensor apply(const ImageTensor& x, const Params& theta) const;
  Params resolve(const Params& alpha, const Params& beta) const;

 private:
  TransformKind kind_;
};

/// Ordered chain φ_k ∘ … ∘ φ_1 with joint parameter (θ_1, …, θ_k).
///
/// The joint resolving function is obtained by moving each outer step inward
/// past the inner steps with pairwise exchange rules and merging it with the
/// matching step; construction fails for any ordered pair without a rule.
class CompositeTransform {
 public:
  CompositeTransform() = default;
  /// Throws UnsupportedError for an empty chain or a pair without an exchange rule.
  explicit CompositeTransform(std::vector<TransformKind> parts);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return parts_.size(); }
  const std::vector<ResolvableTransform>& parts() const noexcept { return parts_; }
  std::size_t offset(std::size_t part) const noexcept { return offsets_[part]; }
  Params identity() const;
  bool pointwise() const noexcept;

  ImageTensor apply(const ImageTensor& x, const Params& theta) const;
  /// γ(α, β) for the whole chain: applying β then α equals applying the result.
  Params resolve(const Params& alpha, const Params& beta) const;

  /// ∂φ/∂θ (n×d). Forward-mode analytic for chains of pointwise transforms,
  /// central differences with step 1e-5 otherwise (translation columns are
  /// identically zero: integer shifts are locally constant).
  numerics::DenseMatrix jacobian(const ImageTensor& x, const Params& theta) const;

 private:
  std::vector<ResolvableTransform> parts_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_ = 0;
};

/// Central finite-difference Jacobian of the chain, n×d.
numerics::DenseMatrix jacobian_fd(const CompositeTransform& transform, const ImageTensor& x,
                                  const Params& theta, double step);

/// Rewrites "first(a) then second(b)" as "second(b') then first(a')".
/// Returns nullopt when no exchange rule is registered for the ordered pair.
struct TransformStep {
  TransformKind kind;
  Params theta;
};
std::optional<std::pair<TransformStep, TransformStep>> exchange_steps(const TransformStep& first,
                                                                      const TransformStep& second);
bool has_exchange_rule(TransformKind first, TransformKind second) noexcept;

}  // namespace semcert
