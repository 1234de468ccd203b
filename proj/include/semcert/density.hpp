#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semcert/image.hpp"
#include "semcert/numerics/linalg.hpp"
#include "semcert/param_map.hpp"
#include "semcert/transforms.hpp"

namespace semcert {

/// Smoothing model y = φ(x̂, ψ(α)) + σε with α ~ N(0, I_d), ε ~ N(0, I_n).
struct SmoothingSpec {
  CompositeTransform transform;
  std::vector<ParamMap> maps;  ///< one per joint parameter coordinate
  double sigma = 0.0;          ///< pixel-noise scale; 0 selects the closed-form path
  std::size_t n_samples = 10000;
  std::size_t gn_iterations = 1;  ///< Gauss-Newton linearizations in the Laplace estimate

  std::size_t dim() const noexcept { return transform.dim(); }
  /// Throws DomainError / ContractError for inconsistent settings.
  void validate() const;
};

/// φ(x̂, ψ(α)) + σ·noise. `noise` may be empty when σ = 0.
ImageTensor sample_y(const SmoothingSpec& spec, const ImageTensor& x_hat, const Params& alpha,
                     std::span<const double> noise);

struct LogDensityEval {
  double z = 0.0;             ///< log ρ(y|x̂) up to the β-independent constant
  Params alpha0;              ///< Gauss-Newton point M⁻¹Jᵀμ
  numerics::DenseMatrix m;    ///< JᵀJ + σ²I
  numerics::Vector mu;        ///< y − φ(x̂, ψ(α)) + Jα
};

/// Laplace estimate of log ρ(y|x̂) linearized at the latent point alpha (σ > 0):
///   z = −‖μ‖²/(2σ²) + (Mα₀, α₀)/(2σ²) − ½ log det M,   α₀ = M⁻¹Jᵀμ,
/// with J = ∂φ(x̂, ψ(a))/∂a at a = alpha. The dropped constant is
/// laplace_log_constant(n, d, σ).
LogDensityEval laplace_log_rho(const SmoothingSpec& spec, const ImageTensor& y,
                               const ImageTensor& x_hat, const Params& alpha);

/// −(n/2) log(2πσ²) + d log σ: the term laplace_log_rho omits.
double laplace_log_constant(std::size_t n, std::size_t d, double sigma);

/// Γ(α, β) = γ(ψ(α), β): the composite parameter reached by smoothing an image
/// already transformed by β.
Params latent_resolve(const SmoothingSpec& spec, const Params& alpha, const Params& beta);

/// σ → 0 log-density in latent coordinates: log N(α; 0, I) − log|det ∂Γ/∂α|.
double latent_log_density(const SmoothingSpec& spec, const Params& alpha, const Params& beta);

/// ∇_β log ρ(y | φ(x, β)) combined from the partials of z(α, β) through the
/// resolving function:  ∂z/∂β − ∂z/∂α · (∂Γ/∂α)† · ∂Γ/∂β.
/// `alpha` is the latent point that generated y (the Laplace expansion point
/// for σ > 0, the exact preimage for σ = 0).
Params grad_log_rho_beta(const SmoothingSpec& spec, const ImageTensor& y, const ImageTensor& x,
                         const Params& alpha, const Params& beta);

/// ∂Γ/∂α and ∂Γ/∂β by central differences.
struct ResolveJacobians {
  numerics::DenseMatrix d_alpha;
  numerics::DenseMatrix d_beta;
};
ResolveJacobians latent_resolve_jacobians(const SmoothingSpec& spec, const Params& alpha,
                                          const Params& beta);

}  // namespace semcert
