#pragma once

namespace semcert::numerics {

double std_normal_pdf(double x) noexcept;
/// Φ(x), computed through erfc so the lower tail keeps relative precision.
double std_normal_cdf(double x) noexcept;

/// Φ⁻¹(p) for p in (0,1): rational initial guess refined by Halley steps on
/// the erfc-based CDF. Absolute error ≤ 1e-9 across the whole domain.
/// Throws DomainError outside (0,1).
double std_normal_inv_cdf(double p);

/// Regularized incomplete beta I_x(a, b), a, b > 0, x in [0,1].
double incomplete_beta(double x, double a, double b);

/// Quantile of Beta(a, b): the x with I_x(a, b) = p, found by Newton steps
/// safeguarded inside a shrinking bisection bracket.
double beta_inv_cdf(double p, double a, double b);

}  // namespace semcert::numerics
