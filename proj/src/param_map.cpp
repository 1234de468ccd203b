#include "semcert/param_map.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "semcert/errors.hpp"
#include "semcert/numerics/special.hpp"

namespace semcert {
namespace {

// log(1 - Φ(α)) = log Φ(-α) without cancellation on either side.
double log_upper_tail(double alpha) {
  if (alpha < 0.0) return std::log1p(-numerics::std_normal_cdf(alpha));
  if (alpha < 37.0) return std::log(numerics::std_normal_cdf(-alpha));
  // Mills-ratio asymptotics once erfc underflows.
  return -0.5 * alpha * alpha - std::log(alpha) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log1p(-1.0 / (alpha * alpha));
}

}  // namespace

std::string_view to_string(DistributionKind kind) noexcept {
  switch (kind) {
    case DistributionKind::normal: return "normal";
    case DistributionKind::lognormal: return "lognormal";
    case DistributionKind::rayleigh: return "rayleigh";
    case DistributionKind::shifted_rayleigh: return "shifted_rayleigh";
  }
  return "unknown";
}

DistributionKind parse_distribution_kind(std::string_view name) {
  for (auto kind : {DistributionKind::normal, DistributionKind::lognormal, DistributionKind::rayleigh,
                    DistributionKind::shifted_rayleigh}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown distribution '" + std::string(name) + "'");
}

void ParamMap::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(loc)) {
    throw DomainError("distribution " + describe() + " needs a positive finite scale");
  }
}

double ParamMap::forward(double alpha) const {
  switch (kind) {
    case DistributionKind::normal: return loc + scale * alpha;
    case DistributionKind::lognormal: return std::exp(loc + scale * alpha);
    case DistributionKind::rayleigh: return scale * std::sqrt(-2.0 * log_upper_tail(alpha));
    case DistributionKind::shifted_rayleigh: return loc + scale * std::sqrt(-2.0 * log_upper_tail(alpha));
  }
  return alpha;
}

double ParamMap::derivative(double alpha) const {
  switch (kind) {
    case DistributionKind::normal: return scale;
    case DistributionKind::lognormal: return scale * std::exp(loc + scale * alpha);
    case DistributionKind::rayleigh:
    case DistributionKind::shifted_rayleigh: {
      // d/dα √(−2 log Φ(−α)) = φ(α) / (Φ(−α) · √(−2 log Φ(−α)))
      const double lt = log_upper_tail(alpha);
      const double root = std::sqrt(-2.0 * lt);
      if (root == 0.0) return 0.0;
      const double ratio = std::exp(std::log(numerics::std_normal_pdf(alpha)) - lt);
      return scale * ratio / root;
    }
  }
  return 1.0;
}

double ParamMap::cdf(double v) const {
  switch (kind) {
    case DistributionKind::normal: return numerics::std_normal_cdf((v - loc) / scale);
    case DistributionKind::lognormal:
      return v <= 0.0 ? 0.0 : numerics::std_normal_cdf((std::log(v) - loc) / scale);
    case DistributionKind::rayleigh:
      return v <= 0.0 ? 0.0 : -std::expm1(-0.5 * v * v / (scale * scale));
    case DistributionKind::shifted_rayleigh: {
      const double u = v - loc;
      return u <= 0.0 ? 0.0 : -std::expm1(-0.5 * u * u / (scale * scale));
    }
  }
  return 0.0;
}

std::string ParamMap::describe() const {
  std::ostringstream os;
  os << to_string(kind) << '(';
  switch (kind) {
    case DistributionKind::normal: os << loc << ", " << scale; break;
    case DistributionKind::lognormal: os << loc << ", " << scale; break;
    case DistributionKind::rayleigh: os << scale; break;
    case DistributionKind::shifted_rayleigh: os << loc << ", " << scale; break;
  }
  os << ')';
  return os.str();
}

Params psi_forward(std::span<const ParamMap> maps, const Params& alpha) {
  if (maps.size() != static_cast<std::size_t>(alpha.size())) throw ContractError("psi_forward: dimension mismatch");
  Params out(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) out(i) = maps[static_cast<std::size_t>(i)].forward(alpha(i));
  return out;
}

Params psi_jacobian_diag(std::span<const ParamMap> maps, const Params& alpha) {
  if (maps.size() != static_cast<std::size_t>(alpha.size())) throw ContractError("psi_jacobian_diag: dimension mismatch");
  Params out(alpha.size());
  for (Eigen::Index i = 0; i < alpha.size(); ++i) out(i) = maps[static_cast<std::size_t>(i)].derivative(alpha(i));
  return out;
}

}  // namespace semcert
