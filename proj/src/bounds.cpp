#include "semcert/bounds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "semcert/errors.hpp"
#include "semcert/numerics/sequence.hpp"
#include "semcert/rng.hpp"

namespace semcert {
namespace {

constexpr double kDirectionTol = 1e-9;

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct EvalPoint {
  std::size_t ray;
  std::size_t sample;
};

}  // namespace

ParameterGrid ParameterGrid::tensor(const Params& beta0, const Params& lower, const Params& upper,
                                    std::span<const std::size_t> shape) {
  const auto d = static_cast<std::size_t>(beta0.size());
  if (static_cast<std::size_t>(lower.size()) != d || static_cast<std::size_t>(upper.size()) != d ||
      shape.size() != d) {
    throw DomainError("parameter grid: dimension mismatch");
  }
  ParameterGrid grid;
  grid.beta0 = beta0;
  grid.lower = lower;
  grid.upper = upper;
  grid.shape.assign(shape.begin(), shape.end());
  std::size_t total = 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (shape[k] == 0) throw DomainError("parameter grid: zero points along a dimension");
    if (!(lower(k) <= upper(k))) throw DomainError("parameter grid: lower bound exceeds upper bound");
    if (shape[k] == 1 && lower(k) != upper(k)) {
      throw DomainError("parameter grid: a single point needs lower == upper");
    }
    total *= shape[k];
  }
  grid.points.reserve(total);
  std::vector<std::size_t> multi(d, 0);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Params point(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      point(kk) = shape[k] == 1 ? lower(kk)
                                : lower(kk) + (upper(kk) - lower(kk)) * static_cast<double>(multi[k]) /
                                                  static_cast<double>(shape[k] - 1);
    }
    grid.points.push_back(std::move(point));
    for (std::size_t k = d; k-- > 0;) {
      if (++multi[k] < shape[k]) break;
      multi[k] = 0;
    }
  }
  return grid;
}

ParameterGrid ParameterGrid::tensor(const Params& beta0, const Params& lower, const Params& upper,
                                    std::size_t per_dim) {
  std::vector<std::size_t> shape(static_cast<std::size_t>(beta0.size()), per_dim);
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (lower(static_cast<Eigen::Index>(k)) == upper(static_cast<Eigen::Index>(k))) shape[k] = 1;
  }
  return tensor(beta0, lower, upper, shape);
}

std::size_t ParameterGrid::flat_index(std::span<const std::size_t> multi) const {
  if (multi.size() != shape.size()) throw ContractError("flat_index: dimension mismatch");
  std::size_t flat = 0;
  for (std::size_t k = 0; k < shape.size(); ++k) {
    if (multi[k] >= shape[k]) throw ContractError("flat_index: index out of range");
    flat = flat * shape[k] + multi[k];
  }
  return flat;
}

double worst_classifier_bound(std::span<const double> etas, double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw DomainError("worst_classifier_bound: h must lie in [0, 1]");
  if (etas.empty()) return 0.0;
  const auto n = etas.size();
  const auto take = std::min(n, static_cast<std::size_t>(std::floor(h * static_cast<double>(n))));
  std::vector<double> sorted = numerics::sort_descending(etas);
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += sorted[i];
  return sum / static_cast<double>(n);
}

std::vector<double> bound_profile(std::span<const double> etas) {
  const double centre = numerics::mean(etas);
  std::vector<double> centered(etas.begin(), etas.end());
  for (double& v : centered) v -= centre;
  std::vector<double> sorted = numerics::sort_descending(centered);
  std::vector<double> profile(sorted.size() + 1, 0.0);
  const double inv_n = 1.0 / static_cast<double>(sorted.size());
  double run = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    run += sorted[i];
    profile[i + 1] = run * inv_n;
  }
  return profile;
}

std::vector<double> projected_scores(const ImageTensor& x, const SmoothingSpec& spec, const Params& beta0,
                                     const Params& direction, double radius, std::uint64_t seed) {
  spec.validate();
  const Params beta = beta0 + radius * direction;
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const bool noisy = spec.sigma > 0.0;
  const ImageTensor x_hat = noisy ? spec.transform.apply(x, beta) : x;
  std::vector<double> noise(noisy ? x.size() : 0);
  std::vector<double> out(spec.n_samples);
  Params alpha(d);
  for (std::size_t k = 0; k < spec.n_samples; ++k) {
    Rng rng(derive_seed(seed, k));
    for (Eigen::Index i = 0; i < d; ++i) alpha(i) = rng.normal();
    if (noisy) {
      rng.fill_normal(noise);
      const ImageTensor y = sample_y(spec, x_hat, alpha, noise);
      out[k] = direction.dot(grad_log_rho_beta(spec, y, x, alpha, beta));
    } else {
      out[k] = direction.dot(grad_log_rho_beta(spec, x, x, alpha, beta));
    }
  }
  return out;
}

std::vector<double> clip_profile(std::span<const double> p, double floor) {
  std::vector<double> out(p.begin(), p.end());
  for (double& v : out) v = std::max(v, floor);
  return out;
}

BoundTable compute_normed_bounds(const ImageTensor& x, const SmoothingSpec& spec, const ParameterGrid& grid,
                                 const BoundsOptions& options, bool allow_small) {
  spec.validate();
  if (grid.points.empty()) throw ContractError("compute_normed_bounds: empty grid");
  if (grid.dim() != spec.dim()) throw ContractError("compute_normed_bounds: grid dimension does not match the transform");
  if (spec.n_samples < 1000 && !allow_small) throw ContractError("compute_normed_bounds: n_samples must be at least 1000");

  BoundTable table;
  table.n_samples = spec.n_samples;
  table.seed = options.seed;
  table.grid = grid;
  table.point_ray.assign(grid.size(), -1);

  std::vector<double> point_radius(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const Params offset = grid.points[j] - grid.beta0;
    const double radius = offset.norm();
    if (radius == 0.0) {
      table.warnings.push_back("grid point " + std::to_string(j) + " equals beta0; skipped");
      continue;
    }
    const Params u = offset / radius;
    long found = -1;
    for (std::size_t r = 0; r < table.rays.size(); ++r) {
      if ((table.rays[r].direction - u).lpNorm<Eigen::Infinity>() < kDirectionTol) {
        found = static_cast<long>(r);
        break;
      }
    }
    if (found < 0) {
      table.rays.push_back(Ray{u, {0.0}, {}});
      found = static_cast<long>(table.rays.size() - 1);
    }
    table.point_ray[j] = found;
    table.rays[static_cast<std::size_t>(found)].radii.push_back(radius);
    point_radius[j] = radius;
  }
  if (table.rays.empty()) throw ContractError("compute_normed_bounds: grid contains only beta0");

  std::vector<EvalPoint> evals;
  for (std::size_t r = 0; r < table.rays.size(); ++r) {
    auto& radii = table.rays[r].radii;
    const double reach = *std::max_element(radii.begin(), radii.end());
    for (std::size_t s = 1; s <= options.ray_samples; ++s) {
      radii.push_back(reach * static_cast<double>(s) / static_cast<double>(options.ray_samples + 1));
    }
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end(),
                            [reach](double a, double b) { return std::abs(a - b) <= 1e-12 * reach; }),
                radii.end());
    table.rays[r].magnitude.assign(radii.size(), 0.0);
    for (std::size_t s = 0; s < radii.size(); ++s) evals.push_back({r, s});
  }

  const std::size_t levels = spec.n_samples + 1;
  std::vector<std::vector<double>> normalized(evals.size());
  parallel_for(evals.size(), options.threads, [&](std::size_t e) {
    Ray& ray = table.rays[evals[e].ray];
    const double radius = ray.radii[evals[e].sample];
    std::vector<double> profile =
        bound_profile(projected_scores(x, spec, grid.beta0, ray.direction, radius, options.seed));
    const double m = *std::max_element(profile.begin(), profile.end());
    if (!(m > 0.0) || !std::isfinite(m)) {
      throw NumericError("degenerate transform: bound profile is identically zero at radius " +
                         std::to_string(radius));
    }
    ray.magnitude[evals[e].sample] = m;
    for (double& v : profile) v /= m;
    normalized[e] = std::move(profile);
  });

  table.p.assign(levels, 0.0);
  for (const auto& profile : normalized) {
    for (std::size_t i = 0; i < levels; ++i) table.p[i] = std::max(table.p[i], profile[i]);
  }
  for (const auto& ray : table.rays) {
    table.scale = std::max(table.scale, *std::max_element(ray.magnitude.begin(), ray.magnitude.end()));
  }
  table.g.assign(grid.size(), 0.0);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (table.point_ray[j] < 0) continue;
    const Ray& ray = table.rays[static_cast<std::size_t>(table.point_ray[j])];
    const auto it = std::lower_bound(ray.radii.begin(), ray.radii.end(), point_radius[j] * (1 - 1e-12));
    table.g[j] = ray.magnitude[static_cast<std::size_t>(it - ray.radii.begin())] * point_radius[j];
  }
  return table;
}

}  // namespace semcert
