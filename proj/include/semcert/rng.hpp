#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace semcert {

/// Mixes (root, stream, salt) into an independent 64-bit seed (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t salt = 0) noexcept;

/// Platform-stable random stream. std::normal_distribution is implementation
/// defined, so normals come from Box-Muller on the raw 64-bit engine output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in (0, 1), never exactly 0 or 1.
  double uniform() noexcept {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double normal() noexcept;
  void fill_normal(std::span<double> out) noexcept {
    for (double& v : out) v = normal();
  }
  std::uint64_t next_u64() noexcept { return engine_(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace semcert
