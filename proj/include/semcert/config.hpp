#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semcert/bounds.hpp"
#include "semcert/density.hpp"
#include "semcert/param_map.hpp"
#include "semcert/transforms.hpp"

namespace semcert {

/// Flat `key = value` text with dotted keys. `#` starts a comment; blank
/// lines are ignored; a repeated key keeps the last value.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text);
  /// Throws MissingArtifactError when the file does not exist.
  static KeyValueConfig load(const std::filesystem::path& path);

  /// Applies a `key=value` override. Throws ConfigError without '='.
  void set_assignment(std::string_view assignment);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.contains(key); }
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// One link of the transform chain with its smoothing distribution and attack range.
struct TransformEntry {
  TransformKind kind = TransformKind::brightness;
  DistributionKind distribution = DistributionKind::normal;
  std::vector<double> params;  ///< distribution parameters (see ParamMap)
  std::vector<double> range;   ///< lo, hi for each coordinate of the transform
};

/// Validated run configuration. Every key has a default except the transform chain.
struct RunConfig {
  std::string images_path;
  std::string labels_path;
  std::size_t limit = 100;

  std::string model_path = "model.bin";
  std::size_t hidden = 128;

  std::vector<TransformEntry> transforms;
  double sigma = 0.0;
  std::size_t gn_iterations = 1;

  std::size_t n_samples = 10000;
  std::size_t grid_points = 17;
  std::size_t ray_samples = 8;
  std::size_t reference_image = 0;
  std::string table_path;  ///< defaults to <output>/bounds.json

  std::size_t n_max = 1000;
  double alpha_star = 1e-3;
  std::size_t resolution = 17;
  std::size_t heatmap_resolution = 11;

  std::size_t epochs = 2;
  double learning_rate = 1e-3;
  double momentum = 0.95;
  std::size_t batch_size = 32;
  bool augment = true;

  std::size_t synth_count = 1000;

  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output_dir = "out";

  /// Throws ConfigError for unknown keys, malformed values, or inconsistent settings.
  static RunConfig from(const KeyValueConfig& kv);

  CompositeTransform chain() const;
  SmoothingSpec smoothing_spec() const;
  std::vector<ParamMap> maps() const;
  Params attack_lower() const;
  Params attack_upper() const;
  ParameterGrid bounds_grid() const;
  std::filesystem::path bound_table_path() const;

  /// FNV-1a 64 over the canonical key=value listing of every result-affecting
  /// setting (thread count and output locations excluded).
  std::string digest() const;
  /// Digest restricted to the settings a bound table depends on.
  std::string table_digest() const;
  /// Canonical listing used by digest().
  std::string canonical(bool table_only) const;
};

/// Lower-case hex FNV-1a 64.
std::string fnv1a_hex(std::string_view bytes);

ParamMap make_param_map(DistributionKind kind, const std::vector<double>& params);

}  // namespace semcert
