#include "semcert/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "semcert/csv.hpp"
#include "semcert/errors.hpp"

namespace semcert {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + text + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(text);
  while (in >> item) {
    if (!item.empty() && item.back() == ',') item.pop_back();
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

const std::set<std::string> kScalarKeys = {
    "data.images",       "data.labels",       "data.limit",          "model.path",       "model.hidden",
    "smoothing.sigma",   "smoothing.gn_iterations", "bounds.n_samples", "bounds.grid_points",
    "bounds.ray_samples", "bounds.reference_image", "bounds.table",   "certify.n_max",    "certify.alpha_star",
    "certify.resolution", "heatmap.resolution", "train.epochs",       "train.learning_rate", "train.momentum",
    "train.batch_size",  "train.augment",      "synth.count",         "seed",             "threads",
    "output.dir"};

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("config file not found: " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

void KeyValueConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must look like key=value: " + std::string(assignment));
  const std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

ParamMap make_param_map(DistributionKind kind, const std::vector<double>& params) {
  auto need = [&](std::size_t lo, std::size_t hi) {
    if (params.size() < lo || params.size() > hi) {
      throw ConfigError(std::string(to_string(kind)) + " takes " + std::to_string(lo) +
                        (lo == hi ? "" : "-" + std::to_string(hi)) + " parameters");
    }
  };
  ParamMap map;
  switch (kind) {
    case DistributionKind::normal:
      need(1, 2);
      map = ParamMap::normal(params[0], params.size() > 1 ? params[1] : 0.0);
      break;
    case DistributionKind::lognormal:
      need(2, 2);
      map = ParamMap::lognormal(params[0], params[1]);
      break;
    case DistributionKind::rayleigh:
      need(1, 1);
      map = ParamMap::rayleigh(params[0]);
      break;
    case DistributionKind::shifted_rayleigh:
      need(2, 2);
      map = ParamMap::shifted_rayleigh(params[0], params[1]);
      break;
  }
  try {
    map.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return map;
}

RunConfig RunConfig::from(const KeyValueConfig& kv) {
  RunConfig cfg;
  std::map<std::size_t, std::map<std::string, std::string>> chain;
  for (const auto& [key, value] : kv.values()) {
    if (key.rfind("transform.", 0) == 0) {
      const std::string rest = key.substr(10);
      const auto dot = rest.find('.');
      if (dot == std::string::npos) throw ConfigError("unknown key: " + key);
      const std::size_t index = to_u64(key, rest.substr(0, dot));
      const std::string field = rest.substr(dot + 1);
      if (field != "name" && field != "distribution" && field != "params" && field != "range") {
        throw ConfigError("unknown key: " + key);
      }
      chain[index][field] = value;
      continue;
    }
    if (!kScalarKeys.contains(key)) throw ConfigError("unknown key: " + key);
  }
  auto str = [&](const char* key, std::string& out) {
    if (auto it = kv.values().find(key); it != kv.values().end()) out = it->second;
  };
  auto size = [&](const char* key, std::size_t& out) {
    if (auto it = kv.values().find(key); it != kv.values().end()) out = to_u64(key, it->second);
  };
  auto real = [&](const char* key, double& out) {
    if (auto it = kv.values().find(key); it != kv.values().end()) out = to_double(key, it->second);
  };
  str("data.images", cfg.images_path);
  str("data.labels", cfg.labels_path);
  size("data.limit", cfg.limit);
  str("model.path", cfg.model_path);
  size("model.hidden", cfg.hidden);
  real("smoothing.sigma", cfg.sigma);
  size("smoothing.gn_iterations", cfg.gn_iterations);
  size("bounds.n_samples", cfg.n_samples);
  size("bounds.grid_points", cfg.grid_points);
  size("bounds.ray_samples", cfg.ray_samples);
  size("bounds.reference_image", cfg.reference_image);
  str("bounds.table", cfg.table_path);
  size("certify.n_max", cfg.n_max);
  real("certify.alpha_star", cfg.alpha_star);
  size("certify.resolution", cfg.resolution);
  size("heatmap.resolution", cfg.heatmap_resolution);
  size("train.epochs", cfg.epochs);
  real("train.learning_rate", cfg.learning_rate);
  real("train.momentum", cfg.momentum);
  size("train.batch_size", cfg.batch_size);
  if (auto it = kv.values().find("train.augment"); it != kv.values().end()) {
    cfg.augment = to_bool("train.augment", it->second);
  }
  size("synth.count", cfg.synth_count);
  if (auto it = kv.values().find("seed"); it != kv.values().end()) cfg.seed = to_u64("seed", it->second);
  size("threads", cfg.threads);
  str("output.dir", cfg.output_dir);

  std::size_t expected = 0;
  for (const auto& [index, fields] : chain) {
    if (index != expected++) throw ConfigError("transform indices must be consecutive from 0");
    const std::string prefix = "transform." + std::to_string(index) + ".";
    auto field = [&](const char* name) -> const std::string& {
      auto it = fields.find(name);
      if (it == fields.end()) throw ConfigError("missing key: " + prefix + name);
      return it->second;
    };
    TransformEntry entry;
    entry.kind = parse_transform_kind(field("name"));
    try {
      entry.distribution = parse_distribution_kind(field("distribution"));
    } catch (const Error& e) {
      throw ConfigError(prefix + "distribution: " + e.what());
    }
    entry.params = to_list(prefix + "params", field("params"));
    make_param_map(entry.distribution, entry.params);
    entry.range = to_list(prefix + "range", field("range"));
    const std::size_t coords = ResolvableTransform(entry.kind).dim();
    if (entry.range.size() != 2 * coords) {
      throw ConfigError(prefix + "range needs " + std::to_string(2 * coords) + " numbers (lo hi per coordinate)");
    }
    for (std::size_t c = 0; c < coords; ++c) {
      if (!(entry.range[2 * c] <= entry.range[2 * c + 1])) throw ConfigError(prefix + "range has lo > hi");
    }
    cfg.transforms.push_back(std::move(entry));
  }

  if (!(cfg.sigma >= 0.0)) throw ConfigError("smoothing.sigma must be non-negative");
  if (cfg.gn_iterations == 0) throw ConfigError("smoothing.gn_iterations must be positive");
  if (cfg.n_samples < 2) throw ConfigError("bounds.n_samples must be at least 2");
  if (cfg.grid_points < 2) throw ConfigError("bounds.grid_points must be at least 2");
  if (cfg.n_max == 0) throw ConfigError("certify.n_max must be positive");
  if (!(cfg.alpha_star > 0.0 && cfg.alpha_star < 1.0)) throw ConfigError("certify.alpha_star must lie in (0, 1)");
  if (cfg.resolution == 0 || cfg.heatmap_resolution == 0) throw ConfigError("resolutions must be positive");
  if (cfg.hidden == 0 || cfg.batch_size == 0) throw ConfigError("model.hidden and train.batch_size must be positive");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (cfg.threads == 0) cfg.threads = 1;
  if (!cfg.transforms.empty()) {
    try {
      (void)cfg.chain();
      (void)cfg.bounds_grid();
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  }
  return cfg;
}

CompositeTransform RunConfig::chain() const {
  if (transforms.empty()) throw ConfigError("no transform configured (transform.0.name)");
  std::vector<TransformKind> kinds;
  for (const auto& t : transforms) kinds.push_back(t.kind);
  return CompositeTransform(kinds);
}

std::vector<ParamMap> RunConfig::maps() const {
  std::vector<ParamMap> out;
  for (const auto& t : transforms) {
    const ParamMap map = make_param_map(t.distribution, t.params);
    for (std::size_t c = 0; c < ResolvableTransform(t.kind).dim(); ++c) out.push_back(map);
  }
  return out;
}

SmoothingSpec RunConfig::smoothing_spec() const {
  SmoothingSpec spec;
  spec.transform = chain();
  spec.maps = maps();
  spec.sigma = sigma;
  spec.n_samples = n_samples;
  spec.gn_iterations = gn_iterations;
  return spec;
}

Params RunConfig::attack_lower() const {
  std::vector<double> lo;
  for (const auto& t : transforms) {
    for (std::size_t c = 0; c < t.range.size() / 2; ++c) lo.push_back(t.range[2 * c]);
  }
  return Eigen::Map<const Params>(lo.data(), static_cast<Eigen::Index>(lo.size()));
}

Params RunConfig::attack_upper() const {
  std::vector<double> hi;
  for (const auto& t : transforms) {
    for (std::size_t c = 0; c < t.range.size() / 2; ++c) hi.push_back(t.range[2 * c + 1]);
  }
  return Eigen::Map<const Params>(hi.data(), static_cast<Eigen::Index>(hi.size()));
}

ParameterGrid RunConfig::bounds_grid() const {
  return ParameterGrid::tensor(chain().identity(), attack_lower(), attack_upper(), grid_points);
}

std::filesystem::path RunConfig::bound_table_path() const {
  if (!table_path.empty()) return table_path;
  return std::filesystem::path(output_dir) / "bounds.json";
}

std::string RunConfig::canonical(bool table_only) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < transforms.size(); ++i) {
    const auto& t = transforms[i];
    const std::string p = "transform." + std::to_string(i) + ".";
    out << p << "name=" << to_string(t.kind) << '\n'
        << p << "distribution=" << to_string(t.distribution) << '\n'
        << p << "params=" << join(t.params) << '\n'
        << p << "range=" << join(t.range) << '\n';
  }
  out << "smoothing.sigma=" << format_double(sigma) << '\n'
      << "smoothing.gn_iterations=" << gn_iterations << '\n'
      << "bounds.n_samples=" << n_samples << '\n'
      << "bounds.grid_points=" << grid_points << '\n'
      << "bounds.ray_samples=" << ray_samples << '\n'
      << "seed=" << seed << '\n';
  if (sigma > 0.0) {
    out << "data.images=" << images_path << '\n' << "bounds.reference_image=" << reference_image << '\n';
  }
  if (table_only) return out.str();
  if (sigma == 0.0) out << "data.images=" << images_path << '\n';
  out << "data.labels=" << labels_path << '\n'
      << "data.limit=" << limit << '\n'
      << "model.path=" << model_path << '\n'
      << "certify.n_max=" << n_max << '\n'
      << "certify.alpha_star=" << format_double(alpha_star) << '\n'
      << "certify.resolution=" << resolution << '\n'
      << "heatmap.resolution=" << heatmap_resolution << '\n';
  return out.str();
}

std::string RunConfig::digest() const { return fnv1a_hex(canonical(false)); }
std::string RunConfig::table_digest() const { return fnv1a_hex(canonical(true)); }

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace semcert
