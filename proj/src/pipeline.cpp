#include "semcert/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "semcert/csv.hpp"
#include "semcert/errors.hpp"
#include "semcert/idx.hpp"
#include "semcert/rng.hpp"
#include "semcert/synth.hpp"
#include "semcert/table_io.hpp"

namespace semcert {
namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

Json to_json(const Params& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

std::string describe_chain(const RunConfig& cfg) {
  std::string out;
  for (const auto& t : cfg.transforms) {
    if (!out.empty()) out += " -> ";
    out += std::string(to_string(t.kind)) + "[" + make_param_map(t.distribution, t.params).describe() + "]";
  }
  return out;
}

fs::path output_file(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.output_dir);
  return fs::path(cfg.output_dir) / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

template <class Fn>
void for_each_index(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::string provenance(const RunConfig& cfg) {
  return "config_digest=" + cfg.digest() + " seed=" + std::to_string(cfg.seed);
}

Json witnesses_json(const RegionResult& region, std::size_t limit) {
  Json out = Json::array();
  for (std::size_t i = 0; i < region.witnesses.size() && i < limit; ++i) {
    out.push_back({{"beta", to_json(region.witnesses[i].beta)}, {"margin", region.witnesses[i].margin}});
  }
  return out;
}

}  // namespace

std::uint64_t image_seed(std::uint64_t root, std::size_t index) { return derive_seed(root, index, 0x696d616765); }

ImageCertificate certify_image(const Certifier& cert, const Classifier& model, const SmoothingSpec& spec,
                               const ImageTensor& x, int label, std::size_t n_max, double alpha_star,
                               std::uint64_t seed, const Params& lower, const Params& upper,
                               std::size_t resolution) {
  ImageCertificate out;
  out.estimate = smoothed_predict(x, model, spec, label, n_max, alpha_star, seed);
  out.abstain = !(out.estimate.h_lower > 0.5);
  std::vector<std::size_t> shape(static_cast<std::size_t>(lower.size()), resolution);
  out.region = certify_region(cert, out.estimate.h_lower, lower, upper, shape);
  out.min_margin = std::numeric_limits<double>::infinity();
  for (const auto& w : out.region.witnesses) out.min_margin = std::min(out.min_margin, w.margin);
  if (out.region.witnesses.empty()) {
    // Every point certified: the smallest margin is threshold − max ĝ over the box.
    const ParameterGrid box = ParameterGrid::tensor(cert.beta0(), lower, upper, resolution);
    for (const auto& b : box.points) {
      out.min_margin = std::min(out.min_margin, certify_point(cert, out.estimate.h_lower, b).margin);
    }
  }
  return out;
}

LabeledDataset load_dataset(const RunConfig& cfg, bool apply_limit) {
  if (cfg.images_path.empty() || cfg.labels_path.empty()) throw ConfigError("data.images and data.labels are required");
  for (const auto& p : {cfg.images_path, cfg.labels_path}) {
    if (!fs::exists(p)) throw MissingArtifactError("dataset file not found: " + p + " (see `semcert synth-data`)");
  }
  LabeledDataset data = load_idx(cfg.images_path, cfg.labels_path);
  if (apply_limit && cfg.limit > 0 && data.size() > cfg.limit) {
    data.images.resize(cfg.limit);
    data.labels.resize(cfg.limit);
  }
  return data;
}

Certifier load_certifier(const RunConfig& cfg) {
  StoredTable stored = load_bound_table(cfg.bound_table_path());
  if (stored.config_digest != cfg.table_digest()) {
    throw ConfigError("bound table " + cfg.bound_table_path().string() +
                      " was built for a different transform/bounds configuration; rerun `semcert bounds`");
  }
  return Certifier(std::move(stored.table));
}

fs::path cmd_bounds(const RunConfig& cfg, std::ostream* log) {
  const SmoothingSpec spec = cfg.smoothing_spec();
  ImageTensor reference(1, 1, 1, 0.5);
  if (cfg.sigma > 0.0) {
    const LabeledDataset data = load_dataset(cfg, false);
    if (cfg.reference_image >= data.size()) throw ConfigError("bounds.reference_image is out of range");
    reference = data.images[cfg.reference_image];
  }
  BoundsOptions options;
  options.seed = derive_seed(cfg.seed, 0, 0x626f756e6473);
  options.ray_samples = cfg.ray_samples;
  options.threads = cfg.threads;
  StoredTable stored;
  stored.table = compute_normed_bounds(reference, spec, cfg.bounds_grid(), options, true);
  stored.config_digest = cfg.table_digest();
  stored.description = describe_chain(cfg);
  if (log != nullptr) {
    for (const auto& w : stored.table.warnings) *log << "warning: " << w << '\n';
  }
  const fs::path path = cfg.bound_table_path();
  save_bound_table(stored, path);
  return path;
}

std::string cmd_certify(const RunConfig& cfg, std::size_t image, const std::optional<Params>& beta) {
  const Certifier cert = load_certifier(cfg);
  const LabeledDataset data = load_dataset(cfg, false);
  if (image >= data.size()) throw ConfigError("image index " + std::to_string(image) + " is out of range");
  const Mlp model = load_weights(cfg.model_path);
  const SmoothingSpec spec = cfg.smoothing_spec();
  const int label = data.labels[image];
  const std::uint64_t seed = image_seed(cfg.seed, image);

  Json doc;
  doc["format"] = "semcert.certify";
  doc["version"] = 1;
  doc["config_digest"] = cfg.digest();
  doc["seed"] = cfg.seed;
  doc["image"] = image;
  doc["label"] = label;
  if (beta) {
    if (static_cast<std::size_t>(beta->size()) != spec.dim()) {
      throw ConfigError("--beta needs " + std::to_string(spec.dim()) + " values");
    }
    const SmoothedEstimate est = smoothed_predict(data.images[image], model, spec, label, cfg.n_max,
                                                  cfg.alpha_star, seed);
    const CertificationResult r = certify_point(cert, est.h_lower, *beta);
    doc["certified"] = r.certified;
    doc["margin"] = r.margin;
    doc["h_lower"] = est.h_lower;
    doc["n"] = est.n;
    doc["n_max"] = est.n_max;
    doc["alpha_star"] = est.alpha_star;
    doc["beta"] = to_json(*beta);
    doc["ghat"] = r.ghat;
    doc["extrapolated"] = r.extrapolated;
    doc["reason"] = est.h_lower > 0.5 ? (r.certified ? "certified" : "margin") : "abstain";
  } else {
    const ImageCertificate c = certify_image(cert, model, spec, data.images[image], label, cfg.n_max,
                                             cfg.alpha_star, seed, cfg.attack_lower(), cfg.attack_upper(),
                                             cfg.resolution);
    const bool certified = !c.abstain && c.region.certified;
    doc["certified"] = certified;
    doc["margin"] = c.min_margin;
    doc["h_lower"] = c.estimate.h_lower;
    doc["n"] = c.estimate.n;
    doc["n_max"] = c.estimate.n_max;
    doc["alpha_star"] = c.estimate.alpha_star;
    doc["region"] = {{"lower", to_json(cfg.attack_lower())},
                     {"upper", to_json(cfg.attack_upper())},
                     {"resolution", cfg.resolution},
                     {"evaluated", c.region.evaluated},
                     {"fraction", c.region.fraction},
                     {"witnesses", witnesses_json(c.region, 10)}};
    doc["reason"] = c.abstain ? "abstain" : (certified ? "certified" : "margin");
  }
  const std::string text = doc.dump(2) + "\n";
  write_text(output_file(cfg, "certify_" + std::to_string(image) + ".json"), text);
  return text;
}

CraSummary cmd_cra(const RunConfig& cfg, std::ostream* log) {
  const Certifier cert = load_certifier(cfg);
  const LabeledDataset data = load_dataset(cfg);
  const Mlp model = load_weights(cfg.model_path);
  const SmoothingSpec spec = cfg.smoothing_spec();
  const Params lower = cfg.attack_lower();
  const Params upper = cfg.attack_upper();

  std::vector<ImageCertificate> results(data.size());
  for_each_index(data.size(), cfg.threads, [&](std::size_t i) {
    results[i] = certify_image(cert, model, spec, data.images[i], data.labels[i], cfg.n_max, cfg.alpha_star,
                               image_seed(cfg.seed, i), lower, upper, cfg.resolution);
  });

  CraSummary summary;
  summary.images = data.size();
  std::ostringstream csv;
  csv << "# " << provenance(cfg) << '\n';
  csv << "index,label,n,n_max,h_lower,correct,certified,min_margin,uncertified_points\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const bool correct = !r.abstain;
    const bool certified = correct && r.region.certified;
    summary.correct += correct ? 1 : 0;
    summary.certified += certified ? 1 : 0;
    csv << i << ',' << data.labels[i] << ',' << r.estimate.n << ',' << r.estimate.n_max << ','
        << format_double(r.estimate.h_lower) << ',' << (correct ? 1 : 0) << ',' << (certified ? 1 : 0) << ','
        << format_double(r.min_margin) << ',' << r.region.witnesses.size() << '\n';
  }
  if (summary.images > 0) {
    summary.cra = static_cast<double>(summary.certified) / static_cast<double>(summary.images);
    summary.clean_accuracy = static_cast<double>(summary.correct) / static_cast<double>(summary.images);
  }
  write_text(output_file(cfg, "cra.csv"), csv.str());
  Json doc;
  doc["format"] = "semcert.cra";
  doc["version"] = 1;
  doc["config_digest"] = cfg.digest();
  doc["seed"] = cfg.seed;
  doc["images"] = summary.images;
  doc["correct"] = summary.correct;
  doc["certified"] = summary.certified;
  doc["cra"] = summary.cra;
  doc["clean_accuracy"] = summary.clean_accuracy;
  write_text(output_file(cfg, "cra_summary.json"), doc.dump(2) + "\n");
  if (log != nullptr) {
    *log << "cra=" << format_double(summary.cra) << " clean_accuracy=" << format_double(summary.clean_accuracy)
         << " images=" << summary.images << '\n';
  }
  return summary;
}

fs::path cmd_heatmap(const RunConfig& cfg) {
  const SmoothingSpec spec = cfg.smoothing_spec();
  if (spec.dim() > 2) throw ConfigError("heatmap supports at most two parameter dimensions");
  const Certifier cert = load_certifier(cfg);
  const LabeledDataset data = load_dataset(cfg);
  const Mlp model = load_weights(cfg.model_path);
  std::vector<double> h_lower(data.size());
  for_each_index(data.size(), cfg.threads, [&](std::size_t i) {
    h_lower[i] = smoothed_predict(data.images[i], model, spec, data.labels[i], cfg.n_max, cfg.alpha_star,
                                  image_seed(cfg.seed, i))
                     .h_lower;
  });
  const ParameterGrid grid =
      ParameterGrid::tensor(cert.beta0(), cfg.attack_lower(), cfg.attack_upper(), cfg.heatmap_resolution);
  std::vector<GridRow> rows;
  rows.reserve(grid.size());
  for (const Params& beta : grid.points) {
    std::size_t certified = 0;
    for (double h : h_lower) certified += certify_point(cert, h, beta).certified ? 1 : 0;
    GridRow row;
    row.point.assign(beta.data(), beta.data() + beta.size());
    row.value = data.size() == 0 ? 0.0 : static_cast<double>(certified) / static_cast<double>(data.size());
    rows.push_back(std::move(row));
  }
  const fs::path path = output_file(cfg, "heatmap.csv");
  export_grid_csv(rows, path, provenance(cfg));
  return path;
}

fs::path cmd_train(const RunConfig& cfg, std::ostream* log) {
  const LabeledDataset data = load_dataset(cfg, false);
  TrainConfig train;
  train.epochs = cfg.epochs;
  train.learning_rate = cfg.learning_rate;
  train.momentum = cfg.momentum;
  train.batch_size = cfg.batch_size;
  train.hidden = cfg.hidden;
  train.seed = derive_seed(cfg.seed, 0, 0x747261696e);
  train.log = log;
  if (cfg.augment && !cfg.transforms.empty()) train.augmentation = cfg.smoothing_spec();
  const Mlp model = train_augmented(data, train);
  const fs::path path = cfg.model_path;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_weights(model, path.string());
  return path;
}

fs::path cmd_xi_export(const RunConfig& cfg) {
  const Certifier cert = load_certifier(cfg);
  const BoundTable& t = cert.table();
  std::ostringstream csv;
  csv << "# " << provenance(cfg) << '\n' << "h,p,xi\n";
  const auto knots = cert.xi_curve().knots();
  const auto xi = cert.xi_curve().values();
  for (std::size_t i = 0; i < knots.size(); ++i) {
    csv << format_double(knots[i]) << ',' << format_double(t.p[i]) << ',' << format_double(xi[i]) << '\n';
  }
  const fs::path path = output_file(cfg, "xi.csv");
  write_text(path, csv.str());
  return path;
}

fs::path cmd_synth_data(const RunConfig& cfg) {
  if (cfg.images_path.empty() || cfg.labels_path.empty()) throw ConfigError("data.images and data.labels are required");
  const LabeledDataset data = make_desk_dataset(cfg.synth_count, derive_seed(cfg.seed, 0, 0x73796e7468));
  for (const auto& p : {fs::path(cfg.images_path), fs::path(cfg.labels_path)}) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }
  save_idx(data, cfg.images_path, cfg.labels_path);
  return cfg.images_path;
}

}  // namespace semcert
