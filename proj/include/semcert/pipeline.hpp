#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "semcert/certify.hpp"
#include "semcert/config.hpp"
#include "semcert/model.hpp"
#include "semcert/smoothing.hpp"

namespace semcert {

/// Smoothed-prediction outcome and region certificate for one image.
struct ImageCertificate {
  SmoothedEstimate estimate;
  bool abstain = true;  ///< h_lower ≤ 1/2
  RegionResult region;
  double min_margin = 0.0;
};

/// Stream seed for image `index` (shared by certify, cra, and heatmap).
std::uint64_t image_seed(std::uint64_t root, std::size_t index);

ImageCertificate certify_image(const Certifier& cert, const Classifier& model, const SmoothingSpec& spec,
                               const ImageTensor& x, int label, std::size_t n_max, double alpha_star,
                               std::uint64_t seed, const Params& lower, const Params& upper,
                               std::size_t resolution);

/// Loads data.images/data.labels, keeping the first data.limit images.
LabeledDataset load_dataset(const RunConfig& cfg, bool apply_limit = true);

/// Loads the configured table and checks it was built for this configuration.
Certifier load_certifier(const RunConfig& cfg);

struct CraSummary {
  std::size_t images = 0;
  std::size_t correct = 0;    ///< smoothed lower bound above 1/2 for the true label
  std::size_t certified = 0;  ///< correct and region certified
  double cra = 0.0;
  double clean_accuracy = 0.0;
};

/// Each command writes into output.dir and returns the main file path (or summary).
std::filesystem::path cmd_bounds(const RunConfig& cfg, std::ostream* log = nullptr);
/// JSON certificate for one image at a single point (beta) or over the attack box.
std::string cmd_certify(const RunConfig& cfg, std::size_t image, const std::optional<Params>& beta);
CraSummary cmd_cra(const RunConfig& cfg, std::ostream* log = nullptr);
std::filesystem::path cmd_heatmap(const RunConfig& cfg);
std::filesystem::path cmd_train(const RunConfig& cfg, std::ostream* log = nullptr);
std::filesystem::path cmd_xi_export(const RunConfig& cfg);
std::filesystem::path cmd_synth_data(const RunConfig& cfg);

}  // namespace semcert
