#pragma once

#include <filesystem>
#include <optional>

#include "semcert/image.hpp"

namespace semcert {

/// Reads an IDX image file (magic 0x00000803, or 0x00000804 for N×H×W×C) and
/// its label file (magic 0x00000801). Pixel bytes are scaled by 1/255.
///
/// The class count is max(label)+1 unless given explicitly.
LabeledDataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path,
                        std::optional<int> num_classes = std::nullopt);

/// Writes the dataset back to IDX. Intensities are mapped to bytes by
/// round(v·255) after clamping, so load_idx → save_idx reproduces the input bytes.
void save_idx(const LabeledDataset& dataset, const std::filesystem::path& images_path,
              const std::filesystem::path& labels_path);

}  // namespace semcert
