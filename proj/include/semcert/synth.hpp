#pragma once

#include <cstddef>
#include <cstdint>

#include "semcert/image.hpp"

namespace semcert {

inline constexpr int kDeskClasses = 10;

/// Grayscale side×side images of ten glyph classes (bars, cross, square
/// outline, filled square, ring, disc, both diagonals, X) with random
/// position, size, stroke intensity, and background noise. Labels cycle
/// through the classes so every prefix is nearly balanced.
LabeledDataset make_desk_dataset(std::size_t count, std::uint64_t seed, std::size_t side = 28);

}  // namespace semcert
