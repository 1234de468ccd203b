#include "semcert/synth.hpp"

#include <algorithm>
#include <cmath>

#include "semcert/errors.hpp"
#include "semcert/rng.hpp"

namespace semcert {
namespace {

bool inside(int label, double u, double v) {
  const double au = std::abs(u);
  const double av = std::abs(v);
  const double box = std::max(au, av);
  const double r = std::hypot(u, v);
  switch (label) {
    case 0: return av < 0.25 && au < 1.0;
    case 1: return au < 0.25 && av < 1.0;
    case 2: return (av < 0.22 || au < 0.22) && box < 1.0;
    case 3: return box >= 0.72 && box < 1.0;
    case 4: return box < 0.8;
    case 5: return r >= 0.68 && r < 1.0;
    case 6: return r < 0.75;
    case 7: return std::abs(u - v) < 0.32 && box < 1.0;
    case 8: return std::abs(u + v) < 0.32 && box < 1.0;
    default: return (std::abs(u - v) < 0.28 || std::abs(u + v) < 0.28) && box < 1.0;
  }
}

}  // namespace

LabeledDataset make_desk_dataset(std::size_t count, std::uint64_t seed, std::size_t side) {
  if (side < 12) throw DomainError("desk images need a side of at least 12 pixels");
  LabeledDataset data;
  data.num_classes = kDeskClasses;
  data.images.reserve(count);
  data.labels.reserve(count);
  const double centre = 0.5 * static_cast<double>(side - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = static_cast<int>(i % kDeskClasses);
    Rng rng(derive_seed(seed, i, 0x64657368));
    const double half = static_cast<double>(side) * (0.22 + 0.08 * rng.uniform());
    const double cx = centre + (rng.uniform() - 0.5) * 0.2 * static_cast<double>(side);
    const double cy = centre + (rng.uniform() - 0.5) * 0.2 * static_cast<double>(side);
    const double ink = 0.6 + 0.4 * rng.uniform();
    const double background = 0.1 * rng.uniform();
    ImageTensor img(side, side, 1);
    for (std::size_t row = 0; row < side; ++row) {
      for (std::size_t col = 0; col < side; ++col) {
        const double u = (static_cast<double>(col) - cx) / half;
        const double v = (static_cast<double>(row) - cy) / half;
        double value = inside(label, u, v) ? ink : background;
        value += 0.03 * rng.normal();
        img(row, col) = std::clamp(value, 0.0, 1.0);
      }
    }
    data.images.push_back(std::move(img));
    data.labels.push_back(label);
  }
  return data;
}

}  // namespace semcert
