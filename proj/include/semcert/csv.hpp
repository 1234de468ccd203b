#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace semcert {

struct GridRow {
  std::vector<double> point;
  double value = 0.0;
};

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);

/// Writes `beta_1,...,beta_d,value` followed by one row per point.
/// An empty row set produces a header-only file (`value` only). A non-empty
/// `comment` is written first as `# comment`.
void export_grid_csv(std::span<const GridRow> rows, const std::filesystem::path& path,
                     std::string_view comment = {});

}  // namespace semcert
