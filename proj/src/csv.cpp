#include "semcert/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>

#include "semcert/errors.hpp"

namespace semcert {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw FormatError("cannot format double");
  return {buf.data(), end};
}

void export_grid_csv(std::span<const GridRow> rows, const std::filesystem::path& path,
                     std::string_view comment) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().point.size();
  for (const auto& row : rows) {
    if (row.point.size() != dim) throw ContractError("export_grid_csv: rows differ in parameter dimension");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t k = 0; k < dim; ++k) out << "beta_" << (k + 1) << ',';
  out << "value\n";
  for (const auto& row : rows) {
    for (double b : row.point) out << format_double(b) << ',';
    out << format_double(row.value) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace semcert
