#pragma once

#include <filesystem>
#include <string>

#include "semcert/bounds.hpp"

namespace semcert {

inline constexpr int kBoundTableVersion = 1;

struct StoredTable {
  BoundTable table;
  std::string config_digest;  ///< digest of the settings the table was built from
  std::string description;    ///< human-readable chain summary
};

/// Versioned JSON envelope with the table and the certifier's ĝ endpoint values.
std::string bound_table_to_json(const StoredTable& stored);
StoredTable bound_table_from_json(const std::string& text);

void save_bound_table(const StoredTable& stored, const std::filesystem::path& path);
/// Throws MissingArtifactError when the file is absent, FormatError for a bad envelope.
StoredTable load_bound_table(const std::filesystem::path& path);

}  // namespace semcert
