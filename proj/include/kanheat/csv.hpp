#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace kanheat {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index; throws SchemaError naming the column when absent.
  std::size_t column(const std::string& name) const;
};

// Comma-separated text with a header line. Blank lines are skipped; fields
// are trimmed. Quoting is not supported.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text);

// Strict decimal parse; returns false on empty or malformed fields.
bool parse_real(const std::string& field, double& out);

}  // namespace kanheat
