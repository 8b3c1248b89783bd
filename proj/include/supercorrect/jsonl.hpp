#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace supercorrect {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One JSON object per line, each stamped with {"schema": <schema>}.
// Writes are atomic (temp file + rename).
void write_jsonl(const std::filesystem::path& path, std::string_view schema,
                 const std::vector<nlohmann::json>& rows);

// Rejects any line whose schema stamp differs from `expected_schema`,
// naming both versions. No silent coercion.
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path,
                                       std::string_view expected_schema);

}  // namespace supercorrect
