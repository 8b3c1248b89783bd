#include "supercorrect/jsonl.hpp"

#include <sstream>

#include "supercorrect/util.hpp"

namespace supercorrect {

using nlohmann::json;

void write_jsonl(const std::filesystem::path& path, std::string_view schema,
                 const std::vector<json>& rows) {
  std::string out;
  for (const json& row : rows) {
    json line = row;
    line["schema"] = schema;
    out += line.dump();
    out += '\n';
  }
  atomic_write_file(path, out);
}

std::vector<json> read_jsonl(const std::filesystem::path& path, std::string_view expected_schema) {
  std::istringstream in(read_file(path));
  std::vector<json> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json row = json::parse(line, nullptr, false);
    if (row.is_discarded())
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": invalid JSON line");
    std::string found = row.value("schema", "<none>");
    if (found != expected_schema)
      throw SchemaError(path.string() + ":" + std::to_string(lineno) + ": schema mismatch: reader expects '" +
                        std::string(expected_schema) + "', file line carries '" + found +
                        "'; migrate the file explicitly");
    row.erase("schema");
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace supercorrect
