#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace supercorrect {

// FNV-1a 64-bit. Stable across platforms and runs; used to key scripted mock
// entries and audit-log request hashes. Not cryptographic.
uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames over the target, so readers never
// observe a half-written file.
void atomic_write_file(const std::filesystem::path& path, std::string_view content);

// Applies fn to every index in [0, n) across at most max_workers threads.
// Each worker owns a contiguous slice, so results land in input order and
// runs are reproducible regardless of scheduling.
void parallel_for_ordered(size_t n, int max_workers, const std::function<void(size_t)>& fn);

std::string utc_timestamp();

}  // namespace supercorrect
