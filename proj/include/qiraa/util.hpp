#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qiraa::util {

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
std::string read_file(const std::string& path);
/// Writes through a temporary file and renames, so readers never observe a
/// partial file.
void write_file_atomic(const std::string& path, std::string_view content);

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

/// SplitMix64 step; used to derive independent child seeds from a master
/// seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);

}  // namespace qiraa::util
