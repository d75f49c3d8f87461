#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qegauge::textio {

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

/// Strict parse of a full token as a finite double; nullopt on trailing junk.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

/// Parses `[v1, v2, ...]`; `[]` yields an empty list.
std::optional<std::vector<double>> parse_list(std::string_view cell);

/// 17 significant digits, as used by the canonical TSV writer.
std::string format_g17(double v);
/// Shortest decimal that round-trips.
std::string format_shortest(double v);
std::string format_list(const std::vector<double>& values);

/// Reads a file into lines, stripping a trailing '\r' and a leading UTF-8 BOM.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace qegauge::textio
