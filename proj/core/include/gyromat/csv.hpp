#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "gyromat/linalg.hpp"

namespace gyromat {

// One row per line, ',' separated, '.' decimal, no header.
Matrix read_csv_matrix(std::istream& in);
Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(std::ostream& out, const Matrix& m);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

// Shortest text that parses back to the same double.
std::string format_double(double x);
double parse_double(std::string_view text, std::size_t line);

// key=value lines, '#' starts a comment.
using KeyValues = std::map<std::string, std::string>;
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const std::filesystem::path& path, const KeyValues& kv);

std::string trim(std::string_view s);

}  // namespace gyromat
