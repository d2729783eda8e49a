#include "gyromat/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace gyromat {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::size_t line) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError("empty numeric field", line);
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size()) {
    throw ParseError("malformed number '" + t + "'", line);
  }
  return v;
}

Matrix read_csv_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      const auto field = std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start);
      row.push_back(parse_double(field, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("ragged row: expected " + std::to_string(rows.front().size()) +
                           " fields, got " + std::to_string(row.size()),
                       lineno);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
  }
  require_finite(m, "read_csv_matrix");
  return m;
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_csv_matrix(in);
}

void write_csv_matrix(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_csv_matrix(out, m);
}

KeyValues read_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", lineno);
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) throw ParseError("empty key", lineno);
    if (kv.count(key)) throw ParseError("duplicate key '" + key + "'", lineno);
    kv[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return kv;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_key_values(in);
}

void write_key_values(const std::filesystem::path& path, const KeyValues& kv) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

}  // namespace gyromat
