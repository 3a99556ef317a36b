#include "hdvb/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

namespace hdvb::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? comma : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

// Plain decimal or exponent notation only; nan/inf spellings are rejected.
std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

[[noreturn]] void fail(const std::string& source, std::size_t row, std::size_t col, const std::string& what) {
  std::ostringstream os;
  os << source << ": row " << row;
  if (col > 0) os << ", column " << col;
  os << ": " << what;
  throw Error(ErrorKind::input, os.str());
}

}  // namespace

TimeSeriesPanel parse_csv(std::istream& in, Index k, const std::string& source) {
  if (k < 0) throw Error(ErrorKind::config, "presample length must be >= 0");
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (first) {
      first = false;
      width = cells.size();
      bool numeric = true;
      for (auto c : cells) numeric = numeric && parse_number(c).has_value();
      if (!numeric) {
        for (auto c : cells) labels.emplace_back(c);
        continue;
      }
    }
    if (cells.size() != width) {
      fail(source, line_no, 0, "expected " + std::to_string(width) + " columns, found " + std::to_string(cells.size()));
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) {
      const auto v = parse_number(cells[j]);
      if (!v) fail(source, line_no, j + 1, "not a finite number: '" + std::string(cells[j]) + "'");
      row[j] = *v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() < static_cast<std::size_t>(k) + 1) {
    std::ostringstream os;
    os << source << ": " << rows.size() << " data rows, need at least K + 1 = " << k + 1;
    throw Error(ErrorKind::input, os.str());
  }
  Matrix data(static_cast<Index>(rows.size()), static_cast<Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < width; ++j) data(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return TimeSeriesPanel(std::move(data), k, std::move(labels));
}

TimeSeriesPanel ingest_csv(const std::string& path, Index k) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::input, "cannot open input file '" + path + "'");
  return parse_csv(in, k, path);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ec == std::errc() ? ptr : buf);
}

void write_csv(std::ostream& out, const Eigen::Ref<const Matrix>& data, const std::vector<std::string>& labels) {
  if (!labels.empty()) {
    for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << labels[j];
    out << '\n';
  }
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data(i, j));
    out << '\n';
  }
}

}  // namespace hdvb::cli
