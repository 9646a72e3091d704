#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fvarseg/error.hpp"
#include "fvarseg/panel.hpp"
#include "fvarseg/simulate.hpp"

namespace fvarseg {

enum class Orientation { time_by_series, series_by_time };

[[nodiscard]] inline Orientation orientation_from_string(const std::string& s) {
  if (s == "rows-are-time" || s == "time") return Orientation::time_by_series;
  if (s == "rows-are-series" || s == "series") return Orientation::series_by_time;
  throw ConfigError("unknown orientation '" + s + "' (valid: rows-are-time, rows-are-series)");
}

/// Shortest decimal that parses back to the same double.
[[nodiscard]] inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses a numeric CSV table. A first line with no numeric cell is treated as
/// a header. Errors carry 1-based line and column coordinates.
[[nodiscard]] inline PanelSeries read_panel_csv(std::istream& in, Orientation orient = Orientation::time_by_series,
                                                const std::string& source = "<input>") {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv(line);
    std::vector<double> row(cells.size());
    if (first) {
      first = false;
      bool any_numeric = false;
      for (std::size_t j = 0; j < cells.size(); ++j) {
        double tmp;
        any_numeric = any_numeric || detail::parse_number(cells[j], tmp);
      }
      if (!any_numeric) continue;
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      const auto where = source + ": line " + std::to_string(lineno) + ", column " + std::to_string(j + 1);
      if (!detail::parse_number(cells[j], row[j])) {
        throw DataError(where + ": non-numeric cell '" + std::string(cells[j]) + "'");
      }
      if (!std::isfinite(row[j])) throw DataError(where + ": non-finite value");
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      throw DataError(source + ": line " + std::to_string(lineno) + " has " + std::to_string(row.size()) +
                      " columns, expected " + std::to_string(width));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(source + ": no data rows");
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(width);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  if (orient == Orientation::time_by_series) m.transposeInPlace();
  return PanelSeries(std::move(m));
}

[[nodiscard]] inline PanelSeries read_panel_csv(const std::string& path,
                                                Orientation orient = Orientation::time_by_series) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  return read_panel_csv(in, orient, path);
}

/// Writes rows = time, columns = series with a header x1..xp.
inline void write_panel_csv(std::ostream& out, const Matrix& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) out << (i ? "," : "") << 'x' << i + 1;
  out << '\n';
  for (Eigen::Index t = 0; t < values.cols(); ++t) {
    for (Eigen::Index i = 0; i < values.rows(); ++i) out << (i ? "," : "") << format_double(values(i, t));
    out << '\n';
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

[[nodiscard]] inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Ground-truth sidecar for a simulated dataset.
[[nodiscard]] inline nlohmann::json truth_json(const GeneratedDataset& data) {
  const auto& s = data.spec;
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = "truth";
  j["scenario"] = s.scenario;
  j["n"] = s.n;
  j["p"] = s.p;
  j["q"] = s.q;
  j["d"] = s.d;
  j["beta"] = s.beta;
  j["chi_model"] = to_string(s.chi);
  j["chi_points"] = s.chi_points;
  j["xi_points"] = s.xi_points;
  j["seed"] = s.seed;
  j["var_regenerations"] = data.var_regenerations;
  return j;
}

/// Serialises JSON with shortest round-trip floats and a trailing newline.
[[nodiscard]] inline std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace fvarseg
