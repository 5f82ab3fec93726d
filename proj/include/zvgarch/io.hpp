#pragma once

// CSV ingestion of price or return series, atomic file output and data hashing.

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "zvgarch/errors.hpp"

namespace zvgarch {

inline constexpr std::size_t kMinObservations = 50;

enum class InputMode { prices, returns };

inline InputMode parse_input_mode(const std::string& s) {
  if (s == "prices") return InputMode::prices;
  if (s == "returns") return InputMode::returns;
  throw ConfigError("unknown input mode '" + s + "' (expected prices or returns)");
}

struct Series {
  std::vector<std::string> dates;  // one per value
  std::vector<double> values;
  std::size_t dropped_rows = 0;    // rows skipped for missing values
};

namespace detail {

/// Splits one CSV line; double quotes may enclose fields containing commas.
inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "null" || s == ".";
}

}  // namespace detail

/// Reads the date and value columns of a headed CSV. In prices mode the
/// result is 100 times the log-price differences, dated by the later row.
inline Series ingest_csv(std::istream& in, InputMode mode, const std::string& date_col = "date",
                         const std::string& value_col = "close") {
  std::string line;
  if (!std::getline(in, line)) throw DataError("input is empty");
  const auto header = detail::split_csv_line(line);
  std::ptrdiff_t di = -1, vi = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    const auto h = detail::trim(header[j]);
    if (h == date_col) di = static_cast<std::ptrdiff_t>(j);
    if (h == value_col) vi = static_cast<std::ptrdiff_t>(j);
  }
  if (vi < 0) throw DataError("value column '" + value_col + "' not found in header");
  if (di < 0) throw DataError("date column '" + date_col + "' not found in header");

  Series raw;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split_csv_line(line);
    const std::string v = static_cast<std::size_t>(vi) < f.size() ? detail::trim(f[vi]) : "";
    if (detail::is_missing(v)) {
      ++raw.dropped_rows;
      continue;
    }
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0' || errno == ERANGE || !std::isfinite(x))
      throw DataError("row " + std::to_string(row) + ": non-numeric value '" + v + "'");
    raw.values.push_back(x);
    raw.dates.push_back(static_cast<std::size_t>(di) < f.size() ? detail::trim(f[di]) : "");
  }

  Series out;
  out.dropped_rows = raw.dropped_rows;
  if (mode == InputMode::returns) {
    out.values = std::move(raw.values);
    out.dates = std::move(raw.dates);
  } else {
    for (std::size_t t = 0; t < raw.values.size(); ++t)
      if (!(raw.values[t] > 0.0)) throw DataError("price " + std::to_string(raw.values[t]) + " is not positive");
    for (std::size_t t = 1; t < raw.values.size(); ++t) {
      out.values.push_back(100.0 * (std::log(raw.values[t]) - std::log(raw.values[t - 1])));
      out.dates.push_back(raw.dates[t]);
    }
  }
  if (out.values.size() < kMinObservations)
    throw DataError("need at least " + std::to_string(kMinObservations) + " observations, got " +
                    std::to_string(out.values.size()));
  return out;
}

inline Series ingest_file(const std::filesystem::path& path, InputMode mode,
                          const std::string& date_col = "date", const std::string& value_col = "close") {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open data file " + path.string());
  return ingest_csv(in, mode, date_col, value_col);
}

/// 64-bit FNV-1a over the bit patterns of the values.
inline std::uint64_t series_hash(const std::vector<double>& x) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : x) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

/// Writes through a temporary file in the same directory and renames it
/// into place, so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw ConfigError("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace zvgarch
