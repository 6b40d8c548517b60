#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "osmc/dataset.hpp"

namespace osmc {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(start)));
      break;
    }
    fields.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

inline bool parse_double_field(std::string_view field, double& out) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end && std::isfinite(out);
}

inline bool is_na_field(std::string_view field) {
  return field.empty() || field == "NA" || field == "na" || field == "NaN" || field == "nan";
}

}  // namespace detail

// Loads a numeric CSV with a header row. The response column is selected by
// name (or by 0-based index if the name is an integer that matches no
// header). NA is allowed in the response only and marks an unmeasured row.
// When standardize is set, every feature column is z-scored with the
// population (1/n) standard deviation; the response is left untouched.
inline Dataset load_csv_dataset(const std::string& path, const std::string& response_column,
                                bool standardize = false,
                                Intercept add_intercept = Intercept::Prepend) {
  std::ifstream in(path);
  if (!in) throw MalformedCsv("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw MalformedCsv("'" + path + "' is empty (header expected)");
  std::vector<std::string> header;
  for (const auto f : detail::split_csv_line(line)) header.emplace_back(f);
  const std::size_t n_cols = header.size();
  if (n_cols < 2) throw MalformedCsv("'" + path + "' needs at least two columns");

  std::size_t response_idx = n_cols;
  for (std::size_t j = 0; j < n_cols; ++j) {
    if (header[j] == response_column) {
      response_idx = j;
      break;
    }
  }
  if (response_idx == n_cols) {
    std::size_t as_index = 0;
    const auto res = std::from_chars(response_column.data(),
                                     response_column.data() + response_column.size(), as_index);
    if (res.ec == std::errc{} && res.ptr == response_column.data() + response_column.size() &&
        as_index < n_cols) {
      response_idx = as_index;
    } else {
      std::ostringstream msg;
      msg << "response column '" << response_column << "' not found; available columns:";
      for (const auto& h : header) msg << ' ' << h;
      throw MalformedCsv(msg.str());
    }
  }

  std::vector<double> responses;
  std::vector<double> features;  // row-major, n_cols - 1 per row
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != n_cols) {
      throw MalformedCsv(path + ": row " + std::to_string(row) + " has " +
                         std::to_string(fields.size()) + " fields, expected " +
                         std::to_string(n_cols));
    }
    for (std::size_t j = 0; j < n_cols; ++j) {
      double value = 0.0;
      if (j == response_idx && detail::is_na_field(fields[j])) {
        value = std::numeric_limits<double>::quiet_NaN();
      } else if (!detail::parse_double_field(fields[j], value)) {
        throw NonNumericField(path + ": row " + std::to_string(row) + ", column '" + header[j] +
                              "': cannot parse '" + std::string(fields[j]) + "'");
      }
      if (j == response_idx) {
        responses.push_back(value);
      } else {
        features.push_back(value);
      }
    }
  }
  const Index n = static_cast<Index>(responses.size());
  if (n == 0) throw MalformedCsv("'" + path + "' has no data rows");
  const Index p = static_cast<Index>(n_cols - 1);

  Matrix x(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j)
      x(i, j) = features[static_cast<std::size_t>(i * p + j)];
  Vector y = Eigen::Map<Vector>(responses.data(), n);

  if (standardize) {
    for (Index j = 0; j < p; ++j) {
      const double mean = x.col(j).mean();
      const double sd = std::sqrt((x.col(j).array() - mean).square().mean());
      if (sd == 0.0) {
        std::string name = header[static_cast<std::size_t>(j) +
                                  (static_cast<std::size_t>(j) >= response_idx ? 1 : 0)];
        throw ConstantColumn("cannot standardize zero-variance column '" + name + "'");
      }
      x.col(j) = (x.col(j).array() - mean) / sd;
    }
  }
  return make_dataset(std::move(x), std::move(y), add_intercept);
}

}  // namespace osmc
