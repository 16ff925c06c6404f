// Copyright 2026 The saefh Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sae/cli/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sae/error.hpp"

namespace sae::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::string located(std::string_view source, std::size_t row, std::size_t col,
                    std::string_view what) {
  std::string msg(source);
  msg += ": row " + std::to_string(row);
  if (col > 0) msg += ", column " + std::to_string(col);
  msg += ": ";
  msg += what;
  return msg;
}

double parse_number(std::string_view field, std::string_view source, std::size_t row,
                    std::size_t col, std::string_view name) {
  const std::string_view t = trim(field);
  if (t.empty() || t == "NA" || t == "na" || t == "NaN" || t == "nan") {
    throw Error(ErrorCode::kParseError,
                located(source, row, col, "missing value in column '" + std::string(name) + "'"),
                row);
  }
  std::string_view digits = t;
  if (digits.front() == '+') digits.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::kParseError,
                located(source, row, col, "not a number: '" + std::string(t) + "'"), row);
  }
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::kParseError,
                located(source, row, col, "non-finite value '" + std::string(t) + "'"), row);
  }
  return v;
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur += '"';
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? cur : std::string(trim(cur)));
      cur.clear();
      was_quoted = false;
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorCode::kParseError, "unterminated quoted field");
  fields.push_back(was_quoted ? cur : std::string(trim(cur)));
  return fields;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

FhDataset parse_dataset_csv(std::istream& in, const CsvOptions& options, std::string_view source) {
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::kSchemaError, std::string(source) + ": empty file");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  std::vector<std::string> header;
  try {
    header = split_csv_line(line);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchemaError, std::string(source) + ": header: " + e.what());
  }
  if (header.size() < 3 || header[0] != "area_id" || header[1] != "y" || header[2] != "d") {
    throw Error(ErrorCode::kSchemaError,
                std::string(source) + ": header must start with area_id,y,d");
  }
  const std::size_t p_file = header.size() - 3;
  for (std::size_t k = 0; k < p_file; ++k) {
    if (header[k + 3] != "x" + std::to_string(k + 1)) {
      throw Error(ErrorCode::kSchemaError, std::string(source) + ": expected column 'x" +
                                               std::to_string(k + 1) + "', found '" +
                                               header[k + 3] + "'");
    }
  }
  if (p_file == 0 && !options.intercept) {
    throw Error(ErrorCode::kSchemaError,
                std::string(source) + ": no covariate columns (x1, ...) and no intercept");
  }

  std::vector<std::string> ids;
  std::vector<double> ys;
  std::vector<double> ds;
  std::vector<double> xs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    std::vector<std::string> f;
    try {
      f = split_csv_line(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::kParseError, located(source, row, 0, e.what()), row);
    }
    if (f.size() != header.size()) {
      throw Error(ErrorCode::kParseError,
                  located(source, row, 0,
                          "expected " + std::to_string(header.size()) + " columns, found " +
                              std::to_string(f.size())),
                  row);
    }
    if (f[0].empty()) {
      throw Error(ErrorCode::kParseError, located(source, row, 1, "missing area_id"), row);
    }
    ids.push_back(f[0]);
    ys.push_back(parse_number(f[1], source, row, 2, "y"));
    ds.push_back(parse_number(f[2], source, row, 3, "d"));
    for (std::size_t k = 0; k < p_file; ++k) {
      xs.push_back(parse_number(f[k + 3], source, row, k + 4, header[k + 3]));
    }
  }
  if (row == 0) throw Error(ErrorCode::kSchemaError, std::string(source) + ": no data rows");

  const auto m = static_cast<Eigen::Index>(row);
  const auto off = static_cast<Eigen::Index>(options.intercept ? 1 : 0);
  RawDataset raw;
  raw.area_ids = std::move(ids);
  raw.y = Eigen::Map<const Vector>(ys.data(), m);
  raw.D = Eigen::Map<const Vector>(ds.data(), m);
  raw.X.resize(m, off + static_cast<Eigen::Index>(p_file));
  if (off == 1) raw.X.col(0).setOnes();
  for (Eigen::Index i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < p_file; ++k) {
      raw.X(i, off + static_cast<Eigen::Index>(k)) =
          xs[static_cast<std::size_t>(i) * p_file + k];
    }
  }
  try {
    return validate_dataset(std::move(raw));
  } catch (const Error& e) {
    if (!e.index()) throw;
    const std::size_t r = *e.index() + 1;
    throw Error(e.code(), located(source, r, 0, e.what()), r);
  }
}

FhDataset read_dataset_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  return parse_dataset_csv(in, options, path.string());
}

void write_dataset_csv(std::ostream& out, const FhDataset& data) {
  out << "area_id,y,d";
  for (std::size_t k = 0; k < data.p(); ++k) out << ",x" << (k + 1);
  out << '\n';
  for (std::size_t i = 0; i < data.m(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << csv_field(data.area_ids()[i]) << ',' << format_double(data.y()(r)) << ','
        << format_double(data.D()(r));
    for (Eigen::Index k = 0; k < data.X().cols(); ++k) out << ',' << format_double(data.X()(r, k));
    out << '\n';
  }
}

}  // namespace sae::cli
