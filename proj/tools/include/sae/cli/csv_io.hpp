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

// Area-level dataset files.
//
//   area_id,y,d,x1,...,xp
//
// One row per area, UTF-8, '.' as decimal point. Fields may be double-quoted
// ("" escapes a quote). Empty fields, NA and non-finite numbers are rejected.

#ifndef SAE_CLI_CSV_IO_HPP_
#define SAE_CLI_CSV_IO_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sae/dataset.hpp"

namespace sae::cli {

struct CsvOptions {
  // Prepend a column of ones to the covariates read from the file.
  bool intercept = false;
};

// Throws kIoError, kSchemaError (header), kParseError (row and column in the
// message, 1-based data row in Error::index()) and the dataset validation
// errors, whose row is reported the same way.
FhDataset read_dataset_csv(const std::filesystem::path& path, const CsvOptions& options = {});
FhDataset parse_dataset_csv(std::istream& in, const CsvOptions& options = {},
                            std::string_view source = "<stream>");

// Writes every column of X as x1..xp, so reading back with intercept = false
// reproduces the dataset bit for bit.
void write_dataset_csv(std::ostream& out, const FhDataset& data);

// Shortest text that is 17 significant digits or fewer and parses back to v.
// "NA" for NaN.
std::string format_double(double v);

std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_field(std::string_view text);

}  // namespace sae::cli

#endif  // SAE_CLI_CSV_IO_HPP_
