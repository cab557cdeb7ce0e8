// Copyright 2026 The knnscale Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace knnscale {

/// Shortest decimal string that round-trips to the same double. Locale
/// independent; infinities print as "inf"/"-inf", NaN as "nan".
std::string format_double(double value);

/// Parses what format_double produces. Throws DataError on garbage.
double parse_double(std::string_view text);

std::vector<std::string> split(std::string_view text, char delimiter);

/// Row-at-a-time CSV writer. Fields are written verbatim: the schemas in
/// this project never contain commas or quotes.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void header(std::initializer_list<std::string_view> names);
  void header(const std::vector<std::string>& names);
  CsvWriter& field(std::string_view text);
  CsvWriter& field(double value);
  CsvWriter& field(long long value);
  CsvWriter& field(int value) { return field(static_cast<long long>(value)); }
  CsvWriter& field(std::size_t value) {
    return field(static_cast<long long>(value));
  }
  void end_row();
  /// "# text" line; readers in this project skip them.
  void comment(std::string_view text);

 private:
  std::ofstream out_;
  bool row_started_ = false;
};

}  // namespace knnscale
