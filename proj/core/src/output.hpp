// Copyright 2026 The qduffing Authors
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
#include <string>
#include <vector>

namespace qduffing::output {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Writes `content` to `path`, creating parent directories. Throws
/// Error(kIo) on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

/// CSV text: an optional "# ..." comment line, a header row, then rows.
class CsvBuilder {
 public:
  CsvBuilder(const std::string& comment, const std::vector<std::string>& header);

  CsvBuilder& cell(double value);
  CsvBuilder& cell(long value);
  CsvBuilder& cell(int value) { return cell(static_cast<long>(value)); }
  CsvBuilder& cell(unsigned long long value);
  CsvBuilder& cell(const std::string& value);
  void end_row();

  const std::string& str() const { return text_; }

 private:
  void separator();

  std::string text_;
  bool row_open_ = false;
};

}  // namespace qduffing::output
