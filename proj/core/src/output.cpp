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


#include "output.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>

#include "qduffing/errors.hpp"

namespace qduffing::output {

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::array<char, 32> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  if (ec != std::errc()) throw Error(ErrorKind::kIo, "could not format a floating-point value");
  return std::string(buffer.data(), end);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) {
    throw Error(ErrorKind::kIo, "cannot create directory " + path.parent_path().string() + ": " +
                                    ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string() + " for writing");
  out << content;
  out.close();
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path.string());
}

CsvBuilder::CsvBuilder(const std::string& comment, const std::vector<std::string>& header) {
  if (!comment.empty()) text_ += "# " + comment + "\n";
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

void CsvBuilder::separator() {
  if (row_open_) text_ += ',';
  row_open_ = true;
}

CsvBuilder& CsvBuilder::cell(double value) {
  separator();
  text_ += format_double(value);
  return *this;
}

CsvBuilder& CsvBuilder::cell(long value) {
  separator();
  text_ += std::to_string(value);
  return *this;
}

CsvBuilder& CsvBuilder::cell(unsigned long long value) {
  separator();
  text_ += std::to_string(value);
  return *this;
}

CsvBuilder& CsvBuilder::cell(const std::string& value) {
  separator();
  // Quote anything that could break the row.
  if (value.find_first_of(",\"\n") == std::string::npos) {
    text_ += value;
  } else {
    text_ += '"';
    for (char c : value) {
      if (c == '"') text_ += '"';
      text_ += c == '\n' ? ' ' : c;
    }
    text_ += '"';
  }
  return *this;
}

void CsvBuilder::end_row() {
  text_ += '\n';
  row_open_ = false;
}

}  // namespace qduffing::output
