#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fluxbus/errors.hpp"

// CSV and file plumbing. Comma separator, '.' decimal point, one header
// row, LF line endings, %.12g numbers; rewriting the same data is
// byte-identical. Files land via temp-then-rename so readers never see a
// partial file.

namespace fluxbus {

inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline void atomic_write(const std::filesystem::path& path,
                         const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw TaskError("cannot write " + tmp.string());
    out << content;
    if (!out.good()) throw TaskError("write failure on " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header) {
    for (size_t i = 0; i < header.size(); ++i)
      body_ += (i ? "," : "") + header[i];
    body_ += "\n";
  }

  void row(const std::vector<double>& values) {
    for (size_t i = 0; i < values.size(); ++i)
      body_ += (i ? "," : "") + format_number(values[i]);
    body_ += "\n";
  }

  void row_mixed(const std::vector<std::string>& values) {
    for (size_t i = 0; i < values.size(); ++i)
      body_ += (i ? "," : "") + values[i];
    body_ += "\n";
  }

  const std::string& str() const { return body_; }

 private:
  std::string body_;
};

}  // namespace fluxbus
