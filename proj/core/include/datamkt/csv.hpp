#pragma once

#include <string>
#include <vector>

namespace datamkt {

// Floats are serialized with 17 significant digits so that equal doubles
// always produce equal bytes; all CSV output goes through here.
std::string format_double(double x);

std::string join_semicolon(const std::vector<double>& xs);

// Minimal CSV assembly: comma separators, LF line endings, no quoting
// (fields produced by this project never contain commas or newlines).
class CsvBuilder {
 public:
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

void write_file(const std::string& path, const std::string& contents);

}  // namespace datamkt
