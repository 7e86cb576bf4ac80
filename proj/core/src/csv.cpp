#include "datamkt/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace datamkt {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string join_semicolon(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += format_double(xs[i]);
  }
  return out;
}

void CsvBuilder::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += fields[i];
  }
  out_ += '\n';
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open output file: " + path);
  }
  out << contents;
  if (!out) {
    throw std::runtime_error("failed writing output file: " + path);
  }
}

}  // namespace datamkt
