#pragma once

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

namespace qsol::csv {

// 17-significant-digit, locale-independent float text (bit-stable round trip).
std::string format_double(double v);

// One-line header, then rows; every cell is either format_double output or a
// verbatim string.
class Writer {
 public:
  Writer(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);
  void raw_row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t columns_;
  std::string path_;
};

}  // namespace qsol::csv
