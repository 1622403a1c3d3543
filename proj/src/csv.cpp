#include "qsolchain/csv.hpp"

#include <charconv>
#include <system_error>

#include "qsolchain/errors.hpp"

namespace qsol::csv {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

Writer::Writer(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()), path_(path) {
  if (!out_) throw Error("cannot open output file " + path);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ << ',';
    out_ << header[i];
  }
  out_ << '\n';
}

void Writer::row(const std::vector<double>& values) {
  if (values.size() != columns_)
    throw Error("csv row width mismatch in " + path_);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void Writer::raw_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw Error("csv row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void Writer::close() {
  out_.close();
  if (!out_) throw Error("failed writing " + path_);
}

}  // namespace qsol::csv
