#include "epiplan/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

namespace epiplan {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {
bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& field) {
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}
}  // namespace

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) buffer_ += ',';
    buffer_ += needs_quoting(fields[i]) ? quote(fields[i]) : fields[i];
  }
  buffer_ += "\r\n";
}

void CsvWriter::write_numeric_row(const std::vector<double>& values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_double(v));
  write_row(fields);
}

void CsvWriter::save() const {
  std::ofstream out(path_, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path_);
  }
  out << buffer_;
}

}  // namespace epiplan
