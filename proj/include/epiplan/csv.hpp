#ifndef EPIPLAN_CSV_HPP_
#define EPIPLAN_CSV_HPP_

#include <string>
#include <vector>

namespace epiplan {

// Shortest round-trip decimal form; stable across runs.
std::string format_double(double v);

// RFC-4180 writer: fields containing commas, quotes or newlines are quoted,
// rows end in \r\n.
class CsvWriter {
 public:
  explicit CsvWriter(std::string path) : path_(std::move(path)) {}

  void write_row(const std::vector<std::string>& fields);
  void write_numeric_row(const std::vector<double>& values);
  // Flushes accumulated rows to disk.
  void save() const;
  const std::string& content() const { return buffer_; }

 private:
  std::string path_;
  std::string buffer_;
};

}  // namespace epiplan

#endif  // EPIPLAN_CSV_HPP_
