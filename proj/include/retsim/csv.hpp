#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace retsim {

// Locale-independent shortest-or-17-digit formatting ("%.17g" semantics);
// round-trips doubles exactly and keeps output byte-stable across runs.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void close();  // flushes; throws on I/O failure

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

}  // namespace retsim
