#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace stormlevels::io {

// Thrown for malformed user input; the CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Minimal CSV: comma separated, no quoting, first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

// Doubles are printed with "%.17g" so files round-trip bit-exactly.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

// FNV-1a 64-bit digest of a file's bytes, hex encoded. Used in manifests to
// pin run inputs, not for security.
std::string file_digest(const std::string& path);
std::string string_digest(const std::string& content);

double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

}  // namespace stormlevels::io
