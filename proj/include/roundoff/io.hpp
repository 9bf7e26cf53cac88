// Output formats: RFC 4180 CSV, JSON with stable key order, binary PPM.
#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "roundoff/arith.hpp"

namespace roundoff::io {

using Json = nlohmann::ordered_json;

/// Quotes a field when it contains a comma, quote or line break.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << csv_field(fields[i]);
    }
    os_ << "\r\n";
  }

 private:
  std::ostream& os_;
};

/// Exact value followed by its decimal rendering, as two CSV columns.
inline std::vector<std::string> exact_and_decimal(const Rational& x) { return {to_string(x), to_decimal(x)}; }

/// Row-major RGB image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  void set(int col, int row, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    auto i = (static_cast<std::size_t>(row) * width + col) * 3;
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
};

inline void write_ppm(std::ostream& os, const Image& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
}

inline std::ofstream open_output(const std::string& path, bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw Error("cannot open output file: " + path);
  return os;
}

inline void write_json(std::ostream& os, const Json& j) { os << j.dump(2) << '\n'; }

}  // namespace roundoff::io
