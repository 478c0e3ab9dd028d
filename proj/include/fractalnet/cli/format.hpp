#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <openssl/evp.h>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fractalnet/errors.hpp"

namespace fractalnet::cli {

// Significant digits for every floating-point value the tool prints.
inline constexpr int kDefaultPrecision = 6;

// %.{p}g, with negative zero printed as 0.
inline std::string format_real(double x, int precision) {
  if (x == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

// x rounded to `precision` significant digits, so JSON serialisation of the
// result prints exactly those digits.
inline double round_significant(double x, int precision) {
  return std::strtod(format_real(x, precision).c_str(), nullptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(int precision) : precision_(precision) {}

  CsvWriter& header(std::initializer_list<std::string_view> names) {
    bool first = true;
    for (auto n : names) {
      if (!first) buf_ << ',';
      buf_ << n;
      first = false;
    }
    buf_ << '\n';
    return *this;
  }

  template <class... Ts>
  CsvWriter& row(const Ts&... cells) {
    bool first = true;
    ((cell(cells, first)), ...);
    buf_ << '\n';
    return *this;
  }

  std::string str() const { return buf_.str(); }

 private:
  template <class T>
  void cell(const T& v, bool& first) {
    if (!first) buf_ << ',';
    first = false;
    if constexpr (std::is_same_v<T, bool>) {
      buf_ << (v ? 1 : 0);
    } else if constexpr (std::is_floating_point_v<T>) {
      buf_ << format_real(v, precision_);
    } else {
      buf_ << v;
    }
  }

  std::ostringstream buf_;
  int precision_;
};

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw IoError("sha256 digest failed");
  }
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return hex.str();
}

// Edit distance, used to suggest the intended flag for a typo.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

}  // namespace fractalnet::cli
