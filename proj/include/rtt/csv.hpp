#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rtt::csv {

/// RFC 4180 field: quoted when it holds a comma, quote, CR or LF; quotes doubled.
std::string field(std::string_view s);
/// Shortest text that round-trips the double (std::to_chars); locale independent.
std::string num(double v);
std::string num(long long v);
inline std::string num(int v) { return num(static_cast<long long>(v)); }
inline std::string num(long v) { return num(static_cast<long long>(v)); }
inline std::string num(std::size_t v) { return num(static_cast<long long>(v)); }

/// Header plus rows, CRLF-free ("\n" line ends), fields escaped on output.
class Table {
 public:
  explicit Table(std::vector<std::string> header);
  void add(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace rtt::csv
