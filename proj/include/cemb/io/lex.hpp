#pragma once

#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cemb/common.hpp"

namespace cemb {
namespace io {

inline std::string strip(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Logical lines: comments (#) removed, blanks dropped, 1-based numbers kept
// for error messages.
struct Line {
  std::string text;
  std::size_t number;
};

inline std::vector<Line> logical_lines(std::istream& in) {
  std::vector<Line> out;
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    std::string s = strip(raw);
    if (!s.empty()) out.push_back({s, n});
  }
  return out;
}

inline std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(strip(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!strip(cur).empty() || !out.empty()) out.push_back(strip(cur));
  while (!out.empty() && out.back().empty()) out.pop_back();
  for (const auto& item : out)
    if (item.empty()) fail(ErrorKind::ParseError, "empty item in list: '" + s + "'");
  return out;
}

inline bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

inline bool is_integer(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

inline Value parse_value(const std::string& s, std::size_t line) {
  if (!is_integer(s))
    fail(ErrorKind::ParseError, "expected an integer value at line " + std::to_string(line) +
                                    ", got '" + s + "'");
  return std::stoll(s);
}

// Probability literal: decimal or a/b fraction.
inline double parse_probability(const std::string& s, std::size_t line) {
  auto slash = s.find('/');
  try {
    if (slash != std::string::npos) {
      double num = std::stod(strip(s.substr(0, slash)));
      double den = std::stod(strip(s.substr(slash + 1)));
      if (den == 0.0) fail(ErrorKind::ParseError, "zero denominator at line " + std::to_string(line));
      return num / den;
    }
    return std::stod(s);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorKind::ParseError,
         "bad probability '" + s + "' at line " + std::to_string(line));
  }
}

// Extracts the body of "head { a, b, c }" style lines.
inline std::string brace_body(const std::string& s, std::size_t line) {
  auto open = s.find('{');
  auto close = s.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail(ErrorKind::ParseError, "expected a {...} block at line " + std::to_string(line));
  return s.substr(open + 1, close - open - 1);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot open: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorKind::IoError, "cannot open for writing: " + path);
  f << content;
}

}  // namespace io
}  // namespace cemb
