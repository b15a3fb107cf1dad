#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "cemb/common.hpp"
#include "cemb/io/lex.hpp"

namespace cemb {
namespace io {

// Structured text report with stable key ordering: insertion order is the
// output order, so identical inputs produce byte-identical reports.
class Report {
 public:
  explicit Report(const std::string& kind) { lines_.push_back("report " + kind); }

  void kv(const std::string& key, const std::string& value) {
    lines_.push_back(key + ": " + value);
  }
  void kv(const std::string& key, double value) { kv(key, format_number(value)); }
  void kv(const std::string& key, std::size_t value) { kv(key, std::to_string(value)); }
  void kv(const std::string& key, int value) { kv(key, std::to_string(value)); }
  void kv(const std::string& key, bool value) { kv(key, std::string(value ? "true" : "false")); }
  void line(const std::string& text) { lines_.push_back(text); }
  void section(const std::string& name) { lines_.push_back("[" + name + "]"); }

  std::string str() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

  void write(const std::string& path) const { write_file(path, str()); }

 private:
  std::vector<std::string> lines_;
};

}  // namespace io
}  // namespace cemb
