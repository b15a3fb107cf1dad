#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cemb {

// Endogenous/exogenous variables are identified by name; comparison is
// name equality throughout.
using VariableId = std::string;

// Range values are integers (labeled levels are encoded as integers with
// the label kept for display only).
using Value = std::int64_t;

enum class ErrorKind {
  CyclicModel,
  UnknownVariable,
  ValueOutOfRange,
  ContinuousExogenous,
  ZeroProbabilityCondition,
  MapMismatch,
  StructureInvalid,
  VariableMismatch,
  NotGraphicallyConsistent,
  MissingCandidate,
  SchemaMismatch,
  UnknownColumn,
  AllMissingColumn,
  AllMissingRow,
  MissingCells,
  StructureMismatch,
  InvalidModel,
  InvalidArgument,
  ParseError,
  IoError,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::CyclicModel: return "CyclicModel";
    case ErrorKind::UnknownVariable: return "UnknownVariable";
    case ErrorKind::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorKind::ContinuousExogenous: return "ContinuousExogenous";
    case ErrorKind::ZeroProbabilityCondition: return "ZeroProbabilityCondition";
    case ErrorKind::MapMismatch: return "MapMismatch";
    case ErrorKind::StructureInvalid: return "StructureInvalid";
    case ErrorKind::VariableMismatch: return "VariableMismatch";
    case ErrorKind::NotGraphicallyConsistent: return "NotGraphicallyConsistent";
    case ErrorKind::MissingCandidate: return "MissingCandidate";
    case ErrorKind::SchemaMismatch: return "SchemaMismatch";
    case ErrorKind::UnknownColumn: return "UnknownColumn";
    case ErrorKind::AllMissingColumn: return "AllMissingColumn";
    case ErrorKind::AllMissingRow: return "AllMissingRow";
    case ErrorKind::MissingCells: return "MissingCells";
    case ErrorKind::StructureMismatch: return "StructureMismatch";
    case ErrorKind::InvalidModel: return "InvalidModel";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

// Absolute tolerance for probability comparisons.
inline constexpr double kProbTol = 1e-9;

// Canonical number formatting: integers without a decimal point, everything
// else as the shortest string that round-trips. Reports and CSV files rely
// on this being stable across runs.
inline std::string format_number(double v) {
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 9.007199254740992e15) {
    long long i = static_cast<long long>(v);
    return std::to_string(i);
  }
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_value(Value v) { return std::to_string(v); }

template <class Container, class Fmt>
std::string join(const Container& c, const std::string& sep, Fmt fmt) {
  std::string out;
  bool first = true;
  for (const auto& item : c) {
    if (!first) out += sep;
    out += fmt(item);
    first = false;
  }
  return out;
}

inline std::string join_strings(const std::vector<std::string>& v, const std::string& sep) {
  return join(v, sep, [](const std::string& s) { return s; });
}

inline std::string join_values(const std::vector<Value>& v, const std::string& sep) {
  return join(v, sep, [](Value x) { return format_value(x); });
}

}  // namespace cemb
