#pragma once

#include <sstream>
#include <string>

#include "cemb/embedding.hpp"
#include "cemb/io/lex.hpp"

namespace cemb {
namespace io {

// Embedding file format:
//
//   embedding NAME
//   relevant_low { Wolves, Eagles, RedDeer, FallowDeer, Squirrels }
//   relevant_high { Predators, Deer, Squirrels }
//   map Wolves -> Predators
//   map Eagles -> Predators
//   ...
//   alpha Predators = sum
//   alpha Squirrels = identity
//   alpha Zp = table            # rows over the preimage tuple, in the
//     0 -> 0                    # order the variables appear in relevant_low
//     ...
//   end
inline Embedding parse_embedding(std::istream& in) {
  Embedding e;
  std::vector<VariableId> low_order;
  auto lines = logical_lines(in);
  std::size_t i = 0;
  auto syntax = [](std::size_t line, const std::string& what) {
    fail(ErrorKind::ParseError, what + " at line " + std::to_string(line));
  };
  while (i < lines.size()) {
    const auto& [text, num] = lines[i];
    if (text.rfind("embedding", 0) == 0) {
      std::istringstream ls(text);
      std::string head;
      ls >> head >> e.name;
      ++i;
    } else if (text.rfind("relevant_low", 0) == 0) {
      for (const auto& v : split_csv_list(brace_body(text, num))) {
        e.relevant_low.insert(v);
        low_order.push_back(v);
      }
      ++i;
    } else if (text.rfind("relevant_high", 0) == 0) {
      for (const auto& v : split_csv_list(brace_body(text, num))) e.relevant_high.push_back(v);
      ++i;
    } else if (text.rfind("map ", 0) == 0) {
      auto arrow = text.find("->");
      if (arrow == std::string::npos) syntax(num, "expected map LOW -> HIGH");
      e.phi.map[strip(text.substr(4, arrow - 4))] = strip(text.substr(arrow + 2));
      ++i;
    } else if (text.rfind("alpha ", 0) == 0) {
      auto eq = text.find('=');
      if (eq == std::string::npos) syntax(num, "expected alpha VAR = body");
      VariableId target = strip(text.substr(6, eq - 6));
      std::string body = strip(text.substr(eq + 1));
      std::vector<VariableId> preimage;
      for (const auto& lv : low_order) {
        auto it = e.phi.map.find(lv);
        if (it != e.phi.map.end() && it->second == target) preimage.push_back(lv);
      }
      if (body == "identity") {
        if (preimage.size() != 1)
          syntax(num, "identity alpha for " + target + " needs a single preimage variable");
        e.alphas[target] = RangeMap::identity(target, preimage[0]);
        ++i;
      } else if (body == "sum") {
        e.alphas[target] = RangeMap::sum(target, preimage);
        ++i;
      } else if (body == "table") {
        std::map<std::vector<Value>, Value> table;
        ++i;
        for (; i < lines.size() && lines[i].text != "end"; ++i) {
          const std::string& row = lines[i].text;
          auto arrow = row.find("->");
          if (arrow == std::string::npos) syntax(lines[i].number, "expected 'values -> value'");
          std::istringstream ks(row.substr(0, arrow));
          std::vector<Value> key;
          std::string tok;
          while (ks >> tok) key.push_back(parse_value(tok, lines[i].number));
          if (key.size() != preimage.size())
            syntax(lines[i].number, "row arity does not match the preimage");
          table[key] = parse_value(strip(row.substr(arrow + 2)), lines[i].number);
        }
        if (i == lines.size()) syntax(num, "missing 'end' after table");
        ++i;
        e.alphas[target] = RangeMap::tabular(target, preimage, std::move(table));
      } else {
        syntax(num, "unknown alpha body '" + body + "'");
      }
    } else {
      syntax(num, "unrecognized statement");
    }
  }
  e.phi.domain = e.relevant_low;
  e.phi.codomain = e.relevant_high_set();
  return e;
}

inline Embedding read_embedding(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return parse_embedding(in);
  } catch (const Error& err) {
    throw Error(err.kind(), std::string(err.what()) + " [" + path + "]");
  }
}

inline std::string serialize_embedding(const Embedding& e) {
  std::ostringstream out;
  out << "embedding " << (e.name.empty() ? "unnamed" : e.name) << "\n";
  // Keep a low order that groups each alpha's preimage contiguously so the
  // file round-trips to the same table key order.
  std::vector<VariableId> low_order;
  for (const auto& hv : e.relevant_high) {
    auto it = e.alphas.find(hv);
    if (it == e.alphas.end()) continue;
    for (const auto& lv : it->second.preimage) low_order.push_back(lv);
  }
  for (const auto& lv : e.relevant_low)
    if (std::find(low_order.begin(), low_order.end(), lv) == low_order.end())
      low_order.push_back(lv);
  out << "relevant_low {" << join_strings(low_order, ", ") << "}\n";
  out << "relevant_high {" << join_strings(e.relevant_high, ", ") << "}\n";
  for (const auto& lv : low_order) {
    auto it = e.phi.map.find(lv);
    if (it != e.phi.map.end()) out << "map " << lv << " -> " << it->second << "\n";
  }
  for (const auto& hv : e.relevant_high) {
    auto it = e.alphas.find(hv);
    if (it == e.alphas.end()) continue;
    const RangeMap& a = it->second;
    out << "alpha " << hv << " = ";
    switch (a.kind) {
      case RangeMap::Kind::Identity: out << "identity\n"; break;
      case RangeMap::Kind::Sum: out << "sum\n"; break;
      case RangeMap::Kind::Table:
        out << "table\n";
        for (const auto& [key, val] : a.table)
          out << "  " << join_values(key, " ") << " -> " << format_value(val) << "\n";
        out << "end\n";
        break;
    }
  }
  return out.str();
}

inline void write_embedding(const Embedding& e, const std::string& path) {
  write_file(path, serialize_embedding(e));
}

}  // namespace io
}  // namespace cemb
