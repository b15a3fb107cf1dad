#pragma once

#include <sstream>
#include <string>

#include "cemb/graph.hpp"
#include "cemb/io/lex.hpp"

namespace cemb {
namespace io {

// Edge-list exchange format:
//
//   graph NAME
//   vertices { A, B, C }
//   A -> B
//   B <-> C
inline CausalGraph parse_graph(std::istream& in) {
  CausalGraph g;
  for (const auto& [text, num] : logical_lines(in)) {
    if (text.rfind("graph", 0) == 0) continue;
    if (text.rfind("vertices", 0) == 0) {
      for (const auto& v : split_csv_list(brace_body(text, num))) g.add_vertex(v);
      continue;
    }
    if (text.rfind("vertex ", 0) == 0) {
      g.add_vertex(strip(text.substr(7)));
      continue;
    }
    auto bi = text.find("<->");
    if (bi != std::string::npos) {
      g.add_bidirected(strip(text.substr(0, bi)), strip(text.substr(bi + 3)));
      continue;
    }
    auto di = text.find("->");
    if (di != std::string::npos) {
      g.add_directed(strip(text.substr(0, di)), strip(text.substr(di + 2)));
      continue;
    }
    fail(ErrorKind::ParseError, "unrecognized graph line " + std::to_string(num) + ": " + text);
  }
  g.topological_order();
  return g;
}

inline CausalGraph read_graph(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return parse_graph(in);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " [" + path + "]");
  }
}

inline std::string serialize_graph(const CausalGraph& g, const std::string& name = "g") {
  std::ostringstream out;
  out << "graph " << name << "\n";
  out << "vertices {" << join_strings(g.vertices(), ", ") << "}\n";
  for (const auto& [a, b] : g.directed()) out << a << " -> " << b << "\n";
  for (const auto& [a, b] : g.bidirected()) out << a << " <-> " << b << "\n";
  return out.str();
}

inline void write_graph(const CausalGraph& g, const std::string& path,
                        const std::string& name = "g") {
  write_file(path, serialize_graph(g, name));
}

}  // namespace io
}  // namespace cemb
