#pragma once

#include <sstream>
#include <string>

#include "cemb/io/embedding_format.hpp"
#include "cemb/io/lex.hpp"
#include "cemb/io/model_format.hpp"
#include "cemb/marginal.hpp"

namespace cemb {
namespace io {

// Problem bundle: marginal models paired with embeddings in file order,
// plus an optional candidate. Paths are resolved against the bundle file's
// directory.
//
//   problem NAME
//   model m1.scm
//   embedding a1.emb
//   model m2.scm
//   embedding a2.emb
//   candidate joint.scm
inline MarginalProblem read_problem(const std::string& path) {
  std::string dir;
  auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash + 1);
  auto resolve = [&](const std::string& p) {
    return (!p.empty() && p[0] == '/') ? p : dir + p;
  };
  MarginalProblem out;
  std::istringstream in(read_file(path));
  for (const auto& [text, num] : logical_lines(in)) {
    std::istringstream ls(text);
    std::string head, rest;
    ls >> head;
    std::getline(ls, rest);
    rest = strip(rest);
    if (head == "problem") continue;
    if (head == "model")
      out.models.push_back(read_model(resolve(rest)));
    else if (head == "embedding")
      out.embeddings.push_back(read_embedding(resolve(rest)));
    else if (head == "candidate")
      out.candidate = read_model(resolve(rest));
    else
      fail(ErrorKind::ParseError,
           "unrecognized bundle line " + std::to_string(num) + " in " + path);
  }
  out.check_shape();
  return out;
}

}  // namespace io
}  // namespace cemb
