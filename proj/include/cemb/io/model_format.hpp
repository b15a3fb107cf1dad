#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cemb/io/lex.hpp"
#include "cemb/scm.hpp"

namespace cemb {
namespace io {

// Model file format (one statement per line, # comments):
//
//   model NAME
//   option integer_outputs            # ceil every closed-form output
//   var X in {0, 2, 4}                # finite range (integers or labels)
//   var Wolves                        # unbounded, sampling engine only
//   exo U ~ pmf {0: 1/3, 2: 1/3, 4: 1/3}
//   exo N ~ normal(1, 0.25)
//   fn X(U) = U                       # closed form: + - * max(,) ceil()
//   fn Y(X, U) = table                # endogenous parents first, then
//     0 0 -> 0                        # exogenous; rows are total
//     ...
//   end
//   do X = 2                          # optional pre-applied intervention
inline Scm parse_model(std::istream& in) {
  Scm m;
  std::map<VariableId, Value> interventions;
  auto lines = logical_lines(in);
  std::size_t i = 0;
  auto syntax = [](std::size_t line, const std::string& what) {
    fail(ErrorKind::ParseError, what + " at line " + std::to_string(line));
  };
  while (i < lines.size()) {
    const auto& [text, num] = lines[i];
    std::istringstream ls(text);
    std::string head;
    ls >> head;
    if (head == "model") {
      std::string name;
      ls >> name;
      m.set_name(name);
      ++i;
    } else if (head == "option") {
      std::string opt;
      ls >> opt;
      if (opt == "integer_outputs")
        m.set_integer_outputs(true);
      else
        syntax(num, "unknown option '" + opt + "'");
      ++i;
    } else if (head == "var") {
      std::string rest = strip(text.substr(4));
      auto in_pos = rest.find(" in ");
      if (in_pos == std::string::npos) {
        if (!is_identifier(rest)) syntax(num, "bad variable declaration");
        m.add_variable(rest, std::nullopt);
      } else {
        std::string name = strip(rest.substr(0, in_pos));
        if (!is_identifier(name)) syntax(num, "bad variable name '" + name + "'");
        auto items = split_csv_list(brace_body(rest, num));
        if (items.empty()) syntax(num, "empty range");
        ValueRange range;
        bool labeled = !is_integer(items[0]);
        for (std::size_t k = 0; k < items.size(); ++k) {
          if (labeled) {
            if (!is_identifier(items[k])) syntax(num, "bad label '" + items[k] + "'");
            range.values.push_back(static_cast<Value>(k));
            range.labels.push_back(items[k]);
          } else {
            range.values.push_back(parse_value(items[k], num));
          }
        }
        m.add_variable(name, range);
      }
      ++i;
    } else if (head == "exo") {
      std::string name, tilde;
      ls >> name >> tilde;
      if (tilde != "~") syntax(num, "expected '~' in exogenous declaration");
      std::string law = strip(text.substr(text.find('~') + 1));
      if (law.rfind("pmf", 0) == 0) {
        TabularPmf pmf;
        for (const auto& item : split_csv_list(brace_body(law, num))) {
          auto colon = item.find(':');
          if (colon == std::string::npos) syntax(num, "expected value: probability");
          Value v = parse_value(strip(item.substr(0, colon)), num);
          double p = parse_probability(strip(item.substr(colon + 1)), num);
          pmf.entries.emplace_back(v, p);
        }
        m.add_exogenous({name, pmf});
      } else if (law.rfind("normal", 0) == 0) {
        auto open = law.find('(');
        auto close = law.rfind(')');
        if (open == std::string::npos || close == std::string::npos)
          syntax(num, "expected normal(mean, std)");
        auto parts = split_csv_list(law.substr(open + 1, close - open - 1));
        if (parts.size() != 2) syntax(num, "expected normal(mean, std)");
        m.add_exogenous({name, NormalLaw{parse_probability(parts[0], num),
                                         parse_probability(parts[1], num)}});
      } else {
        syntax(num, "unknown law '" + law + "'");
      }
      ++i;
    } else if (head == "fn") {
      std::string rest = strip(text.substr(3));
      auto open = rest.find('(');
      auto close = rest.find(')');
      auto eq = rest.find('=', close == std::string::npos ? 0 : close);
      if (open == std::string::npos || close == std::string::npos || eq == std::string::npos)
        syntax(num, "expected fn TARGET(parents) = body");
      StructuralFunction fn;
      fn.target = strip(rest.substr(0, open));
      std::string arglist = strip(rest.substr(open + 1, close - open - 1));
      std::vector<std::string> args =
          arglist.empty() ? std::vector<std::string>{} : split_csv_list(arglist);
      bool seen_exo = false;
      for (const auto& a : args) {
        if (m.has_variable(a)) {
          if (seen_exo)
            syntax(num, "endogenous parents must be listed before exogenous ones");
          fn.endogenous_parents.push_back(a);
        } else if (m.find_exogenous(a)) {
          seen_exo = true;
          fn.exogenous_parents.push_back(a);
        } else {
          syntax(num, "parent '" + a + "' is not declared");
        }
      }
      std::string body = strip(rest.substr(eq + 1));
      if (body == "table") {
        TabularMap table;
        ++i;
        for (; i < lines.size() && lines[i].text != "end"; ++i) {
          const std::string& row = lines[i].text;
          auto arrow = row.find("->");
          if (arrow == std::string::npos) syntax(lines[i].number, "expected 'values -> value'");
          std::istringstream ks(row.substr(0, arrow));
          std::vector<Value> key;
          std::string tok;
          while (ks >> tok) key.push_back(parse_value(tok, lines[i].number));
          if (key.size() != args.size())
            syntax(lines[i].number, "row arity does not match the signature");
          table.rows[key] = parse_value(strip(row.substr(arrow + 2)), lines[i].number);
        }
        if (i == lines.size()) syntax(num, "missing 'end' after table");
        ++i;  // consume 'end'
        fn.body = std::move(table);
      } else {
        fn.body = parse_expr(body);
        ++i;
      }
      m.set_function(std::move(fn));
    } else if (head == "do") {
      std::string rest = strip(text.substr(3));
      auto eq = rest.find('=');
      if (eq == std::string::npos) syntax(num, "expected do VAR = value");
      interventions[strip(rest.substr(0, eq))] = parse_value(strip(rest.substr(eq + 1)), num);
      ++i;
    } else {
      syntax(num, "unknown statement '" + head + "'");
    }
  }
  m.validate();
  if (!interventions.empty()) m = m.apply_intervention(interventions);
  return m;
}

inline Scm read_model(const std::string& path) {
  std::istringstream in(read_file(path));
  try {
    return parse_model(in);
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " [" + path + "]");
  }
}

inline std::string serialize_model(const Scm& m) {
  std::ostringstream out;
  out << "model " << (m.name().empty() ? "unnamed" : m.name()) << "\n";
  if (m.integer_outputs()) out << "option integer_outputs\n";
  for (const auto& v : m.variables()) {
    const auto& r = m.range_opt(v);
    if (!r) {
      out << "var " << v << "\n";
      continue;
    }
    out << "var " << v << " in {";
    if (!r->labels.empty()) {
      out << join_strings(r->labels, ", ");
    } else {
      out << join_values(r->values, ", ");
    }
    out << "}\n";
  }
  for (const auto& e : m.exogenous()) {
    out << "exo " << e.id << " ~ ";
    if (e.is_tabular()) {
      out << "pmf {";
      bool first = true;
      for (const auto& [v, p] : e.pmf().entries) {
        if (!first) out << ", ";
        out << format_value(v) << ": " << format_number(p);
        first = false;
      }
      out << "}\n";
    } else {
      out << "normal(" << format_number(e.normal().mean) << ", "
          << format_number(e.normal().stddev) << ")\n";
    }
  }
  for (const auto& v : m.variables()) {
    const StructuralFunction& fn = m.functions().at(v);
    out << "fn " << v << "(";
    std::vector<std::string> args = fn.endogenous_parents;
    args.insert(args.end(), fn.exogenous_parents.begin(), fn.exogenous_parents.end());
    out << join_strings(args, ", ") << ") = ";
    if (fn.is_tabular()) {
      out << "table\n";
      for (const auto& [key, val] : fn.table().rows)
        out << "  " << join_values(key, " ") << " -> " << format_value(val) << "\n";
      out << "end\n";
    } else {
      out << fn.expr().to_string() << "\n";
    }
  }
  for (const auto& [v, val] : m.interventions())
    out << "do " << v << " = " << format_value(val) << "\n";
  return out.str();
}

inline void write_model(const Scm& m, const std::string& path) {
  write_file(path, serialize_model(m));
}

}  // namespace io
}  // namespace cemb
