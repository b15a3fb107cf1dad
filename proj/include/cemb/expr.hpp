#pragma once

#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cemb/common.hpp"

namespace cemb {

// Closed-form structural function bodies: +, -, *, max(a, b), ceil(a),
// numeric literals and parent references.
class Expr {
 public:
  enum class Op { Constant, Variable, Add, Sub, Mul, Neg, Max, Ceil };

  static Expr constant(double v) {
    Expr e(Op::Constant);
    e.value_ = v;
    return e;
  }
  static Expr variable(VariableId name) {
    Expr e(Op::Variable);
    e.name_ = std::move(name);
    return e;
  }
  static Expr unary(Op op, Expr a) {
    Expr e(op);
    e.args_.push_back(std::move(a));
    return e;
  }
  static Expr binary(Op op, Expr a, Expr b) {
    Expr e(op);
    e.args_.push_back(std::move(a));
    e.args_.push_back(std::move(b));
    return e;
  }

  double evaluate(const std::map<VariableId, double>& env) const {
    switch (op_) {
      case Op::Constant: return value_;
      case Op::Variable: {
        auto it = env.find(name_);
        if (it == env.end())
          fail(ErrorKind::UnknownVariable, "expression references undeclared parent: " + name_);
        return it->second;
      }
      case Op::Add: return args_[0].evaluate(env) + args_[1].evaluate(env);
      case Op::Sub: return args_[0].evaluate(env) - args_[1].evaluate(env);
      case Op::Mul: return args_[0].evaluate(env) * args_[1].evaluate(env);
      case Op::Neg: return -args_[0].evaluate(env);
      case Op::Max: return std::max(args_[0].evaluate(env), args_[1].evaluate(env));
      case Op::Ceil: return std::ceil(args_[0].evaluate(env));
    }
    fail(ErrorKind::InvalidArgument, "corrupt expression node");
  }

  void collect_variables(std::set<VariableId>& out) const {
    if (op_ == Op::Variable) out.insert(name_);
    for (const auto& a : args_) a.collect_variables(out);
  }

  std::string to_string() const {
    switch (op_) {
      case Op::Constant: return format_number(value_);
      case Op::Variable: return name_;
      case Op::Add: return "(" + args_[0].to_string() + " + " + args_[1].to_string() + ")";
      case Op::Sub: return "(" + args_[0].to_string() + " - " + args_[1].to_string() + ")";
      case Op::Mul: return "(" + args_[0].to_string() + " * " + args_[1].to_string() + ")";
      case Op::Neg: return "(-" + args_[0].to_string() + ")";
      case Op::Max: return "max(" + args_[0].to_string() + ", " + args_[1].to_string() + ")";
      case Op::Ceil: return "ceil(" + args_[0].to_string() + ")";
    }
    return "?";
  }

 private:
  explicit Expr(Op op) : op_(op) {}

  Op op_;
  double value_ = 0.0;
  VariableId name_;
  std::vector<Expr> args_;
};

namespace detail {

class ExprParser {
 public:
  explicit ExprParser(const std::string& text) : text_(text) {}

  Expr parse() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size())
      fail(ErrorKind::ParseError, "trailing characters in expression: '" + text_.substr(pos_) + "'");
    return e;
  }

 private:
  Expr parse_sum() {
    Expr lhs = parse_product();
    while (true) {
      skip_ws();
      if (consume('+')) {
        lhs = Expr::binary(Expr::Op::Add, std::move(lhs), parse_product());
      } else if (consume('-')) {
        lhs = Expr::binary(Expr::Op::Sub, std::move(lhs), parse_product());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_product() {
    Expr lhs = parse_atom();
    while (true) {
      skip_ws();
      if (consume('*')) {
        lhs = Expr::binary(Expr::Op::Mul, std::move(lhs), parse_atom());
      } else {
        return lhs;
      }
    }
  }

  Expr parse_atom() {
    skip_ws();
    if (consume('-')) return Expr::unary(Expr::Op::Neg, parse_atom());
    if (consume('(')) {
      Expr e = parse_sum();
      expect(')');
      return e;
    }
    if (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      return parse_number();
    std::string name = parse_identifier();
    skip_ws();
    if (name == "max") {
      expect('(');
      Expr a = parse_sum();
      expect(',');
      Expr b = parse_sum();
      expect(')');
      return Expr::binary(Expr::Op::Max, std::move(a), std::move(b));
    }
    if (name == "ceil") {
      expect('(');
      Expr a = parse_sum();
      expect(')');
      return Expr::unary(Expr::Op::Ceil, std::move(a));
    }
    return Expr::variable(name);
  }

  Expr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.' ||
            text_[pos_] == 'e' || text_[pos_] == 'E' ||
            ((text_[pos_] == '+' || text_[pos_] == '-') && pos_ > start &&
             (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
      ++pos_;
    try {
      return Expr::constant(std::stod(text_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      fail(ErrorKind::ParseError, "bad numeric literal in expression");
    }
  }

  std::string parse_identifier() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    if (pos_ == start)
      fail(ErrorKind::ParseError, "expected identifier or number in expression at '" +
                                      text_.substr(pos_, 8) + "'");
    return text_.substr(start, pos_ - start);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c))
      fail(ErrorKind::ParseError, std::string("expected '") + c + "' in expression");
  }

  const std::string& text_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expr(const std::string& text) { return detail::ExprParser(text).parse(); }

}  // namespace cemb
