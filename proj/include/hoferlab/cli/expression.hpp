#pragma once

#include "hoferlab/core/types.hpp"

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace hoferlab::cli {

enum class ParseErrorKind { syntax, unknown_identifier, arity };
const char* to_string(ParseErrorKind k);

// Diagnostic with a 1-based line and column (UTF-8 code points).
class ParseError : public ConfigurationError {
 public:
  ParseError(ParseErrorKind kind, int line, int column, const std::string& msg);
  ParseErrorKind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  ParseErrorKind kind_;
  int line_, column_;
  std::string message_;
};

struct Node;
using Expr = std::shared_ptr<const Node>;

// Functions: sin cos exp log sqrt tanh, smoothstep and its derivatives
// smoothstep_d<k>, bump(u, center, radius) = 1 - smoothstep(((u - center) / radius)^2).
struct Node {
  enum class Kind { constant, variable, add, sub, mul, div, pow, neg, call };
  Kind kind = Kind::constant;
  double value = 0.0;
  std::string name;  // variable or function
  int order = 0;     // smoothstep derivative order
  std::vector<Expr> args;
};

// Identifiers other than functions and `pi` must be listed in `identifiers`.
Expr parse_expression(const std::string& source, const std::set<std::string>& identifiers);

// Fully parenthesized; reparses to an equal tree.
std::string to_string(const Expr& e);
bool equal(const Expr& a, const Expr& b);
bool depends_on(const Expr& e, const std::string& var);
std::set<std::string> free_variables(const Expr& e);

// Symbolic derivative, lightly simplified.
Expr derivative(const Expr& e, const std::string& var);
// Replaces the named variables by constants and folds constant subtrees.
Expr substitute(const Expr& e, const std::map<std::string, double>& values);

Expr constant(double v);
Expr variable(const std::string& name);

double evaluate(const Expr& e, const std::map<std::string, double>& env);

// Evaluation with variables bound to positions of an argument array.
class Compiled {
 public:
  Compiled() = default;
  Compiled(const Expr& e, const std::vector<std::string>& slots);
  double operator()(const double* args) const;
  const Expr& expr() const { return expr_; }

 private:
  struct Op;
  Expr expr_;
  std::shared_ptr<const std::vector<Op>> prog_;
};

// k-th derivative of the quintic smoothstep away from 0 and 1.
double smoothstep_derivative(int k, double u);

}  // namespace hoferlab::cli
