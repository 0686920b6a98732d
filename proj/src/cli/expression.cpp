#include "hoferlab/cli/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>

namespace hoferlab::cli {

const char* to_string(ParseErrorKind k) {
  switch (k) {
    case ParseErrorKind::syntax: return "syntax error";
    case ParseErrorKind::unknown_identifier: return "unknown identifier";
    case ParseErrorKind::arity: return "arity mismatch";
  }
  return "?";
}

ParseError::ParseError(ParseErrorKind kind, int line, int column, const std::string& msg)
    : ConfigurationError(std::string(to_string(kind)) + " at " + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + msg),
      kind_(kind),
      line_(line),
      column_(column),
      message_(msg) {}

// ---------------------------------------------------------------- construction

namespace {

using K = Node::Kind;

Expr make(K k, std::vector<Expr> args, std::string name = {}, int order = 0) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->args = std::move(args);
  n->name = std::move(name);
  n->order = order;
  return n;
}

bool is_const(const Expr& e, double v) { return e->kind == K::constant && e->value == v; }
bool is_const(const Expr& e) { return e->kind == K::constant; }

const std::map<std::string, int>& function_arity() {
  static const std::map<std::string, int> m{{"sin", 1},  {"cos", 1},  {"exp", 1},        {"log", 1},
                                            {"sqrt", 1}, {"tanh", 1}, {"smoothstep", 1}, {"bump", 3}};
  return m;
}

enum Fn { f_sin, f_cos, f_exp, f_log, f_sqrt, f_tanh, f_smoothstep, f_bump };

int function_code(const std::string& f) {
  static const std::map<std::string, int> m{{"sin", f_sin},   {"cos", f_cos},   {"exp", f_exp},
                                            {"log", f_log},   {"sqrt", f_sqrt}, {"tanh", f_tanh},
                                            {"smoothstep", f_smoothstep},       {"bump", f_bump}};
  auto it = m.find(f);
  if (it == m.end()) throw ConfigurationError("unknown function " + f);
  return it->second;
}

double call(int f, int order, const double* a) {
  switch (f) {
    case f_sin: return std::sin(a[0]);
    case f_cos: return std::cos(a[0]);
    case f_exp: return std::exp(a[0]);
    case f_log: return std::log(a[0]);
    case f_sqrt: return std::sqrt(a[0]);
    case f_tanh: return std::tanh(a[0]);
    case f_smoothstep: return smoothstep_derivative(order, a[0]);
    default: {
      double s = (a[0] - a[1]) / a[2];
      return 1.0 - smoothstep_derivative(0, s * s);
    }
  }
}

}  // namespace

Expr constant(double v) {
  auto n = std::make_shared<Node>();
  n->value = v;
  return n;
}

Expr variable(const std::string& name) { return make(K::variable, {}, name); }

double smoothstep_derivative(int k, double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return k == 0 ? 1.0 : 0.0;
  // 10 u^3 - 15 u^4 + 6 u^5, differentiated k times
  double c[6] = {0, 0, 0, 10, -15, 6};
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < 5; ++i) c[i] = (i + 1) * c[i + 1];
    c[5] = 0;
  }
  double r = 0.0;
  for (int i = 5; i >= 0; --i) r = r * u + c[i];
  return r;
}

namespace {

Expr add(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value + b->value);
  if (is_const(a, 0)) return b;
  if (is_const(b, 0)) return a;
  return make(K::add, {a, b});
}
Expr neg(Expr a) {
  if (is_const(a)) return constant(-a->value);
  if (a->kind == K::neg) return a->args[0];
  return make(K::neg, {a});
}
Expr sub(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value - b->value);
  if (is_const(b, 0)) return a;
  if (is_const(a, 0)) return neg(b);
  return make(K::sub, {a, b});
}
Expr mul(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value * b->value);
  if (is_const(a, 0) || is_const(b, 0)) return constant(0.0);
  if (is_const(a, 1)) return b;
  if (is_const(b, 1)) return a;
  return make(K::mul, {a, b});
}
Expr div(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(a->value / b->value);
  if (is_const(a, 0)) return constant(0.0);
  if (is_const(b, 1)) return a;
  return make(K::div, {a, b});
}
Expr pow(Expr a, Expr b) {
  if (is_const(a) && is_const(b)) return constant(std::pow(a->value, b->value));
  if (is_const(b, 0)) return constant(1.0);
  if (is_const(b, 1)) return a;
  return make(K::pow, {a, b});
}
Expr fn(const std::string& f, std::vector<Expr> args, int order = 0) {
  bool all_const = true;
  for (auto& a : args) all_const = all_const && is_const(a);
  if (all_const) {
    double v[3] = {0, 0, 0};
    for (std::size_t i = 0; i < args.size(); ++i) v[i] = args[i]->value;
    return constant(call(function_code(f), order, v));
  }
  return make(K::call, std::move(args), f, order);
}

// bump(u, c, r) written out in the smoothstep grammar
Expr expand_bump(const Expr& e) {
  Expr s = div(sub(e->args[0], e->args[1]), e->args[2]);
  return sub(constant(1.0), fn("smoothstep", {pow(s, constant(2.0))}));
}

// ---------------------------------------------------------------- lexer / parser

struct Token {
  enum Type { number, ident, op, end } type = end;
  std::string text;
  double value = 0.0;
  int line = 1, column = 1;
};

class Parser {
 public:
  Parser(const std::string& src, const std::set<std::string>& ids) : ids_(ids) { lex(src); }

  Expr parse() {
    Expr e = expr();
    if (peek().type != Token::end) fail(peek(), "unexpected '" + peek().text + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& msg, ParseErrorKind k = ParseErrorKind::syntax) {
    throw ParseError(k, t.line, t.column, msg);
  }

  void lex(const std::string& s) {
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
      for (std::size_t j = 0; j < n; ++j, ++i) {
        unsigned char ch = s[i];
        if (ch == '\n') {
          ++line;
          col = 1;
        } else if ((ch & 0xC0) != 0x80) {
          ++col;
        }
      }
    };
    while (i < s.size()) {
      unsigned char ch = s[i];
      if (std::isspace(ch)) {
        advance(1);
        continue;
      }
      Token t;
      t.line = line;
      t.column = col;
      if (std::isdigit(ch) || (ch == '.' && i + 1 < s.size() && std::isdigit((unsigned char)s[i + 1]))) {
        const char* b = s.c_str() + i;
        char* e = nullptr;
        t.type = Token::number;
        t.value = std::strtod(b, &e);
        t.text.assign(b, std::size_t(e - b));
        advance(e - b);
      } else if (std::isalpha(ch) || ch == '_') {
        std::size_t j = i;
        while (j < s.size() && (std::isalnum((unsigned char)s[j]) || s[j] == '_')) ++j;
        t.type = Token::ident;
        t.text = s.substr(i, j - i);
        advance(j - i);
      } else if (s.compare(i, 2, "\xCE\xB8") == 0) {  // the Greek theta
        t.type = Token::ident;
        t.text = "theta";
        advance(2);
      } else if (std::string("+-*/^(),").find(ch) != std::string::npos) {
        t.type = Token::op;
        t.text = std::string(1, ch);
        advance(1);
      } else {
        t.text = std::string(1, ch);
        fail(t, "unexpected character '" + t.text + "'");
      }
      toks_.push_back(t);
    }
    Token e;
    e.type = Token::end;
    e.text = "end of input";
    e.line = line;
    e.column = col;
    toks_.push_back(e);
  }

  const Token& peek() const { return toks_[pos_]; }
  bool is_op(const char* o) const { return peek().type == Token::op && peek().text == o; }
  const Token& take() { return toks_[pos_++]; }
  void expect(const char* o) {
    if (!is_op(o)) fail(peek(), std::string("expected '") + o + "' but found '" + peek().text + "'");
    ++pos_;
  }

  Expr expr() {
    Expr e = term();
    while (is_op("+") || is_op("-")) {
      bool plus = take().text == "+";
      Expr r = term();
      e = make(plus ? K::add : K::sub, {e, r});
    }
    return e;
  }
  Expr term() {
    Expr e = unary();
    while (is_op("*") || is_op("/")) {
      bool times = take().text == "*";
      Expr r = unary();
      e = make(times ? K::mul : K::div, {e, r});
    }
    return e;
  }
  Expr unary() {
    if (is_op("-")) {
      ++pos_;
      Expr a = unary();
      return is_const(a) ? constant(-a->value) : make(K::neg, {a});
    }
    if (is_op("+")) {
      ++pos_;
      return unary();
    }
    return power();
  }
  Expr power() {
    Expr b = primary();
    if (is_op("^")) {
      ++pos_;
      return make(K::pow, {b, unary()});
    }
    return b;
  }
  Expr primary() {
    const Token& t = peek();
    if (t.type == Token::number) {
      ++pos_;
      return constant(t.value);
    }
    if (is_op("(")) {
      ++pos_;
      Expr e = expr();
      expect(")");
      return e;
    }
    if (t.type == Token::ident) {
      Token id = take();
      if (is_op("(")) return call_of(id);
      if (id.text == "pi") return constant(kPi);
      if (!ids_.count(id.text)) fail(id, "'" + id.text + "'", ParseErrorKind::unknown_identifier);
      return variable(id.text);
    }
    fail(t, t.type == Token::end ? "unexpected end of input" : "unexpected '" + t.text + "'");
  }
  Expr call_of(const Token& id) {
    std::string name = id.text;
    int order = 0;
    if (name.rfind("smoothstep_d", 0) == 0 && name.size() > 12) {
      std::string digits = name.substr(12);
      bool ok = digits.find_first_not_of("0123456789") == std::string::npos && digits.size() < 4;
      if (ok) {
        order = std::stoi(digits);
        name = "smoothstep";
      }
    }
    auto it = function_arity().find(name);
    if (it == function_arity().end()) fail(id, "function '" + id.text + "'", ParseErrorKind::unknown_identifier);
    expect("(");
    std::vector<Expr> args;
    if (!is_op(")")) {
      args.push_back(expr());
      while (is_op(",")) {
        ++pos_;
        args.push_back(expr());
      }
    }
    expect(")");
    if (int(args.size()) != it->second)
      fail(id, id.text + " takes " + std::to_string(it->second) + " argument(s), got " + std::to_string(args.size()),
           ParseErrorKind::arity);
    return make(K::call, std::move(args), name, order);
  }

  const std::set<std::string>& ids_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", std::abs(v));
  std::string s = buf;
  return v < 0 || std::signbit(v) ? "(-" + s + ")" : s;
}

}  // namespace

Expr parse_expression(const std::string& source, const std::set<std::string>& identifiers) {
  return Parser(source, identifiers).parse();
}

// ---------------------------------------------------------------- printing, comparison

std::string to_string(const Expr& e) {
  auto bin = [&](const char* op) { return "(" + to_string(e->args[0]) + " " + op + " " + to_string(e->args[1]) + ")"; };
  switch (e->kind) {
    case K::constant: return number(e->value);
    case K::variable: return e->name;
    case K::add: return bin("+");
    case K::sub: return bin("-");
    case K::mul: return bin("*");
    case K::div: return bin("/");
    case K::pow: return bin("^");
    case K::neg: return "(-" + to_string(e->args[0]) + ")";
    case K::call: {
      std::string s = e->name + (e->order ? "_d" + std::to_string(e->order) : "") + "(";
      for (std::size_t i = 0; i < e->args.size(); ++i) s += (i ? ", " : "") + to_string(e->args[i]);
      return s + ")";
    }
  }
  return "?";
}

bool equal(const Expr& a, const Expr& b) {
  if (a->kind != b->kind || a->args.size() != b->args.size()) return false;
  if (a->kind == K::constant && a->value != b->value) return false;
  if (a->name != b->name || a->order != b->order) return false;
  for (std::size_t i = 0; i < a->args.size(); ++i)
    if (!equal(a->args[i], b->args[i])) return false;
  return true;
}

bool depends_on(const Expr& e, const std::string& var) {
  if (e->kind == K::variable) return e->name == var;
  for (auto& a : e->args)
    if (depends_on(a, var)) return true;
  return false;
}

std::set<std::string> free_variables(const Expr& e) {
  std::set<std::string> s;
  if (e->kind == K::variable) s.insert(e->name);
  for (auto& a : e->args) s.merge(free_variables(a));
  return s;
}

// ---------------------------------------------------------------- calculus

Expr derivative(const Expr& e, const std::string& v) {
  if (!depends_on(e, v)) return constant(0.0);
  const auto& a = e->args;
  auto d = [&](std::size_t i) { return derivative(a[i], v); };
  switch (e->kind) {
    case K::constant: return constant(0.0);
    case K::variable: return constant(1.0);
    case K::add: return add(d(0), d(1));
    case K::sub: return sub(d(0), d(1));
    case K::neg: return neg(d(0));
    case K::mul: return add(mul(d(0), a[1]), mul(a[0], d(1)));
    case K::div: return div(sub(mul(d(0), a[1]), mul(a[0], d(1))), pow(a[1], constant(2.0)));
    case K::pow:
      if (!depends_on(a[1], v)) return mul(mul(a[1], pow(a[0], sub(a[1], constant(1.0)))), d(0));
      return mul(e, add(mul(d(1), fn("log", {a[0]})), div(mul(a[1], d(0)), a[0])));
    case K::call: {
      const std::string& f = e->name;
      if (f == "bump") return derivative(expand_bump(e), v);
      Expr u = a[0], du = d(0);
      Expr outer;
      if (f == "sin") outer = fn("cos", {u});
      else if (f == "cos") outer = neg(fn("sin", {u}));
      else if (f == "exp") outer = e;
      else if (f == "log") return div(du, u);
      else if (f == "sqrt") return div(du, mul(constant(2.0), e));
      else if (f == "tanh") outer = sub(constant(1.0), pow(e, constant(2.0)));
      else if (f == "smoothstep") outer = fn("smoothstep", {u}, e->order + 1);
      else throw ConfigurationError("cannot differentiate " + f);
      return mul(outer, du);
    }
  }
  return constant(0.0);
}

Expr substitute(const Expr& e, const std::map<std::string, double>& values) {
  if (e->kind == K::constant) return e;
  if (e->kind == K::variable) {
    auto it = values.find(e->name);
    return it == values.end() ? e : constant(it->second);
  }
  std::vector<Expr> a;
  for (auto& x : e->args) a.push_back(substitute(x, values));
  switch (e->kind) {
    case K::add: return add(a[0], a[1]);
    case K::sub: return sub(a[0], a[1]);
    case K::mul: return mul(a[0], a[1]);
    case K::div: return div(a[0], a[1]);
    case K::pow: return pow(a[0], a[1]);
    case K::neg: return neg(a[0]);
    default: return fn(e->name, a, e->order);
  }
}

double evaluate(const Expr& e, const std::map<std::string, double>& env) {
  std::vector<std::string> names;
  std::vector<double> vals;
  for (auto& [k, v] : env) names.push_back(k), vals.push_back(v);
  for (auto& f : free_variables(e))
    if (!env.count(f)) throw ConfigurationError("unbound variable '" + f + "'");
  return Compiled(e, names)(vals.data());
}

// ---------------------------------------------------------------- stack machine

struct Compiled::Op {
  K kind;
  double value = 0.0;
  int slot = -1;
  int fcode = 0;
  int order = 0;
  int nargs = 0;
};

Compiled::Compiled(const Expr& e, const std::vector<std::string>& slots) : expr_(e) {
  auto prog = std::make_shared<std::vector<Op>>();
  std::function<void(const Expr&)> emit = [&](const Expr& n) {
    for (auto& a : n->args) emit(a);
    Op op{n->kind, n->value, -1, n->kind == K::call ? function_code(n->name) : 0, n->order, int(n->args.size())};
    if (n->kind == K::variable) {
      for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i] == n->name) op.slot = int(i);
      if (op.slot < 0) throw ConfigurationError("unbound variable '" + n->name + "'");
    }
    prog->push_back(op);
  };
  emit(e);
  prog_ = prog;
}

double Compiled::operator()(const double* x) const {
  double stack[64] = {};
  std::vector<double> heap;
  double* s = stack;
  if (prog_->size() > 64) {
    heap.resize(prog_->size());
    s = heap.data();
  }
  int top = 0;
  for (const Op& op : *prog_) {
    switch (op.kind) {
      case K::constant: s[top++] = op.value; break;
      case K::variable: s[top++] = x[op.slot]; break;
      case K::add: --top, s[top - 1] += s[top]; break;
      case K::sub: --top, s[top - 1] -= s[top]; break;
      case K::mul: --top, s[top - 1] *= s[top]; break;
      case K::div: --top, s[top - 1] /= s[top]; break;
      case K::pow: --top, s[top - 1] = std::pow(s[top - 1], s[top]); break;
      case K::neg: s[top - 1] = -s[top - 1]; break;
      case K::call:
        top -= op.nargs;
        s[top] = call(op.fcode, op.order, s + top);
        ++top;
        break;
    }
  }
  return s[0];
}

}  // namespace hoferlab::cli
