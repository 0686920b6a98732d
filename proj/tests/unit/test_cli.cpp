#include "doctest.h"

#include "hoferlab/cli/expression.hpp"
#include "hoferlab/cli/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace hoferlab;
using namespace hoferlab::cli;

namespace {

const std::set<std::string> kVars{"t", "x1", "x2", "z", "theta", "K"};

Expr parse(const std::string& s) { return parse_expression(s, kVars); }

ParseError parse_error(const std::string& s) {
  try {
    parse(s);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("no error for " << s);
  return ParseError(ParseErrorKind::syntax, 0, 0, "");
}

// Random expressions over x1, x2 that stay finite near (0.3, 0.7).
Expr random_expr(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 12);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  switch (pick(rng)) {
    case 0: return parse(std::to_string(std::round(c(rng) * 100) / 100));
    case 1: return variable(rng() % 2 ? "x1" : "x2");
    default: break;
  }
  auto a = to_string(random_expr(rng, depth - 1));
  auto b = to_string(random_expr(rng, depth - 1));
  static const std::vector<std::string> forms{
      "(A + B)", "(A - B)", "(A * B)", "(A / (2 + (B)^2))", "(1.5 + sin(A))^2", "cos(A)", "exp(0.3 * A)",
      "sqrt(1 + (A)^2)", "tanh(A)", "smoothstep(0.5 + 0.2 * A)", "bump(A, 0.1, 3)", "-(A)"};
  std::string f = forms[rng() % forms.size()];
  for (std::size_t p; (p = f.find('A')) != std::string::npos;) f.replace(p, 1, a);
  for (std::size_t p; (p = f.find('B')) != std::string::npos;) f.replace(p, 1, b);
  return parse(f);
}

Json length_config() {
  return Json::parse(R"J({"schema": "hoferlab.scenario/1", "name": "rot", "seed": 7,
    "domain": {"kind": "sphere"}, "hamiltonian": {"expression": "(1 + t) * z"}, "time_intervals": 16})J");
}

}  // namespace

TEST_CASE("parsing examples") {
  auto z = parse("z");
  CHECK(z->kind == Node::Kind::variable);
  CHECK(z->name == "z");
  auto e = parse("0.5*K*z^2");
  CHECK(evaluate(e, {{"K", 4.0}, {"z", 1.0}}) == 2.0);
  // precedence: -3^2 = -9, 2^3^2 = 2^9, unary minus in an exponent
  CHECK(evaluate(parse("-3^2"), {}) == -9.0);
  CHECK(evaluate(parse("2^3^2"), {}) == 512.0);
  CHECK(evaluate(parse("2^-1 + 6/3/2"), {}) == 1.5);
  CHECK(evaluate(parse("pi"), {}) == kPi);
  CHECK(evaluate(parse("\xCE\xB8 + 1"), {{"theta", 1.0}}) == 2.0);
  CHECK(evaluate(parse("bump(x1, 0, 2)"), {{"x1", 1.0}}) == doctest::Approx(1.0 - 0.103515625));
}

TEST_CASE("parse diagnostics carry positions") {
  auto a = parse_error("sin(");
  CHECK(a.kind() == ParseErrorKind::syntax);
  CHECK(a.line() == 1);
  CHECK(a.column() == 5);
  auto b = parse_error("z + foo*2");
  CHECK(b.kind() == ParseErrorKind::unknown_identifier);
  CHECK(b.column() == 5);
  auto c = parse_error("1 +\n  bump(z, 1)");
  CHECK(c.kind() == ParseErrorKind::arity);
  CHECK(c.line() == 2);
  CHECK(c.column() == 3);
  auto d = parse_error("(z + 1");
  CHECK(d.column() == 7);
  auto f = parse_error("z $ 2");
  CHECK(f.column() == 3);
  CHECK(parse_error("sinh(z)").kind() == ParseErrorKind::unknown_identifier);
  CHECK(parse_error("z z").kind() == ParseErrorKind::syntax);
}

TEST_CASE("pretty printing round-trips") {
  for (const char* s : {"z", "-3^2", "(-3)^2", "0.5*K*z^2", "sin(x1)*cos(x2) - exp(-t)/sqrt(2)",
                        "smoothstep_d2(z) + bump(x1, -0.25, 1e-3)", "tanh(x1)^x2", "1e300 * 0.1"}) {
    auto e = parse(s);
    auto again = parse(to_string(e));
    CHECK_MESSAGE(equal(e, again), s << " -> " << to_string(e));
  }
  std::mt19937 rng(11);
  for (int i = 0; i < 200; ++i) {
    auto e = random_expr(rng, 4);
    CHECK(equal(e, parse(to_string(e))));
  }
}

TEST_CASE("symbolic derivatives match finite differences") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    auto e = random_expr(rng, 3);
    auto d = derivative(e, "x1");
    for (int k = 0; k < 3; ++k) {
      double x1 = u(rng), x2 = u(rng);
      auto f = [&](double a) { return evaluate(e, {{"x1", a}, {"x2", x2}}); };
      double exact = evaluate(d, {{"x1", x1}, {"x2", x2}});
      if (!std::isfinite(exact) || std::abs(exact) > 1e6) continue;
      // O(h^2): the error falls by about 4 when h halves
      double h = 1e-3;
      double e1 = std::abs((f(x1 + h) - f(x1 - h)) / (2 * h) - exact);
      double e2 = std::abs((f(x1 + h / 2) - f(x1 - h / 2)) / h - exact);
      double scale = std::max(1.0, std::abs(exact));
      CHECK_MESSAGE(e1 <= 1e-4 * scale + 1e-9 * scale, to_string(e));
      if (e1 > 1e-8 * scale) CHECK_MESSAGE(e2 < 0.35 * e1, to_string(e));
      ++checked;
    }
  }
  CHECK(checked > 600);
  // every construct once
  for (const char* s : {"x1^x2", "x2/x1", "log(x1)", "sqrt(x1)", "smoothstep_d3(x1)", "bump(x1, 0.2, 0.5)"}) {
    auto e = parse(s);
    auto d = derivative(e, "x1");
    double x1 = 0.41, x2 = 1.3, h = 1e-5;
    double fd = (evaluate(e, {{"x1", x1 + h}, {"x2", x2}}) - evaluate(e, {{"x1", x1 - h}, {"x2", x2}})) / (2 * h);
    CHECK_MESSAGE(evaluate(d, {{"x1", x1}, {"x2", x2}}) == doctest::Approx(fd).epsilon(1e-7), s);
  }
  CHECK(to_string(derivative(parse("3*z + K"), "z")) == "3");
}

TEST_CASE("expression Hamiltonians") {
  auto d = core::PhaseDomain::euclidean(2);
  auto H = expression_hamiltonian("a*(x1^2 + x2^2)/2 + sin(t*x1)", d, {{"a", 3.0}});
  Vec x = (Vec(2) << 0.3, -0.2).finished();
  CHECK((H.gradient(0.4, x) - H.fd_gradient(0.4, x)).norm() < 1e-7);
  CHECK(H.time_derivative(0.4, x) == doctest::Approx(0.3 * std::cos(0.12)));
  CHECK_FALSE(H.autonomous());
  auto S = expression_hamiltonian("z^2", core::PhaseDomain::sphere());
  CHECK(S.autonomous());
  CHECK(S.pole_regular());
  CHECK(S.zonal()(0.0, 0.5) == 1.0);
  CHECK_THROWS_AS(expression_hamiltonian("x3", d), ParseError);
  auto p = expression_profile("K*z^3", {{"K", 2.0}});
  CHECK(p.d2h(0.5) == doctest::Approx(6.0));
}

TEST_CASE("scenario reports are deterministic") {
  auto a = run_scenario("length", length_config());
  auto b = run_scenario("length", length_config());
  REQUIRE(a.exit_code == exit_ok);
  CHECK(a.report["values"]["length"].get<double>() == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(a.report.dump() == b.report.dump());
  CHECK(a.csv == b.csv);
  CHECK(a.csv.rfind("t,totvar\n", 0) == 0);

  auto dir = std::filesystem::temp_directory_path() / "hoferlab_cli_test";
  std::filesystem::remove_all(dir);
  RunOptions o;
  o.out_dir = dir.string();
  auto w1 = run_scenario("length", length_config(), o);
  auto read = [](const std::string& f) {
    std::ifstream in(f);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  std::string first = read(w1.written.at(0));
  run_scenario("length", length_config(), o);
  CHECK(read(w1.written.at(0)) == first);
  CHECK(w1.written.size() == 2);
}

TEST_CASE("schema errors are listed together") {
  auto cfg = Json::parse(R"J({"schema": "nope", "name": "x", "seed": 1.5, "colour": 1,
    "hamiltonian": {"expression": "sin(", "negate": 3},
    "sampling": {"grid": "square", "n": 2, "half_width": -1},
    "tolerances": {"tol_ext": 1e-6, "bogus": 1}})J");
  auto out = run_scenario("length", cfg);
  CHECK(out.exit_code == exit_config);
  CHECK(out.errors.size() == 8);
  auto has = [&](const std::string& s) {
    for (auto& e : out.errors)
      if (e.find(s) != std::string::npos) return true;
    return false;
  };
  CHECK(has("/schema"));
  CHECK(has("/seed"));
  CHECK(has("/colour"));
  CHECK(has("/hamiltonian/expression: syntax error at 1:5"));
  CHECK(has("/hamiltonian/negate"));
  CHECK(has("/sampling/n"));
  CHECK(has("/sampling/half_width"));
  CHECK(has("/tolerances/bogus"));
  CHECK(validate("length", length_config()).empty());
  CHECK_FALSE(validate("qform", length_config()).empty());
  auto op = length_config();
  op["operation"] = "qform";
  CHECK(run_scenario("length", op).exit_code == exit_config);
}

TEST_CASE("sphere certificate scenario and K sweep") {
  auto cfg = Json::parse(R"J({"schema": "hoferlab.scenario/1", "name": "cert", "params": {"K": 170},
    "profile": {"expression": "0.5*K*z^2"},
    "parameters": {"sweep": {"param": "K", "values": [10, 60, 120, 170, 250]},
                   "threshold": {"param": "K", "lo": 50, "hi": 200}}})J");
  auto out = run_scenario("sphere-certificate", cfg);
  REQUIRE(out.exit_code == exit_ok);
  CHECK(out.report["verdict"] == "CERTIFIED");
  double est = out.report["values"]["threshold"]["estimate"].get<double>();
  CHECK(est == doctest::Approx(36 * kPi).epsilon(1e-3));
  CHECK(out.csv.rfind("K,c_h,verdict\n10,0,INCONCLUSIVE\n", 0) == 0);
  CHECK(out.csv.find("250,") != std::string::npos);
  // h'(1) = pi lies in 2 pi (Z + 1/2)
  auto bad = Json::parse(R"J({"schema": "hoferlab.scenario/1", "name": "bad", "params": {"K": 3.141592653589793},
    "profile": {"expression": "0.5*K*z^2"}})J");
  auto r = run_scenario("sphere-certificate", bad);
  CHECK(r.exit_code == exit_refusal);
  CHECK(r.report["verdict"] == "REFUSED");
}

TEST_CASE("quadratic form, lemma and sweep scenarios") {
  auto q = Json::parse(R"J({"schema": "hoferlab.scenario/1", "name": "q", "params": {"c": 1},
    "hessian": {"scalar": "2*pi*c"}, "parameters": {"N": 32}})J");
  auto r = run_scenario("qform", q);
  REQUIRE(r.exit_code == exit_ok);
  CHECK(r.report["values"]["index"] == 0);
  CHECK(r.report["values"]["nullity"] == 2);

  auto s = q;
  s["parameters"] = Json::parse(R"J({"sweep": {"param": "c", "values": [0.9, 1.1], "inner": "qform"}})J");
  auto sw = run_scenario("sweep", s);
  REQUIRE(sw.exit_code == exit_ok);
  CHECK(sw.csv.rfind("c,verdict,index,nullity\n0.90000000000000002,COMPUTED,0,0\n", 0) == 0);
  CHECK(sw.report["values"]["runs"][1]["values"]["index"].get<int>() >= 1);

  auto z = Json::parse(R"J({"schema": "hoferlab.scenario/1", "name": "lz", "params": {"a": 1, "b": 0.5},
    "parameters": {"lemma": "z", "loop": {"components": ["a*cos(2*pi*t)", "b*sin(2*pi*t)"]}}})J");
  auto lz = run_scenario("verify-lemma", z);
  REQUIRE(lz.exit_code == exit_ok);
  CHECK(lz.report["verdict"] == "PASS");
  CHECK(lz.report["residuals"]["relative"].get<double>() <= 1e-3);
}

TEST_CASE("command line") {
  auto dir = std::filesystem::temp_directory_path() / "hoferlab_cli_argv";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto cfg = (dir / "len.json").string();
  std::ofstream(cfg) << length_config().dump();
  const std::string out = (dir / "out").string();
  std::vector<const char*> ok{"hoferlab", "length", "--config", cfg.c_str(), "--out-dir", out.c_str(),
                              "--threads", "1", "--tol", "tol_ext=1e-7"};
  CHECK(run_cli(int(ok.size()), ok.data()) == exit_ok);
  CHECK(std::filesystem::exists(dir / "out" / "rot.json"));
  std::vector<const char*> bad_tol{"hoferlab", "length", "--config", cfg.c_str(), "--tol", "nonsense=1"};
  CHECK(run_cli(int(bad_tol.size()), bad_tol.data()) == exit_config);
  std::vector<const char*> no_sub{"hoferlab"};
  CHECK(run_cli(1, no_sub.data()) == exit_config);
  std::ofstream(dir / "broken.json") << "{\"schema\": ";
  auto broken = (dir / "broken.json").string();
  std::vector<const char*> bj{"hoferlab", "length", "--config", broken.c_str()};
  CHECK(run_cli(int(bj.size()), bj.data()) == exit_config);
}
