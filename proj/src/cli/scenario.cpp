#include "hoferlab/cli/scenario.hpp"

#include "hoferlab/core/parallel.hpp"
#include "hoferlab/hofer/extrema.hpp"
#include "hoferlab/hofer/families.hpp"
#include "hoferlab/hofer/path.hpp"
#include "hoferlab/secondvar/secondvar.hpp"
#include "hoferlab/shortening/shortening.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace hoferlab::cli {

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"length",         "geodesic-check",    "lcritical-check",
                                          "stability-check", "qform",             "conjugate-values",
                                          "shorten",         "verify-lemma",      "sphere-certificate",
                                          "sweep"};
  return s;
}

// ---------------------------------------------------------------- expressions as model objects

namespace {

std::vector<std::string> domain_variables(const core::PhaseDomain& d) {
  if (d.is_sphere()) return {"t", "theta", "z"};
  std::vector<std::string> v{"t"};
  for (int i = 1; i <= d.dimension(); ++i) v.push_back("x" + std::to_string(i));
  return v;
}

std::set<std::string> identifiers(const std::vector<std::string>& vars, const std::map<std::string, double>& params) {
  std::set<std::string> s(vars.begin(), vars.end());
  for (auto& [k, v] : params) s.insert(k);
  return s;
}

}  // namespace

core::Hamiltonian expression_hamiltonian(const std::string& source, const core::PhaseDomain& d,
                                         const std::map<std::string, double>& params) {
  const auto vars = domain_variables(d);
  Expr e = substitute(parse_expression(source, identifiers(vars, params)), params);
  const int n = d.dimension();
  Compiled f(e, vars), ft(derivative(e, "t"), vars);
  std::vector<Compiled> g;
  for (int i = 1; i <= n; ++i) g.emplace_back(derivative(e, vars[i]), vars);
  auto pack = [n](double t, const Vec& x, double* a) {
    a[0] = t;
    for (int i = 0; i < n; ++i) a[i + 1] = x(i);
  };
  core::Hamiltonian H(
      d,
      [f, pack, n](double t, const Vec& x) {
        std::vector<double> a(n + 1);
        pack(t, x, a.data());
        return f(a.data());
      },
      [g, pack, n](double t, const Vec& x) {
        std::vector<double> a(n + 1);
        pack(t, x, a.data());
        Vec out(n);
        for (int i = 0; i < n; ++i) out(i) = g[i](a.data());
        return out;
      });
  H = H.with_time_derivative([ft, pack, n](double t, const Vec& x) {
    std::vector<double> a(n + 1);
    pack(t, x, a.data());
    return ft(a.data());
  });
  if (!depends_on(e, "t")) H = H.with_autonomous();
  if (d.is_sphere() && !depends_on(e, "theta")) {
    Compiled dz(derivative(e, "z"), {"t", "z"});
    // a function of z alone: the chart field is a rotation, regular at the poles
    H = H.with_zonal([dz](double t, double z) {
           double a[2] = {t, z};
           return dz(a);
         })
            .with_pole_regular();
  }
  return H;
}

sphere::ProfileFunction expression_profile(const std::string& source, const std::map<std::string, double>& params) {
  Expr e = substitute(parse_expression(source, identifiers({"z"}, params)), params);
  Expr d1 = derivative(e, "z"), d2 = derivative(d1, "z");
  auto wrap = [](Expr x) {
    Compiled c(x, {"z"});
    return std::function<double(double)>([c](double z) { return c(&z); });
  };
  return {wrap(e), wrap(d1), wrap(d2), source};
}

// ---------------------------------------------------------------- config reading

namespace {

std::string fmt(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.17g", v);
  return b;
}

// Reads typed fields, recording every problem instead of stopping at the first.
class Reader {
 public:
  explicit Reader(std::map<std::string, double> params) : params(std::move(params)) {}

  std::vector<std::string> errors;
  std::map<std::string, double> params;

  bool ok() const { return errors.empty(); }
  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  void keys(const Json& j, const std::string& path, const std::set<std::string>& allowed) {
    if (!j.is_object()) return;
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!allowed.count(it.key())) error(path + "/" + it.key(), "unknown field");
  }

  const Json* object(const Json& j, const std::string& path, const char* key, bool required) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) error(path + "/" + key, "required object is missing");
      return nullptr;
    }
    const Json& c = j.at(key);
    if (!c.is_object()) {
      error(path + "/" + key, "must be an object");
      return nullptr;
    }
    return &c;
  }

  // A number, or a string holding a constant expression over the params.
  double value(const Json& v, const std::string& path) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
      try {
        Expr e = substitute(parse_expression(v.get<std::string>(), identifiers({}, params)), params);
        if (e->kind == Node::Kind::constant) return e->value;
        error(path, "expression is not constant");
      } catch (const ParseError& p) {
        error(path, p.what());
      }
      return 0.0;
    }
    error(path, "must be a number or a constant expression");
    return 0.0;
  }

  double number(const Json& j, const std::string& path, const char* key, std::optional<double> def = {},
                std::optional<double> lo = {}, bool strict = false) {
    const std::string p = path + "/" + key;
    if (!j.is_object() || !j.contains(key)) {
      if (!def) error(p, "required number is missing");
      return def.value_or(0.0);
    }
    double v = value(j.at(key), p);
    if (lo && (strict ? !(v > *lo) : !(v >= *lo)))
      error(p, "must be " + std::string(strict ? "> " : ">= ") + fmt(*lo));
    return v;
  }

  int integer(const Json& j, const std::string& path, const char* key, std::optional<int> def = {},
              int lo = std::numeric_limits<int>::min()) {
    const std::string p = path + "/" + key;
    if (!j.is_object() || !j.contains(key)) {
      if (!def) error(p, "required integer is missing");
      return def.value_or(0);
    }
    const Json& v = j.at(key);
    if (!v.is_number_integer()) {
      error(p, "must be an integer");
      return def.value_or(0);
    }
    int x = v.get<int>();
    if (x < lo) error(p, "must be >= " + std::to_string(lo));
    return x;
  }

  bool boolean(const Json& j, const std::string& path, const char* key, bool def) {
    if (!j.is_object() || !j.contains(key)) return def;
    if (!j.at(key).is_boolean()) {
      error(path + "/" + key, "must be true or false");
      return def;
    }
    return j.at(key).get<bool>();
  }

  std::string string(const Json& j, const std::string& path, const char* key, std::optional<std::string> def,
                     const std::vector<std::string>& allowed = {}) {
    const std::string p = path + "/" + key;
    if (!j.is_object() || !j.contains(key)) {
      if (!def) error(p, "required string is missing");
      return def.value_or("");
    }
    if (!j.at(key).is_string()) {
      error(p, "must be a string");
      return def.value_or("");
    }
    std::string s = j.at(key).get<std::string>();
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string opts;
      for (auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
      error(p, "'" + s + "' is not one of {" + opts + "}");
    }
    return s;
  }

  std::vector<double> numbers(const Json& j, const std::string& path, const char* key,
                              std::optional<std::vector<double>> def = {}, int size = -1) {
    const std::string p = path + "/" + key;
    if (!j.is_object() || !j.contains(key)) {
      if (!def) error(p, "required array is missing");
      return def.value_or(std::vector<double>{});
    }
    const Json& a = j.at(key);
    if (!a.is_array()) {
      error(p, "must be an array");
      return def.value_or(std::vector<double>{});
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(value(a[i], p + "/" + std::to_string(i)));
    if (size >= 0 && int(out.size()) != size) error(p, "must have " + std::to_string(size) + " entries");
    return out;
  }

  Vec vec(const Json& j, const std::string& path, const char* key, std::optional<Vec> def, int size) {
    std::optional<std::vector<double>> d;
    if (def) d = std::vector<double>(def->data(), def->data() + def->size());
    auto v = numbers(j, path, key, d, size);
    if (int(v.size()) != size) return def.value_or(Vec::Zero(size));
    return Eigen::Map<Vec>(v.data(), size);
  }

  // Parses to check identifiers and syntax; the text is returned for later use.
  std::optional<std::string> expression(const Json& j, const std::string& path, const char* key,
                                        const std::vector<std::string>& vars, bool required = true) {
    const std::string p = path + "/" + key;
    if (!j.is_object() || !j.contains(key)) {
      if (required) error(p, "required expression is missing");
      return std::nullopt;
    }
    if (!j.at(key).is_string()) {
      error(p, "must be an expression string");
      return std::nullopt;
    }
    std::string s = j.at(key).get<std::string>();
    try {
      parse_expression(s, identifiers(vars, params));
    } catch (const ParseError& e) {
      error(p, e.what());
      return std::nullopt;
    }
    return s;
  }
};

std::map<std::string, double> read_params(const Json& cfg, std::vector<std::string>& errors) {
  std::map<std::string, double> out;
  if (!cfg.contains("params")) return out;
  const Json& p = cfg.at("params");
  if (!p.is_object()) {
    errors.push_back("/params: must be an object of numbers");
    return out;
  }
  static const std::set<std::string> reserved{"t", "theta", "z", "pi"};
  for (auto it = p.begin(); it != p.end(); ++it) {
    const std::string& k = it.key();
    bool bad_name = reserved.count(k) || (k.size() > 1 && k[0] == 'x' &&
                                          k.find_first_not_of("0123456789", 1) == std::string::npos);
    if (bad_name) errors.push_back("/params/" + k + ": name is reserved for a variable");
    else if (!it.value().is_number()) errors.push_back("/params/" + k + ": must be a number");
    else out[k] = it.value().get<double>();
  }
  return out;
}

// ---------------------------------------------------------------- results

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::string str() const {
    if (header.empty()) return {};
    std::string s;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + r[i];
      s += "\n";
    };
    line(header);
    for (auto& r : rows) line(r);
    return s;
  }
};

struct Result {
  Json values = Json::object();
  Json residuals = Json::object();
  Json tolerances = Json::object();
  std::string verdict = "COMPUTED";
  Json headline = Json::object();  // flat scalars for sweep tables
  Table table;
};

using Task = std::function<Result()>;

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

// ---------------------------------------------------------------- model objects from the config

struct Model {
  core::PhaseDomain domain;
  std::optional<core::Hamiltonian> H;
  std::optional<hofer::IsotopyPath> path;
};

core::PhaseDomain read_domain(Reader& r, const Json& cfg, std::optional<core::PhaseDomain> implied) {
  const Json* d = r.object(cfg, "", "domain", false);
  if (!d) return implied.value_or(core::PhaseDomain::euclidean(2));
  r.keys(*d, "/domain", {"kind", "dimension"});
  std::string kind = r.string(*d, "/domain", "kind", std::nullopt, {"euclidean", "sphere"});
  core::PhaseDomain out = core::PhaseDomain::euclidean(2);
  if (kind == "sphere") {
    if (d->contains("dimension") && r.integer(*d, "/domain", "dimension", 2) != 2)
      r.error("/domain/dimension", "the sphere is 2-dimensional");
    out = core::PhaseDomain::sphere();
  } else if (kind == "euclidean") {
    int dim = r.integer(*d, "/domain", "dimension", 2, 2);
    if (dim % 2) r.error("/domain/dimension", "must be even");
    else if (dim >= 2) out = core::PhaseDomain::euclidean(dim);
  }
  if (implied && !(*implied == out)) r.error("/domain", "does not match the builtin Hamiltonian's domain");
  return out;
}

std::optional<core::Hamiltonian> read_hamiltonian(Reader& r, const Json& cfg, core::PhaseDomain& domain) {
  const Json* h = r.object(cfg, "", "hamiltonian", true);
  if (!h) {
    domain = read_domain(r, cfg, std::nullopt);
    return std::nullopt;
  }
  const std::string p = "/hamiltonian";
  bool has_expr = h->contains("expression"), has_builtin = h->contains("builtin");
  if (has_expr == has_builtin) {
    r.error(p, "give exactly one of 'expression' or 'builtin'");
    domain = read_domain(r, cfg, std::nullopt);
    return std::nullopt;
  }
  const bool negate = r.boolean(*h, p, "negate", false);
  std::optional<core::Hamiltonian> H;
  if (has_expr) {
    r.keys(*h, p, {"expression", "negate"});
    domain = read_domain(r, cfg, std::nullopt);
    auto src = r.expression(*h, p, "expression", domain_variables(domain));
    if (src) H = expression_hamiltonian(*src, domain, r.params);
  } else {
    std::string b = r.string(*h, p, "builtin", std::nullopt,
                             {"sphere_height", "two_bump", "plateau_family", "saturated_well", "gaussian_well"});
    if (b == "sphere_height") {
      r.keys(*h, p, {"builtin", "negate"});
      domain = read_domain(r, cfg, core::PhaseDomain::sphere());
      H = hofer::sphere_height();
    } else if (b == "two_bump") {
      r.keys(*h, p, {"builtin", "negate", "R", "switch_time", "width"});
      domain = read_domain(r, cfg, core::PhaseDomain::euclidean(2));
      hofer::TwoBumpFamily f;
      f.R = r.number(*h, p, "R", f.R, 0.0, true);
      f.switch_time = r.number(*h, p, "switch_time", f.switch_time);
      f.width = r.number(*h, p, "width", f.width, 0.0, true);
      H = f.hamiltonian();
    } else if (b == "plateau_family") {
      r.keys(*h, p, {"builtin", "negate", "plateau_a", "plateau_b", "ramp", "R"});
      domain = read_domain(r, cfg, core::PhaseDomain::euclidean(2));
      hofer::PlateauFamily f;
      f.plateau_a = r.number(*h, p, "plateau_a", f.plateau_a);
      f.plateau_b = r.number(*h, p, "plateau_b", f.plateau_b);
      f.ramp = r.number(*h, p, "ramp", f.ramp, 0.0, true);
      f.R = r.number(*h, p, "R", f.R, 0.0, true);
      H = f.hamiltonian();
    } else if (b == "saturated_well") {
      r.keys(*h, p, {"builtin", "negate", "s1", "s2", "slope"});
      domain = read_domain(r, cfg, core::PhaseDomain::euclidean(2));
      double s1 = r.number(*h, p, "s1", 0.25, 0.0, true);
      double s2 = r.number(*h, p, "s2", 0.5, 0.0, true);
      if (s2 <= s1) r.error(p + "/s2", "must exceed s1");
      H = hofer::saturated_well(s1, s2, r.number(*h, p, "slope", kTwoPi));
    } else if (b == "gaussian_well") {
      r.keys(*h, p, {"builtin", "negate", "C", "r0"});
      domain = read_domain(r, cfg, core::PhaseDomain::euclidean(2));
      H = hofer::gaussian_well(r.number(*h, p, "C", 1.0), r.number(*h, p, "r0", 0.06, 0.0, true));
    } else {
      domain = read_domain(r, cfg, std::nullopt);
    }
  }
  if (H && negate) {
    auto G = *H;
    H = core::Hamiltonian(G.domain(), [G](double t, const Vec& x) { return -G.value(t, x); },
                          [G](double t, const Vec& x) { return Vec(-G.gradient(t, x)); })
            .with_autonomous(G.autonomous())
            .with_pole_regular(G.pole_regular());
  }
  return H;
}

hofer::Sampling read_sampling(Reader& r, const Json& cfg, const core::PhaseDomain& d) {
  const Json* s = r.object(cfg, "", "sampling", false);
  const int dim = d.dimension();
  if (!s) {
    if (d.is_sphere()) return hofer::Sampling::single(hofer::SampleGrid::sphere(32, 33));
    if (dim == 2) return hofer::Sampling::single(hofer::SampleGrid::square(2.0, 41, Vec::Zero(2)));
    return hofer::Sampling::single(
        hofer::SampleGrid::box(Vec::Constant(dim, -2.0), Vec::Constant(dim, 2.0), std::vector<int>(dim, 9)));
  }
  const std::string p = "/sampling";
  std::string g = r.string(*s, p, "grid", std::nullopt, {"square", "box", "sphere"});
  hofer::Sampling out;
  if (g == "sphere") {
    r.keys(*s, p, {"grid", "n_theta", "n_z", "refine"});
    if (!d.is_sphere()) r.error(p + "/grid", "sphere grid on a Euclidean domain");
    out = hofer::Sampling::single(hofer::SampleGrid::sphere(r.integer(*s, p, "n_theta", 32, 4), r.integer(*s, p, "n_z", 33, 3)));
  } else if (g == "square") {
    r.keys(*s, p, {"grid", "half_width", "n", "center", "refine"});
    if (d.is_sphere() || dim != 2) r.error(p + "/grid", "square grids need R^2");
    double hw = r.number(*s, p, "half_width", 2.0, 0.0, true);
    int n = r.integer(*s, p, "n", 41, 3);
    Vec c = r.vec(*s, p, "center", Vec::Zero(2), 2);
    if (r.ok()) out = hofer::Sampling::single(hofer::SampleGrid::square(hw, n, c));
  } else if (g == "box") {
    r.keys(*s, p, {"grid", "lo", "hi", "n", "refine"});
    if (d.is_sphere()) r.error(p + "/grid", "box grids need R^2n");
    Vec lo = r.vec(*s, p, "lo", std::nullopt, dim), hi = r.vec(*s, p, "hi", std::nullopt, dim);
    std::vector<int> n;
    if (s->contains("n") && s->at("n").is_array())
      for (auto& v : s->at("n")) n.push_back(v.is_number_integer() ? v.get<int>() : 0);
    if (int(n.size()) != dim || *std::min_element(n.begin(), n.end()) < 2)
      r.error(p + "/n", "must list " + std::to_string(dim) + " integers >= 2");
    if (r.ok()) out = hofer::Sampling::single(hofer::SampleGrid::box(lo, hi, n));
  }
  out.refine = r.boolean(*s, p, "refine", true);
  return out;
}

Model read_path(Reader& r, const Json& cfg) {
  Model m;
  m.H = read_hamiltonian(r, cfg, m.domain);
  auto s = read_sampling(r, cfg, m.domain);
  int n = r.integer(cfg, "", "time_intervals", 32, 2);
  if (n % 2) r.error("/time_intervals", "must be even (Simpson weights)");
  std::string q = r.string(cfg, "", "time_quadrature", "simpson", {"simpson", "trapezoid"});
  if (m.H) {
    hofer::IsotopyPath p;
    p.H = *m.H;
    p.sampling = s;
    p.grid = core::TimeGrid::uniform(std::max(2, n));
    p.quadrature = q == "trapezoid" ? hofer::TimeQuadrature::trapezoid : hofer::TimeQuadrature::simpson;
    m.path = p;
  }
  return m;
}

std::optional<linflow::HessianPath> read_hessian(Reader& r, const Json& cfg, int seed) {
  const Json* h = r.object(cfg, "", "hessian", true);
  if (!h) return std::nullopt;
  const std::string p = "/hessian";
  r.keys(*h, p, {"scalar", "dim", "matrix", "random", "minimum", "scale", "floor"});
  const bool minimum = r.boolean(*h, p, "minimum", true);
  int forms = int(h->contains("scalar")) + int(h->contains("matrix")) + int(h->contains("random"));
  if (forms != 1) {
    r.error(p, "give exactly one of 'scalar', 'matrix' or 'random'");
    return std::nullopt;
  }
  if (h->contains("scalar")) {
    int dim = r.integer(*h, p, "dim", 2, 2);
    if (dim % 2) r.error(p + "/dim", "must be even");
    auto B = linflow::HessianPath::scalar(r.number(*h, p, "scalar"), std::max(2, dim - dim % 2));
    B.minimum = minimum;
    return B;
  }
  if (h->contains("random")) {
    if (!r.boolean(*h, p, "random", false)) r.error(p + "/random", "must be true when present");
    std::mt19937 rng(static_cast<unsigned>(seed));
    auto B = linflow::random_positive_path(rng, r.number(*h, p, "scale", 4 * kPi, 0.0, true),
                                           r.number(*h, p, "floor", 0.5, 0.0, true));
    B.minimum = minimum;
    return B;
  }
  const Json& m = h->at("matrix");
  const int n = m.is_array() ? int(m.size()) : 0;
  if (n < 2 || n % 2) {
    r.error(p + "/matrix", "must be a square array of even size >= 2");
    return std::nullopt;
  }
  std::vector<Compiled> entries;
  for (int i = 0; i < n; ++i) {
    const std::string ri = p + "/matrix/" + std::to_string(i);
    if (!m[i].is_array() || int(m[i].size()) != n) {
      r.error(ri, "must have " + std::to_string(n) + " entries");
      continue;
    }
    for (int j = 0; j < n; ++j) {
      const Json& v = m[i][j];
      if (v.is_number()) {
        entries.emplace_back(constant(v.get<double>()), std::vector<std::string>{"t"});
        continue;
      }
      Json holder = {{"e", v}};
      auto src = r.expression(holder, ri, "e", {"t"});
      if (src) entries.emplace_back(substitute(parse_expression(*src, identifiers({"t"}, r.params)), r.params),
                                    std::vector<std::string>{"t"});
    }
  }
  if (int(entries.size()) != n * n) return std::nullopt;
  linflow::HessianPath B;
  B.dim = n;
  B.minimum = minimum;
  B.B = [entries, n](double t) {
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = entries[i * n + j](&t);
    return M;
  };
  if (B.asymmetry() > 1e-12) r.error(p + "/matrix", "must be symmetric");
  return B;
}

// Loop t -> (components) with symbolic derivative.
std::optional<std::pair<shortening::LoopFn, shortening::LoopFn>> read_loop(Reader& r, const Json& j,
                                                                           const std::string& path) {
  const Json* l = r.object(j, path, "loop", true);
  if (!l) return std::nullopt;
  const std::string p = path + "/loop";
  r.keys(*l, p, {"components"});
  if (!l->contains("components") || !l->at("components").is_array() || l->at("components").size() < 2) {
    r.error(p + "/components", "must be an array of at least two expressions in t");
    return std::nullopt;
  }
  std::vector<Compiled> f, df;
  const Json& c = l->at("components");
  for (std::size_t i = 0; i < c.size(); ++i) {
    Json holder = {{"e", c[i]}};
    auto src = r.expression(holder, p + "/components/" + std::to_string(i), "e", {"t"});
    if (!src) return std::nullopt;
    Expr e = substitute(parse_expression(*src, identifiers({"t"}, r.params)), r.params);
    f.emplace_back(e, std::vector<std::string>{"t"});
    df.emplace_back(derivative(e, "t"), std::vector<std::string>{"t"});
  }
  auto make = [](std::vector<Compiled> v) {
    return shortening::LoopFn([v](double t) {
      Vec out(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) out(i) = v[i](&t);
      return out;
    });
  };
  return std::make_pair(make(f), make(df));
}

std::optional<std::string> read_profile(Reader& r, const Json& cfg) {
  const Json* h = r.object(cfg, "", "profile", true);
  if (!h) return std::nullopt;
  r.keys(*h, "/profile", {"expression"});
  return r.expression(*h, "/profile", "expression", {"z"});
}

// Sweep values from {"values": [...]} or {"from", "to", "count"}.
std::vector<double> read_values(Reader& r, const Json& s, const std::string& p) {
  if (s.contains("values")) return r.numbers(s, p, "values");
  double a = r.number(s, p, "from"), b = r.number(s, p, "to");
  int n = r.integer(s, p, "count", std::nullopt, 1);
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return v;
}

// ---------------------------------------------------------------- operations

const Json& params_of(const Json& cfg) {
  static const Json empty = Json::object();
  return cfg.contains("parameters") ? cfg.at("parameters") : empty;
}

Task plan(const std::string& sub, const Json& cfg, Reader& r, int seed, const RunOptions& opt);

Task plan_length(const Json& cfg, Reader& r) {
  r.keys(params_of(cfg), "/parameters", {});
  auto m = read_path(r, cfg);
  if (!m.path) return nullptr;
  auto path = *m.path;
  return [path] {
    auto L = hofer::hofer_length(path);
    Result res;
    res.values["length"] = L.length;
    res.headline["length"] = L.length;
    res.table.header = {"t", "totvar"};
    for (std::size_t i = 0; i < L.t.size(); ++i) res.table.rows.push_back({fmt(L.t[i]), fmt(L.totvar[i])});
    return res;
  };
}

Json fixed_json(const hofer::FixedExtremaReport& f) {
  Json j;
  j["a"] = f.a;
  j["b"] = f.b;
  j["fixed_minima"] = Json::array();
  j["fixed_maxima"] = Json::array();
  for (auto& x : f.fixed_minima) j["fixed_minima"].push_back(vec_json(x));
  for (auto& x : f.fixed_maxima) j["fixed_maxima"].push_back(vec_json(x));
  j["pass"] = f.pass();
  return j;
}

Task plan_geodesic(const Json& cfg, Reader& r, double tol_ext) {
  const Json& P = params_of(cfg);
  r.keys(P, "/parameters", {"windows", "breaks"});
  hofer::WindowSpec w;
  w.count = r.integer(P, "/parameters", "windows", 16, 1);
  if (P.contains("breaks")) w.breaks = r.numbers(P, "/parameters", "breaks");
  auto m = read_path(r, cfg);
  if (!m.path) return nullptr;
  auto path = *m.path;
  return [path, w, tol_ext] {
    auto g = hofer::geodesic_check(path, w, tol_ext);
    Result res;
    res.verdict = g.pass ? "PASS" : "FAIL";
    res.values["windows"] = Json::array();
    res.table.header = {"a", "b", "fixed_min", "fixed_max", "verdict"};
    int passed = 0;
    for (auto& f : g.windows) {
      res.values["windows"].push_back(fixed_json(f));
      res.table.rows.push_back({fmt(f.a), fmt(f.b), f.has_min() ? "1" : "0", f.has_max() ? "1" : "0",
                                f.pass() ? "PASS" : "FAIL"});
      passed += f.pass();
    }
    res.headline["windows_passed"] = passed;
    res.headline["pass"] = g.pass;
    return res;
  };
}

Task plan_lcritical(const Json& cfg, Reader& r, double tol_ext) {
  r.keys(params_of(cfg), "/parameters", {});
  auto m = read_path(r, cfg);
  if (!m.path) return nullptr;
  auto path = *m.path;
  return [path, tol_ext] {
    auto f = hofer::lcritical_check(path, tol_ext);
    Result res;
    res.verdict = f.pass() ? "PASS" : "FAIL";
    res.values = fixed_json(f);
    res.headline["pass"] = f.pass();
    return res;
  };
}

Task plan_stability(const Json& cfg, Reader& r, double tol_ext) {
  const Json& P = params_of(cfg);
  r.keys(P, "/parameters", {"scan"});
  linflow::ClosureOptions co;
  co.scan = r.integer(P, "/parameters", "scan", co.scan, 8);
  auto m = read_path(r, cfg);
  if (!m.path) return nullptr;
  auto path = *m.path;
  return [path, tol_ext, co] {
    auto s = linflow::stability_necessary_check(path, tol_ext, co);
    Result res;
    res.verdict = s.pass ? "PASS" : "FAIL";
    res.values["evidence"] = Json::array();
    for (auto& e : s.evidence) {
      Json j;
      j["extremum"] = e.is_minimum ? "minimum" : "maximum";
      j["point"] = vec_json(e.point);
      j["closed_before_1"] = static_cast<bool>(e.closure);
      if (e.closure) j["closing_time"] = e.closure->t;
      res.values["evidence"].push_back(j);
    }
    res.headline["pass"] = s.pass;
    return res;
  };
}

secondvar::Basis read_basis(Reader& r, const Json& P) {
  return r.string(P, "/parameters", "basis", "legendre", {"legendre", "sine"}) == "sine" ? secondvar::Basis::sine
                                                                                           : secondvar::Basis::legendre;
}

Task plan_qform(const Json& cfg, Reader& r, int seed, double tol_null) {
  const Json& P = params_of(cfg);
  r.keys(P, "/parameters", {"tprime", "N", "basis", "check_refinement"});
  auto B = read_hessian(r, cfg, seed);
  double tp = r.number(P, "/parameters", "tprime", 1.0, 0.0, true);
  secondvar::QFormOptions o;
  o.N = r.integer(P, "/parameters", "N", 64, 4);
  o.basis = read_basis(r, P);
  o.tol_null = tol_null;
  o.check_refinement = r.boolean(P, "/parameters", "check_refinement", true);
  o.vectors = false;
  if (!B) return nullptr;
  return [B = *B, tp, o] {
    auto q = secondvar::q_form_matrix(B, tp, B.minimum ? 1 : -1, o);
    Result res;
    res.values["index"] = q.index;
    res.values["nullity"] = q.nullity;
    res.values["N"] = q.N;
    res.values["smallest"] = q.smallest;
    res.values["refinement_agrees"] = q.refinement_agrees;
    if (q.refined) {
      res.values["refined_index"] = q.refined_index;
      res.values["refined_nullity"] = q.refined_nullity;
    }
    res.tolerances["null"] = o.tol_null;
    res.headline["index"] = q.index;
    res.headline["nullity"] = q.nullity;
    res.table.header = {"k", "eigenvalue"};
    for (std::size_t k = 0; k < q.smallest.size(); ++k) res.table.rows.push_back({std::to_string(k), fmt(q.smallest[k])});
    return res;
  };
}

Task plan_conjugate(const Json& cfg, Reader& r, int seed, double tol_null) {
  const Json& P = params_of(cfg);
  r.keys(P, "/parameters", {"t_max", "scan", "N", "basis"});
  auto B = read_hessian(r, cfg, seed);
  secondvar::ScanOptions o;
  o.t_max = r.number(P, "/parameters", "t_max", 1.0, 0.0, true);
  o.scan = r.integer(P, "/parameters", "scan", 128, 2);
  o.N = r.integer(P, "/parameters", "N", 32, 4);
  o.basis = read_basis(r, P);
  o.tol_null = tol_null;
  if (!B) return nullptr;
  return [B = *B, o]() mutable {
    o.sign = B.minimum ? 1 : -1;
    auto s = secondvar::conjugate_values(B, o);
    Result res;
    res.values["conjugate_values"] = Json::array();
    for (auto& v : s.values)
      res.values["conjugate_values"].push_back(
          {{"t", v.t}, {"nullity", v.nullity}, {"index_before", v.index_before}, {"index_after", v.index_after}});
    res.values["index_monotone"] = s.index_monotone;
    res.values["jumps_match_nullity"] = s.jumps_match_nullity;
    res.headline["count"] = int(s.values.size());
    res.table.header = {"t", "index", "nullity"};
    for (std::size_t i = 0; i < s.t.size(); ++i)
      res.table.rows.push_back({fmt(s.t[i]), std::to_string(s.index[i]), std::to_string(s.nullity[i])});
    return res;
  };
}

Result shortening_result(const shortening::ShorteningResult& s) {
  Result res;
  res.verdict = s.accepted() ? "ACCEPTED" : "REJECTED";
  res.values["kind"] = shortening::to_string(s.plan.kind);
  res.values["original_length"] = s.original_length;
  res.values["new_length"] = s.new_length;
  res.values["margin"] = s.margin;
  res.values["metrics"] = Json(s.metrics);
  res.values["diagnostics"] = s.diagnostics;
  res.values["provenance"] = s.plan.provenance;
  res.residuals["endpoint_discrepancy"] = s.endpoint_discrepancy;
  res.tolerances["endpoint"] = s.endpoint_tolerance;
  res.headline["margin"] = s.margin;
  res.headline["new_length"] = s.new_length;
  res.headline["endpoint_discrepancy"] = s.endpoint_discrepancy;
  res.table.header = {"t", "old_totvar", "new_totvar"};
  for (std::size_t i = 0; i < s.t.size() && i < s.new_totvar.size(); ++i)
    res.table.rows.push_back({fmt(s.t[i]), fmt(s.old_totvar[i]), fmt(s.new_totvar[i])});
  return res;
}

Task plan_shorten(const Json& cfg, Reader& r, double tol_ext, double endpoint_tol) {
  const Json& P = params_of(cfg);
  const std::string pp = "/parameters";
  std::string kind = r.string(P, pp, "kind", std::nullopt, {"no_fixed_max", "no_fixed_min", "sikorav", "scrubbing"});
  auto m = read_path(r, cfg);
  const int dim = m.domain.dimension();
  if (kind == "no_fixed_max" || kind == "no_fixed_min") {
    r.keys(P, pp, {"kind", "times", "nu", "delta_bump", "eps", "depth", "time_base"});
    auto times = r.numbers(P, pp, "times");
    double nu = r.number(P, pp, "nu", std::nullopt, 0.0, true);
    double db = r.number(P, pp, "delta_bump", std::nullopt, 0.0, true);
    double eps = r.number(P, pp, "eps", std::nullopt, 0.0, true);
    shortening::NoFixedOptions o;
    o.depth = r.number(P, pp, "depth", o.depth, 0.0, true);
    o.time_base = r.integer(P, pp, "time_base", o.time_base, 4);
    o.tol_ext = tol_ext;
    o.endpoint_tol = endpoint_tol;
    if (!m.path) return nullptr;
    bool max = kind == "no_fixed_max";
    return [path = *m.path, times, nu, db, eps, o, max] {
      return shortening_result(max ? shortening::shorten_no_fixed_max(path, times, nu, db, eps, o)
                                   : shortening::shorten_no_fixed_min(path, times, nu, db, eps, o));
    };
  }
  if (kind == "sikorav") {
    r.keys(P, pp, {"kind", "c", "translation", "refine", "time_base"});
    double c = r.number(P, pp, "c", std::nullopt, 0.0, true);
    const Json* tj = r.object(P, pp, "translation", true);
    Vec v = Vec::Zero(dim), ctr = Vec::Zero(dim);
    double reach = 0.0;
    if (tj) {
      r.keys(*tj, pp + "/translation", {"v", "center", "reach"});
      v = r.vec(*tj, pp + "/translation", "v", std::nullopt, dim);
      ctr = r.vec(*tj, pp + "/translation", "center", Vec::Zero(dim), dim);
      reach = r.number(*tj, pp + "/translation", "reach", std::nullopt, 0.0, true);
    }
    shortening::SikoravOptions o;
    o.refine = r.integer(P, pp, "refine", o.refine, 1);
    o.time_base = r.integer(P, pp, "time_base", o.time_base, 4);
    o.endpoint_tol = endpoint_tol;
    if (!m.path || !r.ok()) return nullptr;
    return [path = *m.path, c, v, ctr, reach, o] {
      auto tau = shortening::make_translation(v, ctr, reach);
      return shortening_result(shortening::sikorav_shorten(path, c, tau, o));
    };
  }
  if (kind == "scrubbing") {
    r.keys(P, pp, {"kind", "p", "delta", "maximum", "rho", "time_base", "focus_points", "min_samples"});
    Vec p = r.vec(P, pp, "p", Vec::Zero(dim), dim);
    double delta = r.number(P, pp, "delta", std::nullopt, 0.0, true);
    shortening::ScrubbingOptions o;
    o.maximum = r.boolean(P, pp, "maximum", false);
    o.rho = r.number(P, pp, "rho", 0.0, 0.0);
    o.time_base = r.integer(P, pp, "time_base", o.time_base, 4);
    o.focus_points = r.integer(P, pp, "focus_points", o.focus_points, 5);
    o.min_samples = r.integer(P, pp, "min_samples", o.min_samples, 4);
    o.endpoint_tol = endpoint_tol;
    if (!m.path || !r.ok()) return nullptr;
    return [path = *m.path, p, delta, o] {
      auto w = shortening::scrubbing_witness(path, p, o.maximum);
      auto res = shortening_result(shortening::scrubbing_motion(path, p, delta, w, o));
      res.values["lambda"] = w.lambda;
      return res;
    };
  }
  return nullptr;
}

Task plan_lemma(const Json& cfg, Reader& r, int seed, double residual_tol) {
  const Json& P = params_of(cfg);
  const std::string pp = "/parameters";
  std::string lemma = r.string(P, pp, "lemma", std::nullopt, {"z", "lambda"});
  if (lemma == "z") {
    r.keys(P, pp, {"lemma", "loop", "p", "delta", "rho", "n_t", "n_s"});
    auto loop = read_loop(r, P, pp);
    int dim = loop ? int(loop->first(0.0).size()) : 2;
    shortening::TranslationLoop L;
    L.p = r.vec(P, pp, "p", Vec::Zero(dim), dim);
    L.delta = r.number(P, pp, "delta", 0.1, 0.0, true);
    L.rho = r.number(P, pp, "rho", 0.01, 0.0);
    shortening::LemmaZOptions o;
    o.n_t = r.integer(P, pp, "n_t", o.n_t, 2);
    o.n_s = r.integer(P, pp, "n_s", o.n_s, 1);
    if (!loop || !r.ok()) return nullptr;
    L.alpha = loop->first;
    L.alpha_dot = loop->second;
    return [L, o, residual_tol] {
      auto z = shortening::verify_lemma_z(L, o);
      Result res;
      res.verdict = z.residual <= residual_tol ? "PASS" : "FAIL";
      res.values = {{"lemma", "z"}, {"flux", z.flux}, {"generator", z.generator}, {"area", z.area}};
      res.residuals["relative"] = z.residual;
      res.tolerances["residual"] = residual_tol;
      res.headline = {{"flux", z.flux}, {"area", z.area}, {"residual", z.residual}};
      return res;
    };
  }
  if (lemma == "lambda") {
    r.keys(P, pp, {"lemma", "loop", "lambda", "rho", "delta", "n_t", "grid"});
    auto B = read_hessian(r, cfg, seed);
    std::optional<std::pair<shortening::LoopFn, shortening::LoopFn>> loop;
    if (P.contains("loop")) loop = read_loop(r, P, pp);
    std::optional<double> lambda;
    if (P.contains("lambda")) lambda = r.number(P, pp, "lambda", std::nullopt, 0.0, true);
    if (loop.has_value() != lambda.has_value()) r.error(pp, "give both 'loop' and 'lambda', or neither (witness)");
    double rho = r.number(P, pp, "rho", 0.01, 0.0);
    shortening::LemmaLambdaOptions o;
    o.delta = r.number(P, pp, "delta", o.delta, 0.0, true);
    o.n_t = r.integer(P, pp, "n_t", o.n_t, 2);
    o.grid = r.integer(P, pp, "grid", o.grid, 3);
    if (!B || !r.ok()) return nullptr;
    return [B = *B, loop, lambda, rho, o, residual_tol] {
      shortening::LoopFn a, da;
      double lam;
      if (loop) {
        a = loop->first;
        da = loop->second;
        lam = *lambda;
      } else {
        auto w = linflow::lambda_conjugate(B);
        if (!w) throw Refusal("no lambda in (0, 1) closes a trajectory of the Hessian path");
        auto wp = std::make_shared<linflow::LambdaConjugate>(*w);
        a = [wp](double t) { return wp->alpha_at(t); };
        da = [wp](double t) { return wp->alpha_dot_at(t); };
        lam = w->lambda;
      }
      auto l = shortening::verify_lemma_lambda(B, lam, a, da, rho, o);
      Result res;
      res.verdict = l.residual_alpha0 <= residual_tol ? "PASS" : "FAIL";
      res.values = {{"lemma", "lambda"}, {"lambda", lam},           {"lhs", l.lhs},
                    {"rhs_alpha0", l.rhs_alpha0}, {"rhs_alpha", l.rhs_alpha}};
      res.residuals = {{"alpha0", l.residual_alpha0},
                       {"alpha", l.residual_alpha},
                       {"minimizer", l.minimizer_error},
                       {"minimizer_relative", l.minimizer_relative}};
      res.tolerances["residual"] = residual_tol;
      res.headline = {{"lhs", l.lhs}, {"residual_alpha0", l.residual_alpha0}, {"residual_alpha", l.residual_alpha}};
      return res;
    };
  }
  return nullptr;
}

Json certificate_json(const sphere::Certificate& c) {
  return {{"verdict", sphere::to_string(c.verdict)},
          {"A", c.upper},
          {"c_h", c.c},
          {"lower_bound", c.lower},
          {"convexity", c.convexity},
          {"slopes_off_integers", c.slopes_off_integers},
          {"slopes_off_half_integers", c.slopes_off_half_integers},
          {"reasons", c.reasons}};
}

Task plan_certificate(const Json& cfg, Reader& r) {
  const Json& P = params_of(cfg);
  const std::string pp = "/parameters";
  r.keys(P, pp, {"sweep", "threshold"});
  auto src = read_profile(r, cfg);
  std::string sweep_param, th_param;
  std::vector<double> values;
  double lo = 0, hi = 0, rel = 1e-3;
  if (const Json* s = r.object(P, pp, "sweep", false)) {
    r.keys(*s, pp + "/sweep", {"param", "values", "from", "to", "count"});
    sweep_param = r.string(*s, pp + "/sweep", "param", std::nullopt);
    values = read_values(r, *s, pp + "/sweep");
    if (!r.params.count(sweep_param)) r.error(pp + "/sweep/param", "'" + sweep_param + "' is not in /params");
  }
  if (const Json* t = r.object(P, pp, "threshold", false)) {
    r.keys(*t, pp + "/threshold", {"param", "lo", "hi", "rel"});
    th_param = r.string(*t, pp + "/threshold", "param", std::nullopt);
    lo = r.number(*t, pp + "/threshold", "lo");
    hi = r.number(*t, pp + "/threshold", "hi");
    rel = r.number(*t, pp + "/threshold", "rel", rel, 0.0, true);
    if (!r.params.count(th_param)) r.error(pp + "/threshold/param", "'" + th_param + "' is not in /params");
  }
  if (!src || !r.ok()) return nullptr;
  auto params = r.params;
  return [src = *src, params, sweep_param, values, th_param, lo, hi, rel] {
    Result res;
    auto h = expression_profile(src, params);
    res.values["profile"] = src;
    res.values["params"] = Json(params);
    try {
      auto c = sphere::no_stable_geodesic_certificate(h);
      res.values["certificate"] = certificate_json(c);
      res.verdict = sphere::to_string(c.verdict);
      res.headline = {{"c_h", c.c}, {"verdict", res.verdict}};
    } catch (const Refusal& e) {
      if (sweep_param.empty() && th_param.empty()) throw;
      res.values["certificate"] = {{"refused", e.what()}};
      res.verdict = "REFUSED";
    }
    if (!th_param.empty()) {
      auto fam = [&](double K) {
        auto p = params;
        p[th_param] = K;
        return expression_profile(src, p);
      };
      auto th = sphere::certificate_threshold(fam, lo, hi, rel);
      res.values["threshold"] = {{"param", th_param}, {"lo", th.lo}, {"hi", th.hi}, {"estimate", th.estimate()},
                                 {"iterations", th.iterations}};
    }
    if (!sweep_param.empty()) {
      std::vector<std::vector<std::string>> rows(values.size());
      core::parallel_for(values.size(), [&](std::size_t i) {
        auto p = params;
        p[sweep_param] = values[i];
        auto hk = expression_profile(src, p);
        try {
          auto c = sphere::no_stable_geodesic_certificate(hk);
          rows[i] = {fmt(values[i]), fmt(c.c), sphere::to_string(c.verdict)};
        } catch (const Refusal&) {
          rows[i] = {fmt(values[i]), "", "REFUSED"};
        }
      });
      res.table.header = {sweep_param, "c_h", "verdict"};
      res.table.rows = rows;
    }
    return res;
  };
}

Task plan_sweep(const Json& cfg, Reader& r, int seed, const RunOptions& opt) {
  const Json& P = params_of(cfg);
  const std::string pp = "/parameters";
  const Json* s = r.object(P, pp, "sweep", true);
  if (!s) return nullptr;
  r.keys(*s, pp + "/sweep", {"param", "values", "from", "to", "count", "inner"});
  std::string param = r.string(*s, pp + "/sweep", "param", std::nullopt);
  std::string inner = r.string(*s, pp + "/sweep", "inner", std::nullopt,
                               {"length", "qform", "verify-lemma", "sphere-certificate", "shorten", "lcritical-check",
                                "geodesic-check", "stability-check", "conjugate-values"});
  auto values = read_values(r, *s, pp + "/sweep");
  if (!r.params.count(param)) r.error(pp + "/sweep/param", "'" + param + "' is not in /params");
  if (!r.ok()) return nullptr;
  // the inner operation sees the same config minus the sweep block
  Json inner_cfg = cfg;
  inner_cfg["parameters"].erase("sweep");
  if (inner_cfg["parameters"].empty()) inner_cfg.erase("parameters");
  std::vector<Task> tasks;
  for (double v : values) {
    Reader ri(r.params);
    ri.params[param] = v;
    Task t = plan(inner, inner_cfg, ri, seed, opt);
    for (auto& e : ri.errors) r.error("(" + param + "=" + fmt(v) + ") " + e.substr(0, e.find(':')), e.substr(e.find(':') + 2));
    tasks.push_back(t);
  }
  if (!r.ok()) return nullptr;
  return [tasks, values, param, inner] {
    std::vector<Result> out(tasks.size());
    std::vector<std::string> refused(tasks.size());
    core::parallel_for(tasks.size(), [&](std::size_t i) {
      try {
        out[i] = tasks[i]();
      } catch (const Refusal& e) {
        refused[i] = e.what();
        out[i].verdict = "REFUSED";
      }
    });
    Result res;
    res.values["inner"] = inner;
    res.values["param"] = param;
    res.values["runs"] = Json::array();
    std::set<std::string> cols;
    for (auto& o : out)
      for (auto it = o.headline.begin(); it != o.headline.end(); ++it) cols.insert(it.key());
    res.table.header = {param, "verdict"};
    res.table.header.insert(res.table.header.end(), cols.begin(), cols.end());
    for (std::size_t i = 0; i < out.size(); ++i) {
      Json run = {{"value", values[i]}, {"verdict", out[i].verdict}, {"values", out[i].headline}};
      if (!refused[i].empty()) run["refusal"] = refused[i];
      res.values["runs"].push_back(run);
      std::vector<std::string> row{fmt(values[i]), out[i].verdict};
      for (auto& c : cols) {
        if (!out[i].headline.contains(c)) row.push_back("");
        else if (out[i].headline[c].is_number()) row.push_back(fmt(out[i].headline[c].get<double>()));
        else if (out[i].headline[c].is_boolean()) row.push_back(out[i].headline[c].get<bool>() ? "1" : "0");
        else row.push_back(out[i].headline[c].get<std::string>());
      }
      res.table.rows.push_back(row);
    }
    return res;
  };
}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{{"tol_ext", 1e-6}, {"null", 1e-6}, {"endpoint", 1e-4}, {"residual", 1e-3}};
  return t;
}

std::map<std::string, double> read_tolerances(Reader& r, const Json& cfg, const RunOptions& opt) {
  auto tol = default_tolerances();
  if (const Json* t = r.object(cfg, "", "tolerances", false)) {
    for (auto it = t->begin(); it != t->end(); ++it) {
      if (!tol.count(it.key())) r.error("/tolerances/" + it.key(), "unknown tolerance");
      else tol[it.key()] = r.number(*t, "/tolerances", it.key().c_str(), std::nullopt, 0.0, true);
    }
  }
  for (auto& [k, v] : opt.tol) {
    if (!tol.count(k)) r.error("--tol " + k, "unknown tolerance");
    else if (!(v > 0)) r.error("--tol " + k, "must be > 0");
    else tol[k] = v;
  }
  return tol;
}

Task plan(const std::string& sub, const Json& cfg, Reader& r, int seed, const RunOptions& opt) {
  auto tol = read_tolerances(r, cfg, opt);
  if (sub == "length") return plan_length(cfg, r);
  if (sub == "geodesic-check") return plan_geodesic(cfg, r, tol["tol_ext"]);
  if (sub == "lcritical-check") return plan_lcritical(cfg, r, tol["tol_ext"]);
  if (sub == "stability-check") return plan_stability(cfg, r, tol["tol_ext"]);
  if (sub == "qform") return plan_qform(cfg, r, seed, tol["null"]);
  if (sub == "conjugate-values") return plan_conjugate(cfg, r, seed, tol["null"]);
  if (sub == "shorten") return plan_shorten(cfg, r, tol["tol_ext"], tol["endpoint"]);
  if (sub == "verify-lemma") return plan_lemma(cfg, r, seed, tol["residual"]);
  if (sub == "sphere-certificate") return plan_certificate(cfg, r);
  if (sub == "sweep") return plan_sweep(cfg, r, seed, opt);
  r.error("subcommand", "unknown subcommand '" + sub + "'");
  return nullptr;
}

struct Prepared {
  std::vector<std::string> errors;
  Task task;
  std::string name;
  int seed = 0;
  Json inputs;
};

Prepared prepare(const std::string& sub, const Json& given, const RunOptions& opt) {
  Prepared p;
  Json config = given;
  if (!opt.variant.empty() && config.is_object()) {
    if (sub == "verify-lemma") config["parameters"]["lemma"] = opt.variant;
    else if (sub == "shorten") config["parameters"]["kind"] = opt.variant;
  }
  if (!config.is_object()) {
    p.errors.push_back("/: the config must be a JSON object");
    return p;
  }
  std::vector<std::string> errs;
  if (!config.contains("schema")) errs.push_back("/schema: required string is missing");
  else if (config["schema"] != kSchema) errs.push_back(std::string("/schema: must be \"") + kSchema + "\"");
  auto params = read_params(config, errs);
  Reader r(params);
  r.errors = errs;
  r.keys(config, "", {"schema", "name", "seed", "operation", "params", "domain", "hamiltonian", "sampling",
                      "time_intervals", "time_quadrature", "hessian", "profile", "parameters", "tolerances"});
  p.name = r.string(config, "", "name", std::nullopt);
  if (!p.name.empty() && p.name.find_first_of("/\\") != std::string::npos) r.error("/name", "must not contain path separators");
  p.seed = r.integer(config, "", "seed", 0, 0);
  if (config.contains("operation") && config["operation"] != sub)
    r.error("/operation", "config is for '" + config["operation"].dump() + "', not '" + sub + "'");
  if (config.contains("parameters") && !config["parameters"].is_object()) r.error("/parameters", "must be an object");
  try {
    p.task = plan(sub, config, r, p.seed, opt);
  } catch (const ConfigurationError& e) {
    for (auto& i : e.issues()) r.error("/", i);
  }
  if (r.ok() && !p.task) r.error("/", "incomplete configuration");
  p.errors = r.errors;
  p.inputs = config;
  return p;
}

void write_file(const std::filesystem::path& f, const std::string& text) {
  std::ofstream o(f, std::ios::binary);
  if (!o) throw Error("cannot write " + f.string());
  o << text;
}

}  // namespace

std::vector<std::string> validate(const std::string& subcommand, const Json& config, const RunOptions& opt) {
  return prepare(subcommand, config, opt).errors;
}

Outcome run_scenario(const std::string& subcommand, const Json& config, const RunOptions& opt) {
  Outcome out;
  if (opt.threads > 0) core::set_thread_count(opt.threads);
  Prepared p = prepare(subcommand, config, opt);
  if (!p.errors.empty()) {
    out.exit_code = exit_config;
    out.errors = p.errors;
    out.message = std::to_string(p.errors.size()) + " configuration error(s)";
    return out;
  }
  Json rep;
  rep["schema"] = kSchema;
  rep["scenario"] = p.name;
  rep["subcommand"] = subcommand;
  rep["seed"] = p.seed;
  rep["inputs"] = p.inputs;
  Json tol = Json::object();
  for (auto& [k, v] : opt.tol) tol[k] = v;
  rep["tolerance_overrides"] = tol;
  const auto t0 = std::chrono::steady_clock::now();
  Result res;
  try {
    res = p.task();
    out.exit_code = exit_ok;
  } catch (const Refusal& e) {
    res.verdict = "REFUSED";
    res.values["refusal"] = e.what();
    out.exit_code = exit_refusal;
    out.message = e.what();
  } catch (const Error& e) {
    res.verdict = "ERROR";
    res.values["error"] = e.what();
    out.exit_code = exit_error;
    out.message = e.what();
  }
  rep["verdict"] = res.verdict;
  rep["values"] = res.values;
  rep["residuals"] = res.residuals;
  rep["tolerances"] = res.tolerances;
  if (opt.timing)
    rep["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report = rep;
  out.csv = res.table.str();
  if (!opt.out_dir.empty()) {
    std::filesystem::path dir(opt.out_dir);
    std::filesystem::create_directories(dir);
    write_file(dir / (p.name + ".json"), rep.dump(2) + "\n");
    out.written.push_back((dir / (p.name + ".json")).string());
    if (!out.csv.empty()) {
      write_file(dir / (p.name + ".csv"), out.csv);
      out.written.push_back((dir / (p.name + ".csv")).string());
    }
  }
  return out;
}

}  // namespace hoferlab::cli
