#include "hoferlab/cli/scenario.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace hoferlab::cli {

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Hofer geometry scenario runner"};
  app.require_subcommand(1);
  std::string config_path;
  RunOptions opt;
  std::vector<std::string> tol;
  std::string variant;

  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " scenario");
    sub->add_option("--config", config_path, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", opt.out_dir, "directory for the JSON report and CSV table");
    sub->add_option("--tol", tol, "tolerance override NAME=VALUE (repeatable)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--timing", opt.timing, "record the runtime in the report");
    if (name == "verify-lemma")
      sub->add_option("lemma", variant, "z or lambda")->check(CLI::IsMember({"z", "lambda"}));
    if (name == "shorten")
      sub->add_option("--kind", variant, "construction")
          ->check(CLI::IsMember({"no_fixed_max", "no_fixed_min", "sikorav", "scrubbing"}));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? exit_ok : exit_config;
  }
  opt.variant = variant;
  const std::string sub = app.get_subcommands().front()->get_name();

  for (const auto& kv : tol) {
    auto eq = kv.find('=');
    char* end = nullptr;
    double v = eq == std::string::npos ? 0.0 : std::strtod(kv.c_str() + eq + 1, &end);
    if (eq == std::string::npos || end == kv.c_str() + eq + 1 || *end != '\0') {
      std::cerr << "error: --tol expects NAME=VALUE, got '" << kv << "'\n";
      return exit_config;
    }
    opt.tol[kv.substr(0, eq)] = v;
  }

  Json config;
  {
    std::ifstream in(config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
      config = Json::parse(ss.str());
    } catch (const Json::parse_error& e) {
      std::cerr << config_path << ": invalid JSON: " << e.what() << "\n";
      return exit_config;
    }
  }

  Outcome out;
  try {
    out = run_scenario(sub, config, opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
  if (out.exit_code == exit_config) {
    std::cerr << config_path << ": " << out.message << "\n";
    for (auto& e : out.errors) std::cerr << "  " << e << "\n";
    return out.exit_code;
  }
  std::cout << sub << ": " << out.report.value("verdict", "") << "\n";
  if (!out.message.empty()) std::cerr << out.message << "\n";
  for (auto& f : out.written) std::cout << "wrote " << f << "\n";
  return out.exit_code;
}

}  // namespace hoferlab::cli
