#pragma once

#include "hoferlab/cli/expression.hpp"
#include "hoferlab/core/hamiltonian.hpp"
#include "hoferlab/linflow/linflow.hpp"
#include "hoferlab/sphere/sphere.hpp"

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

namespace hoferlab::cli {

using Json = nlohmann::json;

inline constexpr const char* kSchema = "hoferlab.scenario/1";

enum ExitCode { exit_ok = 0, exit_error = 1, exit_refusal = 2, exit_config = 3 };

const std::vector<std::string>& subcommands();

// H from an expression in t and x1..x2n (R^2n) or t, theta, z (sphere);
// gradient and dH/dt are symbolic. Names in `params` become constants.
core::Hamiltonian expression_hamiltonian(const std::string& source, const core::PhaseDomain& d,
                                         const std::map<std::string, double>& params = {});
// h(z) with symbolic h' and h''.
sphere::ProfileFunction expression_profile(const std::string& source,
                                           const std::map<std::string, double>& params = {});

struct RunOptions {
  std::string out_dir;                 // empty: nothing is written
  std::map<std::string, double> tol;   // --tol overrides, merged into "tolerances"
  int threads = 0;
  bool timing = false;                 // adds runtime_seconds (breaks byte identity)
  std::string variant;                 // verify-lemma z|lambda, shorten kind
};

struct Outcome {
  int exit_code = exit_ok;
  Json report;
  std::string csv;
  std::vector<std::string> errors;   // schema errors (exit_config)
  std::vector<std::string> written;  // files
  std::string message;               // refusal or error text
};

// Every schema problem of the config for this subcommand (empty when valid).
std::vector<std::string> validate(const std::string& subcommand, const Json& config,
                                  const RunOptions& opt = {});

Outcome run_scenario(const std::string& subcommand, const Json& config, const RunOptions& opt = {});

// The command line: hoferlab <subcommand> --config FILE [--out-dir DIR]
// [--tol NAME=VALUE ...] [--threads N] [--timing].
int run_cli(int argc, const char* const* argv);

}  // namespace hoferlab::cli
