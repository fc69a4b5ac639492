#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cof/attention.hpp"
#include "cof/geometry.hpp"
#include "cof/record.hpp"
#include "cof/toy_model.hpp"

namespace cof::cli {

enum class Command { run, eval, sweep, inspect };
enum class BackendKind { toy, remote };

inline constexpr int kExitOk = 0;
inline constexpr int kExitTaskFailed = 1;
inline constexpr int kExitUsage = 2;

// Fully resolved settings: preset < config file < environment < flags.
struct CliConfig {
  Command command = Command::run;
  CoFConfig cof = CoFConfig::preset(Preset::llava_v15_7b);
  PatchGrid grid{4, 4};
  std::uint64_t seed = 7;
  std::uint64_t model_seed = 42;
  BackendKind backend = BackendKind::toy;
  std::string endpoint;
  long timeout_ms = 10000;
  std::string out;
  bool force = false;
  std::vector<RunVariant> variants;
  int n_tasks = 200;
  int distractors = 3;
  double probe_fraction = 0.0;
  std::vector<double> alpha_grid;
  std::vector<double> lambda_grid;
  GroundingNoiseMode grounding = GroundingNoiseMode::exact;
  int workers = 1;
  std::string task_file;
  bool stage2_grounding_prompt = false;
};

// Parses "RxC", e.g. "4x4". Throws ConfigError.
PatchGrid parse_grid(const std::string& text);
// Parses "1,2,4.5". Throws ConfigError.
std::vector<double> parse_number_list(const std::string& text);

// Entry point behind the `cof` binary. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cof::cli
