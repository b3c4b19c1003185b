#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "wfduality/measure.hpp"
#include "wfduality/parallel.hpp"
#include "wfduality/wf_graph.hpp"

namespace wfd {

using json = nlohmann::json;

// Measures: {"atoms": [[y, weight], ...]} or
// {"density": "uniform" | "beta(a,b)", "mass": m, "nodes": n}.
FiniteMeasure parse_measure(const json& j, const std::string& where);
json measure_to_json(const FiniteMeasure& m);

// Kernels: "geometric", "binary", {"type": ...}, or
// {"type": "table", "entries": [{"y": y, "pmf": [...], "inf_mass": p}, ...]}.
SelectionKernel parse_kernel(const json& j);
json kernel_to_json(const SelectionKernel& k);

// {"kernel", "lambda_s", "w", "lambda_c", "c", "sigma"}; Lambda atoms at 0
// are rejected as ConfigError.
LimitParams parse_limit(const json& j);
json limit_to_json(const LimitParams& p);

// {"N", "kernel", "env_law", "c_N", "lambda_c"}.
FiniteModelParams parse_model(const json& j);

struct ExperimentConfig {
  std::string experiment;
  json body;  // the full document, with resolved seed/replicates/workers
  McOptions opts;
  double z_threshold = 4.0;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {
      "simulate-x",       "simulate-z",     "simulate-finite", "duality-quenched", "duality-annealed",
      "duality-moment",   "thresholds",     "fixation",        "convergence",      "extinction"};
  return kinds;
}

ExperimentConfig parse_config(const json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

// Dry run: builds every parameter object the experiment would use and checks
// its preconditions. Returns human-readable notes; throws on failure.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

struct RunResult {
  json payload;
  std::map<std::string, std::string> csv;  // file name -> contents
  bool verdict_ok = true;
};

RunResult run_experiment(const ExperimentConfig& cfg);

// result.json: {"build", "wall_time_seconds", "config", "payload"}.
json make_envelope(const ExperimentConfig& cfg, const RunResult& result, double wall_seconds);

const char* build_id() noexcept;

}  // namespace wfd
