// wfduality: run or validate an experiment described by a JSON config.
//
//   wfduality run <config.json> [--out DIR] [--workers K] [--seed S]
//   wfduality validate <config.json>
//
// Exit status: 0 success, 2 a verdict failed (e.g. a duality |z| at or above
// the threshold), 1 any error.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wfduality/config.hpp"

namespace fs = std::filesystem;

namespace {

std::optional<unsigned> workers_from_env() {
  const char* v = std::getenv("WFDUALITY_WORKERS");
  if (!v || !*v) return std::nullopt;
  try {
    const long k = std::stol(v);
    if (k >= 0) return static_cast<unsigned>(k);
  } catch (const std::exception&) {
  }
  std::cerr << "warning: ignoring WFDUALITY_WORKERS=" << v << "\n";
  return std::nullopt;
}

void write_file(const fs::path& p, const std::string& contents) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw wfd::Error(wfd::ErrorCode::ConfigError, "cannot write " + p.string());
  out << contents;
}

int do_run(const std::string& config_path, const std::string& out_dir, std::optional<unsigned> workers,
           std::optional<std::uint64_t> seed) {
  wfd::ExperimentConfig cfg = wfd::load_config(config_path);
  // Precedence: --workers, then WFDUALITY_WORKERS, then the config file.
  if (!workers) workers = workers_from_env();
  if (workers) cfg.opts.workers = *workers;
  if (seed) cfg.opts.seed = *seed;
  wfd::validate_config(cfg);

  const auto start = std::chrono::steady_clock::now();
  const wfd::RunResult result = wfd::run_experiment(cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out_dir);
  const wfd::json envelope = wfd::make_envelope(cfg, result, wall);
  write_file(fs::path(out_dir) / "result.json", envelope.dump(2) + "\n");
  for (const auto& [name, body] : result.csv) write_file(fs::path(out_dir) / name, body);

  std::cout << cfg.experiment << ": " << (result.verdict_ok ? "pass" : "FAIL") << " (" << wall << " s, "
            << (fs::path(out_dir) / "result.json").string() << ")\n";
  return result.verdict_ok ? 0 : 2;
}

int do_validate(const std::string& config_path) {
  const wfd::ExperimentConfig cfg = wfd::load_config(config_path);
  for (const std::string& line : wfd::validate_config(cfg)) std::cout << line << "\n";
  std::cout << "OK\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-type Wright-Fisher models with selection in a random environment"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<unsigned> workers;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory for result.json and CSV files");
  run->add_option("--workers", workers, "Worker threads (0 = all cores); falls back to WFDUALITY_WORKERS");
  run->add_option("--seed", seed, "Override the config seed");

  auto* validate = app.add_subcommand("validate", "Check a config without simulating");
  validate->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return do_run(config_path, out_dir, workers, seed);
    return do_validate(config_path);
  } catch (const wfd::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
