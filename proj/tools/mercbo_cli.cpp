// mercbo run <config.json> [--output-dir DIR] [--seed S] [--repeats R]
// mercbo validate <config.json>
//
// Exit codes: 0 success, 1 configuration error, 2 runtime failure.
// MERCBO_THREADS sets the worker thread count (default 1).

#include "mercbo/errors.hpp"
#include "mercbo/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::size_t thread_count() {
  if (const char* env = std::getenv("MERCBO_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return std::size_t(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid MERCBO_THREADS='" << env << "'\n";
  }
  return 1;
}

int validate(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = mercbo::read_json_file(path);
  } catch (const mercbo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  const auto violations = mercbo::validate_config(doc);
  if (violations.empty()) {
    std::cout << "ok\n";
    return kOk;
  }
  for (const auto& v : violations) std::cout << v.field << ": " << v.message << "\n";
  return kConfigError;
}

int run(const std::string& path, const std::optional<std::string>& output_dir, const std::optional<std::uint64_t>& seed,
        const std::optional<std::size_t>& repeats) {
  mercbo::ExperimentConfig cfg;
  try {
    auto doc = mercbo::read_json_file(path);
    if (output_dir) doc["output_dir"] = *output_dir;
    if (seed) doc["seed"] = *seed;
    if (repeats) doc["repeats"] = *repeats;
    cfg = mercbo::parse_config(doc);
  } catch (const mercbo::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    const auto result = mercbo::run_experiment(cfg, thread_count());
    for (std::size_t k = 0; k < result.runs.size(); ++k) {
      const auto& r = result.runs[k];
      std::cout << "run " << k << " seed " << result.seeds[k] << ": ";
      if (!r.records.empty()) std::cout << "best " << r.best_value << " at " << r.best_x.to_string();
      if (r.failure) std::cout << " FAILED: " << *r.failure;
      std::cout << "\n";
    }
    std::cout << "wrote " << cfg.output_dir.string() << " (" << result.wall_time << " s)\n";
    return result.any_failure() ? kRuntimeError : kOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorial Bayesian optimization with Mercer features"};
  app.require_subcommand(1);

  std::string run_path;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> repeats;
  auto* run_cmd = app.add_subcommand("run", "run an experiment");
  run_cmd->add_option("config", run_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--output-dir", output_dir, "override output_dir");
  run_cmd->add_option("--seed", seed, "override the master seed");
  run_cmd->add_option("--repeats", repeats, "override the number of repeats")->check(CLI::PositiveNumber);

  std::string validate_path;
  auto* validate_cmd = app.add_subcommand("validate", "check a config file");
  validate_cmd->add_option("config", validate_path, "experiment config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  if (*run_cmd) return run(run_path, output_dir, seed, repeats);
  return validate(validate_path);
}
