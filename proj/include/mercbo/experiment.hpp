#pragma once

// Experiment configuration, repeated seeded runs, and result files.
//
// Config schema (flat JSON object; every key optional except "benchmark"):
//
//   benchmark              "labs" | "ising" | "tabular" | "synthetic_tabular"
//   method                 "mercbo" (default) | "random_search"
//   labs_n                 LABS sequence length (default 20)
//   ising_seed, ising_lambda
//   tabular_path, tabular_sign (+1 | -1, default 1), tabular_alphabet
//   synthetic_alphabet (default "ACGT"), synthetic_length (default 8), synthetic_seed
//   budget, init_count, batch_size, max_order
//   afo                    "submodular_relaxation" | "local_search" | "brute_force"
//   relaxation_iterations, relaxation_step, relaxation_polish, local_search_restarts
//   seed                   master seed; run k uses derive_seed(seed, {k})
//   dedupe                 "allow" | "resample" | "forbid"
//   refit_period, beta_grid, noise_grid, sparsity_scales
//   init_strategy          "uniform" | "worst_decile" (tabular benchmarks only)
//   repeats, output_dir, record_wall_time

#include "mercbo/benchmarks.hpp"
#include "mercbo/driver.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace mercbo {

struct Violation {
  std::string field;
  std::string message;
};

struct ExperimentConfig {
  std::string benchmark;
  std::string method = "mercbo";
  std::size_t labs_n = 20;
  std::uint64_t ising_seed = 0;
  double ising_lambda = 0.0;
  std::string tabular_path;
  double tabular_sign = 1.0;
  std::string tabular_alphabet;
  std::string synthetic_alphabet = "ACGT";
  std::size_t synthetic_length = 8;
  std::uint64_t synthetic_seed = 0;
  std::string init_strategy = "uniform";
  std::size_t repeats = 1;
  std::filesystem::path output_dir = "results";
  RunConfig run;

  nlohmann::json to_json() const;
};

// Every invariant violation in the document, each tagged with its field.
std::vector<Violation> validate_config(const nlohmann::json& doc);
// Throws InvalidConfiguration listing the violations.
ExperimentConfig parse_config(const nlohmann::json& doc);
nlohmann::json read_json_file(const std::filesystem::path& path);

struct BenchmarkInstance {
  Objective objective;
  std::vector<BinaryPoint> init_pool;
};

BenchmarkInstance make_benchmark(const ExperimentConfig& cfg);

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run_index);

// Column order of per-run CSVs.
inline constexpr const char* kRunCsvHeader =
    "run_id,iteration,batch_id,point_bits,objective,best_so_far,batch_diversity,wall_time_s";
inline constexpr const char* kSummaryCsvHeader = "iteration,mean_best_so_far,stderr_best_so_far,runs";

std::string format_number(double v);
std::string run_csv(std::size_t run_id, const RunHistory& history);

struct SummaryRow {
  std::size_t iteration;
  double mean;
  double stderr_;
  std::size_t runs;
};

// Mean and standard error (sample stddev / sqrt(runs), 0 for one run) of
// best_so_far at each iteration, over the runs that reached it.
std::vector<SummaryRow> summarize(const std::vector<RunHistory>& runs);
std::string summary_csv(const std::vector<SummaryRow>& rows);

struct ExperimentResult {
  std::vector<RunHistory> runs;
  std::vector<std::uint64_t> seeds;
  double wall_time = 0.0;
  bool any_failure() const;
};

// Runs every repeat (concurrently up to `threads`) and writes run_<k>.csv,
// summary.csv and manifest.json into cfg.output_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads = 1);

}  // namespace mercbo
