#pragma once

// The MerCBO loop: fit the surrogate, draw Thompson samples, minimize each
// sample with the configured solver, evaluate, repeat until the budget is
// spent.

#include "mercbo/benchmarks.hpp"
#include "mercbo/binary_point.hpp"
#include "mercbo/features.hpp"
#include "mercbo/surrogate.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

namespace mercbo {

enum class AfoSolver { SubmodularRelaxation, LocalSearch, BruteForce };
enum class DedupePolicy { Allow, Resample, Forbid };

inline constexpr std::size_t kResampleAttempts = 10;

struct RunConfig {
  std::size_t budget = 100;
  std::size_t init_count = 5;
  std::size_t batch_size = 1;
  std::size_t max_order = 2;
  AfoSolver afo = AfoSolver::SubmodularRelaxation;
  std::size_t relaxation_iterations = 5;
  double relaxation_step = 0.2;
  bool relaxation_polish = true;
  std::size_t local_search_restarts = 20;
  std::uint64_t seed = 0;
  DedupePolicy dedupe = DedupePolicy::Resample;
  std::size_t refit_period = 1;
  HyperConfig hyper = HyperConfig::defaults();
  // Per-variable scales for the strong-hierarchy prior; empty means identity.
  std::vector<double> sparsity_scales;
  // Initial points are drawn from this pool when non-empty, else uniformly.
  std::vector<BinaryPoint> init_pool;
  bool record_wall_time = false;
  // Worker threads for batch solves.
  std::size_t threads = 1;
};

// Throws InvalidConfiguration naming the first violated invariant.
void check_run_config(const RunConfig& cfg, std::size_t dimension);

struct EvaluationRecord {
  std::size_t iteration;  // 1-based evaluation index
  std::size_t batch_id;   // 0 = initial design
  BinaryPoint x;
  double value;
  double best_so_far;
  double wall_time;  // seconds; NaN when not recorded
};

struct RunHistory {
  std::vector<EvaluationRecord> records;
  std::vector<double> batch_diversity;  // per batch id; NaN for single-point batches
  BinaryPoint best_x;
  double best_value = 0.0;
  std::optional<std::string> failure;
};

// Mean pairwise Hamming distance; needs at least two points.
double batch_diversity(const std::vector<BinaryPoint>& points);

// One Thompson-sampling selection: theta ~ posterior, minimize theta^T phi,
// then apply the dedupe policy against `evaluated`.
BinaryPoint select_next(const PosteriorModel& model, const FeatureBasis<double>& basis, const RunConfig& cfg,
                        std::uint64_t seed, const std::unordered_set<BinaryPoint>& evaluated);

// Minimizer of a single Thompson sample under the configured solver.
BinaryPoint solve_sample(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis, const RunConfig& cfg,
                         std::uint64_t seed);

// Sequential mode, one evaluation per round.
RunHistory run_bo(const Objective& objective, const RunConfig& cfg);
// cfg.batch_size Thompson samples per round, solved concurrently.
RunHistory run_batch_bo(const Objective& objective, const RunConfig& cfg);
// Uniform random search with the same initial design and budget.
RunHistory run_random_search(const Objective& objective, const RunConfig& cfg);

// Deterministic seed mixing (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path);

}  // namespace mercbo
