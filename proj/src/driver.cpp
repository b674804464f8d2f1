#include "mercbo/driver.hpp"

#include "mercbo/afo.hpp"
#include "mercbo/bqp.hpp"
#include "mercbo/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <random>
#include <thread>

namespace mercbo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < std::min(threads, count); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

bool space_exhausted(std::size_t n, std::size_t taken) {
  return n < 64 && taken >= (std::size_t(1) << n);
}

// Best point at exactly Hamming distance `radius` from `center` that is not
// in `taken`, under the sample objective. Ties go to the smaller encoding.
std::optional<BinaryPoint> best_unevaluated_at_radius(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis,
                                                      const BinaryPoint& center, std::size_t radius,
                                                      const std::unordered_set<BinaryPoint>& taken) {
  const std::size_t n = center.size();
  std::optional<BinaryPoint> best;
  double best_value = 0.0;
  std::vector<std::size_t> idx(radius);
  for (std::size_t i = 0; i < radius; ++i) idx[i] = i;
  while (true) {
    BinaryPoint x = center;
    for (auto i : idx) x.flip(i);
    if (!taken.contains(x)) {
      const double v = sample_objective(theta, basis, x);
      if (!best || v < best_value || (v == best_value && x.code() < best->code())) {
        best = x;
        best_value = v;
      }
    }
    std::size_t pos = radius;
    while (pos > 0 && idx[pos - 1] == n - radius + pos - 1) --pos;
    if (pos == 0) break;
    ++idx[pos - 1];
    for (std::size_t i = pos; i < radius; ++i) idx[i] = idx[i - 1] + 1;
  }
  return best;
}

// Applies the dedupe policy to a primary candidate drawn with `seed`.
BinaryPoint resolve_candidate(const PosteriorModel& model, const FeatureBasis<double>& basis, const RunConfig& cfg,
                              std::uint64_t seed, const Eigen::VectorXd& theta, const BinaryPoint& candidate,
                              const std::unordered_set<BinaryPoint>& taken) {
  if (cfg.dedupe == DedupePolicy::Allow || !taken.contains(candidate)) return candidate;
  const std::size_t n = basis.dimension();
  if (cfg.dedupe == DedupePolicy::Forbid && space_exhausted(n, taken.size())) {
    throw ExhaustedSpace("every point of {0,1}^" + std::to_string(n) + " has been evaluated");
  }

  for (std::uint64_t attempt = 1; attempt <= kResampleAttempts; ++attempt) {
    const auto s = derive_seed(seed, {4, attempt});
    const auto redraw = solve_sample(sample_theta(model, s), basis, cfg, derive_seed(s, {3}));
    if (!taken.contains(redraw)) return redraw;
  }

  if (auto neighbor = best_unevaluated_at_radius(theta, basis, candidate, 1, taken)) return *neighbor;
  if (cfg.dedupe == DedupePolicy::Resample) return candidate;

  for (std::size_t radius = 2; radius <= n; ++radius) {
    if (auto x = best_unevaluated_at_radius(theta, basis, candidate, radius, taken)) return *x;
  }
  throw ExhaustedSpace("no unevaluated point left");
}

class Loop {
 public:
  Loop(const Objective& objective, const RunConfig& cfg)
      : objective_(objective), cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

  bool done() const { return history_.records.size() >= cfg_.budget || history_.failure.has_value(); }
  std::size_t remaining() const { return cfg_.budget - history_.records.size(); }
  const std::unordered_set<BinaryPoint>& evaluated() const { return evaluated_; }
  const std::vector<BinaryPoint>& points() const { return points_; }
  const std::vector<double>& values() const { return values_; }

  void fail(const std::string& what) {
    if (!history_.failure) history_.failure = what;
  }

  // Evaluates a batch in order; stops at the first failure.
  void evaluate_batch(const std::vector<BinaryPoint>& batch, std::size_t batch_id) {
    for (const auto& x : batch) {
      double value;
      try {
        value = objective_.evaluate(x);
      } catch (const std::exception& e) {
        fail("objective evaluation failed at iteration " + std::to_string(history_.records.size() + 1) + ": " +
             e.what());
        break;
      }
      if (!std::isfinite(value)) {
        fail("objective returned a non-finite value at iteration " + std::to_string(history_.records.size() + 1));
        break;
      }
      if (history_.records.empty() || value < history_.best_value) {
        history_.best_value = value;
        history_.best_x = x;
      }
      const double wall = cfg_.record_wall_time
                              ? std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()
                              : kNaN;
      history_.records.push_back({history_.records.size() + 1, batch_id, x, value, history_.best_value, wall});
      evaluated_.insert(x);
      points_.push_back(x);
      values_.push_back(value);
    }
    if (history_.batch_diversity.size() <= batch_id) history_.batch_diversity.resize(batch_id + 1, kNaN);
    history_.batch_diversity[batch_id] = batch.size() >= 2 ? batch_diversity(batch) : kNaN;
  }

  std::vector<BinaryPoint> initial_design() {
    const std::size_t n = objective_.dimension();
    std::mt19937_64 rng(derive_seed(cfg_.seed, {1}));
    std::bernoulli_distribution coin(0.5);
    std::unordered_set<BinaryPoint> chosen;
    std::vector<BinaryPoint> out;
    const std::size_t count = std::min(cfg_.init_count, cfg_.budget);
    constexpr std::size_t kMaxDraws = 1000;
    for (std::size_t i = 0; i < count; ++i) {
      BinaryPoint x(n);
      for (std::size_t draw = 0; draw < kMaxDraws; ++draw) {
        if (cfg_.init_pool.empty()) {
          for (std::size_t b = 0; b < n; ++b) x.set(b, coin(rng));
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, cfg_.init_pool.size() - 1);
          x = cfg_.init_pool[pick(rng)];
        }
        if (cfg_.dedupe == DedupePolicy::Allow || !chosen.contains(x)) break;
      }
      if (cfg_.dedupe == DedupePolicy::Forbid && chosen.contains(x)) {
        throw ExhaustedSpace("could not draw distinct initial points");
      }
      chosen.insert(x);
      out.push_back(x);
    }
    return out;
  }

  RunHistory finish() && { return std::move(history_); }

 private:
  const Objective& objective_;
  const RunConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  RunHistory history_;
  std::unordered_set<BinaryPoint> evaluated_;
  std::vector<BinaryPoint> points_;
  std::vector<double> values_;
};

Eigen::VectorXd standardized(const std::vector<double>& values) {
  Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(values.data(), Eigen::Index(values.size()));
  const double mean = y.mean();
  y.array() -= mean;
  double sd = std::sqrt(y.squaredNorm() / double(y.size()));
  if (!(sd > 1e-12)) sd = 1.0;
  return y / sd;
}

RunHistory run_rounds(const Objective& objective, const RunConfig& cfg, std::size_t batch_size, std::size_t threads) {
  const std::size_t n = objective.dimension();
  check_run_config(cfg, n);
  Loop loop(objective, cfg);
  try {
    loop.evaluate_batch(loop.initial_design(), 0);
  } catch (const std::exception& e) {
    loop.fail(e.what());
  }

  std::optional<HyperParameters> hyper;
  for (std::size_t round = 1; !loop.done(); ++round) {
    try {
      const std::size_t count = std::min(batch_size, loop.remaining());
      const Eigen::VectorXd y = standardized(loop.values());

      if (!hyper || (round - 1) % cfg.refit_period == 0) {
        const TrainingSet train(loop.points(), y, FeatureBasis<double>(n, cfg.max_order, hyper ? hyper->beta : 1.0));
        std::optional<Eigen::VectorXd> prior;
        if (!cfg.sparsity_scales.empty()) prior = strong_hierarchy_scales(train.basis(), cfg.sparsity_scales);
        hyper = fit_hyperparameters(train, cfg.hyper, prior);
      }
      const FeatureBasis<double> basis(n, cfg.max_order, hyper->beta);
      const TrainingSet train(loop.points(), y, basis);
      std::optional<Eigen::VectorXd> prior;
      if (!cfg.sparsity_scales.empty()) prior = strong_hierarchy_scales(basis, cfg.sparsity_scales);
      const PosteriorModel model = fit_posterior(train, hyper->noise_variance, prior);

      // Primary candidates are independent and solved concurrently; dedupe is
      // resolved afterwards in sample order so results never depend on timing.
      std::vector<std::uint64_t> seeds(count);
      std::vector<Eigen::VectorXd> thetas(count);
      std::vector<BinaryPoint> primary(count);
      for (std::size_t j = 0; j < count; ++j) seeds[j] = derive_seed(cfg.seed, {2, round, j});
      parallel_for(count, threads, [&](std::size_t j) {
        thetas[j] = sample_theta(model, seeds[j]);
        primary[j] = solve_sample(thetas[j], basis, cfg, derive_seed(seeds[j], {3}));
      });

      std::unordered_set<BinaryPoint> taken = loop.evaluated();
      std::vector<BinaryPoint> batch;
      for (std::size_t j = 0; j < count; ++j) {
        auto x = resolve_candidate(model, basis, cfg, seeds[j], thetas[j], primary[j], taken);
        taken.insert(x);
        batch.push_back(std::move(x));
      }
      loop.evaluate_batch(batch, round);
    } catch (const std::exception& e) {
      loop.fail("round " + std::to_string(round) + ": " + e.what());
    }
  }
  return std::move(loop).finish();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(base);
  for (auto p : path) s = splitmix64(s ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return s;
}

void check_run_config(const RunConfig& cfg, std::size_t dimension) {
  auto bad = [](const std::string& what) { throw InvalidConfiguration(what); };
  if (dimension == 0 || dimension > kMaxDimension) bad("objective dimension must be in [1, 64]");
  if (cfg.init_count < 1) bad("init_count must be at least 1");
  if (cfg.budget < cfg.init_count) bad("budget must be at least init_count");
  if (cfg.batch_size < 1) bad("batch_size must be at least 1");
  if (cfg.max_order > dimension) bad("max_order exceeds the dimension");
  if (cfg.afo != AfoSolver::LocalSearch && cfg.max_order != 2) {
    bad("submodular_relaxation and brute_force solvers need max_order = 2");
  }
  if (cfg.afo == AfoSolver::BruteForce && dimension > kBruteForceCap) bad("brute_force solver is capped at n = 22");
  if (cfg.relaxation_iterations < 1) bad("relaxation_iterations must be at least 1");
  if (!(cfg.relaxation_step > 0.0)) bad("relaxation_step must be positive");
  if (cfg.local_search_restarts < 1) bad("local_search_restarts must be at least 1");
  if (cfg.refit_period < 1) bad("refit_period must be at least 1");
  if (cfg.hyper.beta_grid.empty() || cfg.hyper.noise_grid.empty()) bad("hyperparameter grids must be non-empty");
  for (double b : cfg.hyper.beta_grid) {
    if (!(b >= 0.0) || !std::isfinite(b)) bad("beta grid entries must be finite and non-negative");
  }
  for (double s : cfg.hyper.noise_grid) {
    if (!(s > 0.0) || !std::isfinite(s)) bad("noise grid entries must be finite and positive");
  }
  if (!cfg.sparsity_scales.empty()) {
    if (cfg.sparsity_scales.size() != dimension) bad("sparsity_scales needs one entry per variable");
    for (double s : cfg.sparsity_scales) {
      if (!(s > 0.0) || !std::isfinite(s)) bad("sparsity_scales entries must be finite and positive");
    }
  }
  for (const auto& x : cfg.init_pool) {
    if (x.size() != dimension) bad("init_pool point has the wrong dimension");
  }
}

double batch_diversity(const std::vector<BinaryPoint>& points) {
  if (points.size() < 2) throw InvalidConfiguration("batch diversity needs at least two points");
  std::size_t total = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) total += hamming(points[i], points[j]);
  }
  const double pairs = double(points.size()) * double(points.size() - 1) / 2.0;
  return double(total) / pairs;
}

BinaryPoint solve_sample(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis, const RunConfig& cfg,
                         std::uint64_t seed) {
  switch (cfg.afo) {
    case AfoSolver::SubmodularRelaxation:
      return submodular_relaxation_solve(build_bqp(theta, basis), cfg.relaxation_iterations, cfg.relaxation_step,
                                         cfg.relaxation_polish)
          .x;
    case AfoSolver::BruteForce:
      return brute_force_minimize(build_bqp(theta, basis)).x;
    case AfoSolver::LocalSearch:
      return local_search_minimize(theta, basis, cfg.local_search_restarts, seed).x;
  }
  throw InvalidConfiguration("unknown solver");
}

BinaryPoint select_next(const PosteriorModel& model, const FeatureBasis<double>& basis, const RunConfig& cfg,
                        std::uint64_t seed, const std::unordered_set<BinaryPoint>& evaluated) {
  const Eigen::VectorXd theta = sample_theta(model, seed);
  const BinaryPoint candidate = solve_sample(theta, basis, cfg, derive_seed(seed, {3}));
  return resolve_candidate(model, basis, cfg, seed, theta, candidate, evaluated);
}

RunHistory run_bo(const Objective& objective, const RunConfig& cfg) { return run_rounds(objective, cfg, 1, 1); }

RunHistory run_batch_bo(const Objective& objective, const RunConfig& cfg) {
  return run_rounds(objective, cfg, cfg.batch_size, std::max<std::size_t>(cfg.threads, 1));
}

RunHistory run_random_search(const Objective& objective, const RunConfig& cfg) {
  const std::size_t n = objective.dimension();
  check_run_config(cfg, n);
  Loop loop(objective, cfg);
  try {
    loop.evaluate_batch(loop.initial_design(), 0);
  } catch (const std::exception& e) {
    loop.fail(e.what());
  }
  std::mt19937_64 rng(derive_seed(cfg.seed, {5}));
  std::bernoulli_distribution coin(0.5);
  for (std::size_t round = 1; !loop.done(); ++round) {
    const std::size_t count = std::min(cfg.batch_size, loop.remaining());
    std::vector<BinaryPoint> batch;
    for (std::size_t j = 0; j < count; ++j) {
      BinaryPoint x(n);
      for (std::size_t b = 0; b < n; ++b) x.set(b, coin(rng));
      batch.push_back(std::move(x));
    }
    loop.evaluate_batch(batch, round);
  }
  return std::move(loop).finish();
}

}  // namespace mercbo
