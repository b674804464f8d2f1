#include "mercbo/experiment.hpp"

#include "mercbo/afo.hpp"
#include "mercbo/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace mercbo {

namespace {

using nlohmann::json;

const std::set<std::string> kBenchmarks{"labs", "ising", "tabular", "synthetic_tabular"};
const std::set<std::string> kMethods{"mercbo", "random_search"};
const std::set<std::string> kSolvers{"submodular_relaxation", "local_search", "brute_force"};
const std::set<std::string> kDedupe{"allow", "resample", "forbid"};
const std::set<std::string> kInit{"uniform", "worst_decile"};

enum class Kind { String, Count, Unsigned, Number, Bool, NumberList };

const std::vector<std::pair<std::string, Kind>>& schema() {
  static const std::vector<std::pair<std::string, Kind>> keys{
      {"benchmark", Kind::String},
      {"method", Kind::String},
      {"labs_n", Kind::Count},
      {"ising_seed", Kind::Unsigned},
      {"ising_lambda", Kind::Number},
      {"tabular_path", Kind::String},
      {"tabular_sign", Kind::Number},
      {"tabular_alphabet", Kind::String},
      {"synthetic_alphabet", Kind::String},
      {"synthetic_length", Kind::Count},
      {"synthetic_seed", Kind::Unsigned},
      {"budget", Kind::Count},
      {"init_count", Kind::Count},
      {"batch_size", Kind::Count},
      {"max_order", Kind::Unsigned},
      {"afo", Kind::String},
      {"relaxation_iterations", Kind::Count},
      {"relaxation_step", Kind::Number},
      {"relaxation_polish", Kind::Bool},
      {"local_search_restarts", Kind::Count},
      {"seed", Kind::Unsigned},
      {"dedupe", Kind::String},
      {"refit_period", Kind::Count},
      {"beta_grid", Kind::NumberList},
      {"noise_grid", Kind::NumberList},
      {"sparsity_scales", Kind::NumberList},
      {"init_strategy", Kind::String},
      {"repeats", Kind::Count},
      {"output_dir", Kind::String},
      {"record_wall_time", Kind::Bool},
  };
  return keys;
}

bool type_ok(const json& v, Kind kind) {
  switch (kind) {
    case Kind::String:
      return v.is_string();
    case Kind::Count:
      return v.is_number_integer() && v.get<std::int64_t>() >= 1;
    case Kind::Unsigned:
      return v.is_number_integer() && v.get<std::int64_t>() >= 0;
    case Kind::Number:
      return v.is_number() && std::isfinite(v.get<double>());
    case Kind::Bool:
      return v.is_boolean();
    case Kind::NumberList:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
  }
  return false;
}

const char* kind_name(Kind kind) {
  switch (kind) {
    case Kind::String:
      return "a string";
    case Kind::Count:
      return "an integer >= 1";
    case Kind::Unsigned:
      return "an integer >= 0";
    case Kind::Number:
      return "a finite number";
    case Kind::Bool:
      return "a boolean";
    case Kind::NumberList:
      return "an array of numbers";
  }
  return "?";
}

template <typename T>
T get_or(const json& doc, const char* key, T fallback) {
  return doc.contains(key) ? doc.at(key).get<T>() : fallback;
}

AfoSolver solver_from(const std::string& s) {
  if (s == "local_search") return AfoSolver::LocalSearch;
  if (s == "brute_force") return AfoSolver::BruteForce;
  return AfoSolver::SubmodularRelaxation;
}

std::string solver_name(AfoSolver s) {
  switch (s) {
    case AfoSolver::LocalSearch:
      return "local_search";
    case AfoSolver::BruteForce:
      return "brute_force";
    case AfoSolver::SubmodularRelaxation:
      break;
  }
  return "submodular_relaxation";
}

DedupePolicy dedupe_from(const std::string& s) {
  if (s == "allow") return DedupePolicy::Allow;
  if (s == "forbid") return DedupePolicy::Forbid;
  return DedupePolicy::Resample;
}

std::string dedupe_name(DedupePolicy p) {
  switch (p) {
    case DedupePolicy::Allow:
      return "allow";
    case DedupePolicy::Forbid:
      return "forbid";
    case DedupePolicy::Resample:
      break;
  }
  return "resample";
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidConfiguration(path.string() + ": " + e.what());
  }
}

std::vector<Violation> validate_config(const json& doc) {
  std::vector<Violation> out;
  auto violation = [&](const std::string& field, const std::string& message) { out.push_back({field, message}); };
  if (!doc.is_object()) {
    violation("", "config must be a JSON object");
    return out;
  }

  std::set<std::string> known;
  for (const auto& [key, kind] : schema()) {
    known.insert(key);
    if (doc.contains(key) && !type_ok(doc.at(key), kind)) violation(key, std::string("must be ") + kind_name(kind));
  }
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) violation(key, "unknown key");
  }
  if (!out.empty()) return out;

  auto one_of = [&](const char* key, const std::set<std::string>& allowed, const std::string& fallback) {
    const auto v = get_or<std::string>(doc, key, fallback);
    if (!allowed.contains(v)) violation(key, "unknown value '" + v + "'");
    return v;
  };

  if (!doc.contains("benchmark")) {
    violation("benchmark", "required");
  } else {
    one_of("benchmark", kBenchmarks, "");
  }
  const auto benchmark = get_or<std::string>(doc, "benchmark", "");
  one_of("method", kMethods, "mercbo");
  const auto afo = one_of("afo", kSolvers, "submodular_relaxation");
  one_of("dedupe", kDedupe, "resample");
  const auto init = one_of("init_strategy", kInit, "uniform");

  const auto budget = get_or<std::int64_t>(doc, "budget", 100);
  const auto init_count = get_or<std::int64_t>(doc, "init_count", 5);
  if (budget < init_count) violation("budget", "must be at least init_count (" + std::to_string(init_count) + ")");

  std::optional<std::size_t> dimension;
  if (benchmark == "labs") {
    const auto n = get_or<std::int64_t>(doc, "labs_n", 20);
    if (n < 2 || n > 64) violation("labs_n", "must be in [2, 64]");
    dimension = std::size_t(n);
  } else if (benchmark == "ising") {
    dimension = kIsingEdges;
    if (get_or<double>(doc, "ising_lambda", 0.0) < 0.0) violation("ising_lambda", "must be non-negative");
  } else if (benchmark == "tabular") {
    if (!doc.contains("tabular_path")) {
      violation("tabular_path", "required for the tabular benchmark");
    } else if (!std::filesystem::exists(doc.at("tabular_path").get<std::string>())) {
      violation("tabular_path", "file does not exist");
    }
  } else if (benchmark == "synthetic_tabular") {
    const auto alphabet = get_or<std::string>(doc, "synthetic_alphabet", "ACGT");
    const auto length = get_or<std::int64_t>(doc, "synthetic_length", 8);
    if (alphabet.size() < 2 || std::set<char>(alphabet.begin(), alphabet.end()).size() != alphabet.size()) {
      violation("synthetic_alphabet", "needs at least two distinct symbols");
    } else if (std::size_t(length) * bits_per_symbol(alphabet.size()) > kMaxDimension) {
      violation("synthetic_length", "encoded dimension exceeds 64 bits");
    } else {
      dimension = std::size_t(length) * bits_per_symbol(alphabet.size());
    }
  }
  if (doc.contains("tabular_sign")) {
    const double s = doc.at("tabular_sign").get<double>();
    if (s != 1.0 && s != -1.0) violation("tabular_sign", "must be +1 or -1");
  }
  if (init == "worst_decile" && benchmark != "tabular" && benchmark != "synthetic_tabular") {
    violation("init_strategy", "worst_decile is only available for tabular benchmarks");
  }

  const auto max_order = get_or<std::int64_t>(doc, "max_order", 2);
  if (dimension && max_order > std::int64_t(*dimension)) violation("max_order", "exceeds the benchmark dimension");
  if (afo != "local_search" && max_order != 2) violation("max_order", "must be 2 for the " + afo + " solver");
  if (afo == "brute_force" && dimension && *dimension > kBruteForceCap) violation("afo", "brute_force is capped at n = 22");

  if (doc.contains("relaxation_step") && !(doc.at("relaxation_step").get<double>() > 0.0)) {
    violation("relaxation_step", "must be positive");
  }
  for (const char* key : {"beta_grid", "noise_grid"}) {
    if (!doc.contains(key)) continue;
    const auto& grid = doc.at(key);
    if (grid.empty()) violation(key, "must be non-empty");
    for (const auto& v : grid) {
      const double x = v.get<double>();
      const bool ok = std::string(key) == "beta_grid" ? x >= 0.0 : x > 0.0;
      if (!ok || !std::isfinite(x)) {
        violation(key, std::string("entries must be ") + (std::string(key) == "beta_grid" ? "non-negative" : "positive"));
        break;
      }
    }
  }
  if (doc.contains("sparsity_scales")) {
    const auto& scales = doc.at("sparsity_scales");
    if (dimension && scales.size() != *dimension) violation("sparsity_scales", "needs one entry per variable");
    for (const auto& v : scales) {
      if (!(v.get<double>() > 0.0)) {
        violation("sparsity_scales", "entries must be positive");
        break;
      }
    }
  }
  return out;
}

ExperimentConfig parse_config(const json& doc) {
  const auto violations = validate_config(doc);
  if (!violations.empty()) {
    std::string msg = "invalid config:";
    for (const auto& v : violations) msg += "\n  " + v.field + ": " + v.message;
    throw InvalidConfiguration(msg);
  }
  ExperimentConfig cfg;
  cfg.benchmark = doc.at("benchmark").get<std::string>();
  cfg.method = get_or<std::string>(doc, "method", cfg.method);
  cfg.labs_n = get_or<std::size_t>(doc, "labs_n", cfg.labs_n);
  cfg.ising_seed = get_or<std::uint64_t>(doc, "ising_seed", cfg.ising_seed);
  cfg.ising_lambda = get_or<double>(doc, "ising_lambda", cfg.ising_lambda);
  cfg.tabular_path = get_or<std::string>(doc, "tabular_path", cfg.tabular_path);
  cfg.tabular_sign = get_or<double>(doc, "tabular_sign", cfg.tabular_sign);
  cfg.tabular_alphabet = get_or<std::string>(doc, "tabular_alphabet", cfg.tabular_alphabet);
  cfg.synthetic_alphabet = get_or<std::string>(doc, "synthetic_alphabet", cfg.synthetic_alphabet);
  cfg.synthetic_length = get_or<std::size_t>(doc, "synthetic_length", cfg.synthetic_length);
  cfg.synthetic_seed = get_or<std::uint64_t>(doc, "synthetic_seed", cfg.synthetic_seed);
  cfg.init_strategy = get_or<std::string>(doc, "init_strategy", cfg.init_strategy);
  cfg.repeats = get_or<std::size_t>(doc, "repeats", cfg.repeats);
  cfg.output_dir = get_or<std::string>(doc, "output_dir", cfg.output_dir.string());

  auto& run = cfg.run;
  run.budget = get_or<std::size_t>(doc, "budget", run.budget);
  run.init_count = get_or<std::size_t>(doc, "init_count", run.init_count);
  run.batch_size = get_or<std::size_t>(doc, "batch_size", run.batch_size);
  run.max_order = get_or<std::size_t>(doc, "max_order", run.max_order);
  run.afo = solver_from(get_or<std::string>(doc, "afo", "submodular_relaxation"));
  run.relaxation_iterations = get_or<std::size_t>(doc, "relaxation_iterations", run.relaxation_iterations);
  run.relaxation_step = get_or<double>(doc, "relaxation_step", run.relaxation_step);
  run.local_search_restarts = get_or<std::size_t>(doc, "local_search_restarts", run.local_search_restarts);
  run.seed = get_or<std::uint64_t>(doc, "seed", run.seed);
  run.dedupe = dedupe_from(get_or<std::string>(doc, "dedupe", "resample"));
  run.refit_period = get_or<std::size_t>(doc, "refit_period", run.refit_period);
  run.hyper.beta_grid = get_or<std::vector<double>>(doc, "beta_grid", run.hyper.beta_grid);
  run.hyper.noise_grid = get_or<std::vector<double>>(doc, "noise_grid", run.hyper.noise_grid);
  run.sparsity_scales = get_or<std::vector<double>>(doc, "sparsity_scales", run.sparsity_scales);
  run.relaxation_polish = get_or<bool>(doc, "relaxation_polish", run.relaxation_polish);
  run.record_wall_time = get_or<bool>(doc, "record_wall_time", run.record_wall_time);
  return cfg;
}

json ExperimentConfig::to_json() const {
  json j;
  j["benchmark"] = benchmark;
  j["method"] = method;
  if (benchmark == "labs") j["labs_n"] = labs_n;
  if (benchmark == "ising") {
    j["ising_seed"] = ising_seed;
    j["ising_lambda"] = ising_lambda;
  }
  if (benchmark == "tabular") {
    j["tabular_path"] = tabular_path;
    j["tabular_sign"] = tabular_sign;
    if (!tabular_alphabet.empty()) j["tabular_alphabet"] = tabular_alphabet;
  }
  if (benchmark == "synthetic_tabular") {
    j["synthetic_alphabet"] = synthetic_alphabet;
    j["synthetic_length"] = synthetic_length;
    j["synthetic_seed"] = synthetic_seed;
  }
  j["budget"] = run.budget;
  j["init_count"] = run.init_count;
  j["batch_size"] = run.batch_size;
  j["max_order"] = run.max_order;
  j["afo"] = solver_name(run.afo);
  j["relaxation_iterations"] = run.relaxation_iterations;
  j["relaxation_step"] = run.relaxation_step;
  j["local_search_restarts"] = run.local_search_restarts;
  j["seed"] = run.seed;
  j["dedupe"] = dedupe_name(run.dedupe);
  j["refit_period"] = run.refit_period;
  j["beta_grid"] = run.hyper.beta_grid;
  j["noise_grid"] = run.hyper.noise_grid;
  if (!run.sparsity_scales.empty()) j["sparsity_scales"] = run.sparsity_scales;
  j["init_strategy"] = init_strategy;
  j["repeats"] = repeats;
  j["output_dir"] = output_dir.string();
  j["relaxation_polish"] = run.relaxation_polish;
  j["record_wall_time"] = run.record_wall_time;
  return j;
}

BenchmarkInstance make_benchmark(const ExperimentConfig& cfg) {
  std::shared_ptr<const TabularSpec> table;
  if (cfg.benchmark == "labs") return {make_labs(cfg.labs_n), {}};
  if (cfg.benchmark == "ising") return {make_ising_objective(make_ising(cfg.ising_seed, cfg.ising_lambda)), {}};
  if (cfg.benchmark == "tabular") {
    std::optional<std::string> alphabet;
    if (!cfg.tabular_alphabet.empty()) alphabet = cfg.tabular_alphabet;
    table = std::make_shared<const TabularSpec>(load_tabular(cfg.tabular_path, cfg.tabular_sign, alphabet));
  } else if (cfg.benchmark == "synthetic_tabular") {
    table = std::make_shared<const TabularSpec>(
        make_synthetic_table(cfg.synthetic_alphabet, cfg.synthetic_length, cfg.synthetic_seed));
  } else {
    throw InvalidConfiguration("unknown benchmark '" + cfg.benchmark + "'");
  }
  std::vector<BinaryPoint> pool;
  if (cfg.init_strategy == "worst_decile") pool = table->worst_points(0.1);
  return {make_tabular_objective(table), std::move(pool)};
}

std::uint64_t run_seed(std::uint64_t master_seed, std::size_t run_index) {
  return derive_seed(master_seed, {std::uint64_t(run_index)});
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string run_csv(std::size_t run_id, const RunHistory& history) {
  std::string out = std::string(kRunCsvHeader) + "\n";
  for (const auto& r : history.records) {
    const double diversity = r.batch_id < history.batch_diversity.size() ? history.batch_diversity[r.batch_id]
                                                                          : std::numeric_limits<double>::quiet_NaN();
    out += std::to_string(run_id) + ',' + std::to_string(r.iteration) + ',' + std::to_string(r.batch_id) + ',' +
           r.x.to_string() + ',' + format_number(r.value) + ',' + format_number(r.best_so_far) + ',' +
           format_number(diversity) + ',' + format_number(r.wall_time) + '\n';
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<RunHistory>& runs) {
  std::size_t longest = 0;
  for (const auto& r : runs) longest = std::max(longest, r.records.size());
  std::vector<SummaryRow> rows;
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<double> values;
    for (const auto& r : runs) {
      if (t < r.records.size()) values.push_back(r.records[t].best_so_far);
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / double(values.size());
    double se = 0.0;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / double(values.size() - 1)) / std::sqrt(double(values.size()));
    }
    rows.push_back({t + 1, mean, se, values.size()});
  }
  return rows;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = std::string(kSummaryCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iteration) + ',' + format_number(r.mean) + ',' + format_number(r.stderr_) + ',' +
           std::to_string(r.runs) + '\n';
  }
  return out;
}

bool ExperimentResult::any_failure() const {
  return std::any_of(runs.begin(), runs.end(), [](const RunHistory& r) { return r.failure.has_value(); });
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  const auto start = std::chrono::steady_clock::now();
  if (cfg.repeats < 1) throw InvalidConfiguration("repeats must be at least 1");
  std::filesystem::create_directories(cfg.output_dir);

  ExperimentResult result;
  result.runs.resize(cfg.repeats);
  result.seeds.resize(cfg.repeats);
  for (std::size_t k = 0; k < cfg.repeats; ++k) result.seeds[k] = run_seed(cfg.run.seed, k);

  threads = std::max<std::size_t>(threads, 1);
  const std::size_t run_threads = cfg.repeats > 1 ? 1 : threads;
  auto one_run = [&](std::size_t k) {
    RunHistory history;
    try {
      auto instance = make_benchmark(cfg);
      RunConfig run = cfg.run;
      run.seed = result.seeds[k];
      run.init_pool = std::move(instance.init_pool);
      run.threads = run_threads;
      if (cfg.method == "random_search") {
        history = run_random_search(instance.objective, run);
      } else if (run.batch_size > 1) {
        history = run_batch_bo(instance.objective, run);
      } else {
        history = run_bo(instance.objective, run);
      }
      if (!history.failure && instance.objective.evaluations() != history.records.size()) {
        history.failure = "evaluation counter " + std::to_string(instance.objective.evaluations()) +
                          " disagrees with " + std::to_string(history.records.size()) + " records";
      }
    } catch (const std::exception& e) {
      history.failure = e.what();
    }
    write_file(cfg.output_dir / ("run_" + std::to_string(k) + ".csv"), run_csv(k, history));
    result.runs[k] = std::move(history);
  };

  const std::size_t workers = cfg.repeats > 1 ? std::min(threads, cfg.repeats) : 1;
  if (workers <= 1) {
    for (std::size_t k = 0; k < cfg.repeats; ++k) one_run(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t k = next++; k < cfg.repeats; k = next++) {
            try {
              one_run(k);
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

  write_file(cfg.output_dir / "summary.csv", summary_csv(summarize(result.runs)));
  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json manifest;
  manifest["config"] = cfg.to_json();
  manifest["versions"] = {{"mercbo", "0.1.0"},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)},
                          {"compiler", __VERSION__}};
  manifest["runs"] = json::array();
  for (std::size_t k = 0; k < cfg.repeats; ++k) {
    json r{{"run_id", k},
           {"seed", result.seeds[k]},
           {"file", "run_" + std::to_string(k) + ".csv"},
           {"evaluations", result.runs[k].records.size()}};
    if (!result.runs[k].records.empty()) {
      r["best_value"] = result.runs[k].best_value;
      r["best_point"] = result.runs[k].best_x.to_string();
    }
    r["failure"] = result.runs[k].failure ? json(*result.runs[k].failure) : json(nullptr);
    manifest["runs"].push_back(r);
  }
  manifest["threads"] = threads;
  manifest["total_wall_time_s"] = result.wall_time;
  write_file(cfg.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace mercbo
