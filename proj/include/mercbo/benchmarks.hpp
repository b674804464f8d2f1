#pragma once

// Self-contained black-box objectives, all posed as minimization.

#include "mercbo/binary_point.hpp"

#include <Eigen/Core>

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mercbo {

// A deterministic objective with a thread-safe evaluation counter.
class Objective {
 public:
  using Function = std::function<double(const BinaryPoint&)>;

  Objective(std::string name, std::size_t dimension, Function fn);

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return dimension_; }
  double evaluate(const BinaryPoint& x) const;
  std::size_t evaluations() const { return counter_->load(); }

 private:
  std::string name_;
  std::size_t dimension_;
  Function fn_;
  std::unique_ptr<std::atomic<std::size_t>> counter_;
};

// ---- LABS ----------------------------------------------------------------

// Sum of squared aperiodic autocorrelations of s_i = 1 - 2 x_i.
std::int64_t labs_energy(const BinaryPoint& x);
double labs_merit_factor(const BinaryPoint& x);
// -n^2 / E(x).
double labs_objective(const BinaryPoint& x);
Objective make_labs(std::size_t n);

// ---- Ising sparsification --------------------------------------------------

inline constexpr std::size_t kIsingSide = 4;
inline constexpr std::size_t kIsingSpins = kIsingSide * kIsingSide;
inline constexpr std::size_t kIsingEdges = 2 * kIsingSide * (kIsingSide - 1);

// Horizontal edges row-major, then vertical edges row-major.
const std::array<std::pair<std::size_t, std::size_t>, kIsingEdges>& ising_edges();

struct IsingSpec {
  std::uint64_t seed = 0;
  double reg_weight = 0.0;
  Eigen::VectorXd couplings;  // J^p per edge
  double log_partition = 0.0;
  Eigen::VectorXd moments;  // E_p[z_i z_j] per edge
};

// Exact log Z for p(z) proportional to exp(sum_e J_e z_i z_j) over 2^16 states.
double ising_log_partition(const Eigen::VectorXd& couplings);

IsingSpec make_ising(std::uint64_t seed, double reg_weight);
// D_KL(p || q) + lambda ||x||_1 where q keeps edge e iff x_e = 1.
double ising_objective(const BinaryPoint& x, const IsingSpec& spec);
double ising_kl(const BinaryPoint& x, const IsingSpec& spec);
std::string ising_to_json(const IsingSpec& spec);
Objective make_ising_objective(IsingSpec spec);

// ---- Tabular ---------------------------------------------------------------

// Fixed-width binary code per symbol: ceil(log2 |alphabet|) bits.
std::size_t bits_per_symbol(std::size_t alphabet_size);
BinaryPoint encode_categorical(std::string_view sequence, std::string_view alphabet);
std::string decode_categorical(const BinaryPoint& x, std::string_view alphabet);

struct TabularSpec {
  std::string alphabet;
  std::size_t sequence_length = 0;
  std::unordered_map<std::string, double> table;  // raw values as loaded
  double sign = 1.0;

  std::size_t dimension() const { return sequence_length * bits_per_symbol(alphabet.size()); }
  // sign * table[decode(x)]
  double evaluate(const BinaryPoint& x) const;
  // Encoded sequences whose signed value lies in the worst `fraction` (largest).
  std::vector<BinaryPoint> worst_points(double fraction) const;
};

// CSV with header `sequence,value`. The alphabet defaults to the sorted set of
// characters appearing in the file.
TabularSpec load_tabular(const std::filesystem::path& path, double sign,
                         std::optional<std::string> alphabet = std::nullopt);
void write_tabular_csv(const std::filesystem::path& path, const TabularSpec& spec);

// Seeded synthetic table: per-position symbol scores plus adjacent-pair
// interactions, all standard normal.
TabularSpec make_synthetic_table(std::string alphabet, std::size_t length, std::uint64_t seed);
Objective make_tabular_objective(std::shared_ptr<const TabularSpec> spec);

}  // namespace mercbo
