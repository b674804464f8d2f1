#pragma once

// Acquisition function optimization: minimizers for the Thompson-sample
// objective theta^T phi(x).

#include "mercbo/binary_point.hpp"
#include "mercbo/bqp.hpp"
#include "mercbo/features.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace mercbo {

inline constexpr std::size_t kBruteForceCap = 22;

struct Minimum {
  BinaryPoint x;
  double value;
};

// Exact minimizer via s-t min-cut; x_i = 1 iff node i lies on the source
// side. Among tied minimizers the one with the fewest ones (hence the
// smallest integer encoding) is returned.
Minimum graphcut_minimize(const SubmodularQuadratic<double>& q);

struct RelaxationState {
  Eigen::MatrixXd gamma;
  double step_size = 0.0;  // base step; iteration t uses step_size / sqrt(t)
  BinaryPoint best_x;
  double best_value = 0.0;
  std::vector<double> bound_trace;  // lower bound L_t of each iteration
  std::vector<double> value_trace;  // true value of each (polished) iterate

  // Running maximum of bound_trace.
  std::vector<double> best_bound_trace() const;
};

struct RelaxationResult {
  BinaryPoint x;
  double value;
  RelaxationState state;
};

inline constexpr std::size_t kDefaultRelaxationIterations = 5;
inline constexpr double kDefaultRelaxationStep = 0.2;

// Alternates exact cuts of the relaxed problem with projected supergradient
// ascent on gamma, keeping the best feasible iterate under the true objective.
// With `polish_iterates` each cut assignment is first improved by single-bit
// flips on p; the supergradient still uses the raw cut.
RelaxationResult submodular_relaxation_solve(const BqpProblem<double>& p,
                                             std::size_t iterations = kDefaultRelaxationIterations,
                                             double step = kDefaultRelaxationStep, bool polish_iterates = true);

// Exhaustive minimum; ties go to the smallest integer encoding.
Minimum brute_force_minimize(const BqpProblem<double>& p, std::size_t cap = kBruteForceCap);

// Value of theta^T phi(x) for an arbitrary-order basis.
double sample_objective(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis, const BinaryPoint& x);

// Steepest single-bit-flip descent from `restarts` uniform random starts.
Minimum local_search_minimize(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis, std::size_t restarts,
                              std::uint64_t seed);

}  // namespace mercbo
