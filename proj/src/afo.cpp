#include "mercbo/afo.hpp"

#include "mercbo/errors.hpp"
#include "mercbo/maxflow.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>

namespace mercbo {

namespace {

bool better(double value, const BinaryPoint& x, double best_value, const BinaryPoint& best_x) {
  return value < best_value || (value == best_value && x.code() < best_x.code());
}

// Steepest single-bit-flip descent on p starting from x.
BinaryPoint polish(const BqpProblem<double>& p, BinaryPoint x) {
  const auto n = Eigen::Index(p.dimension());
  const Eigen::MatrixXd sym = p.quadratic + p.quadratic.transpose();
  while (true) {
    Eigen::Index pick = -1;
    double gain = -1e-12;
    for (Eigen::Index k = 0; k < n; ++k) {
      double field = p.linear[k];
      for (Eigen::Index j = 0; j < n; ++j) {
        if (x[std::size_t(j)]) field += sym(k, j);
      }
      const double delta = x[std::size_t(k)] ? -field : field;
      if (delta < gain) {
        gain = delta;
        pick = k;
      }
    }
    if (pick < 0) return x;
    x.flip(std::size_t(pick));
  }
}

}  // namespace

Minimum graphcut_minimize(const SubmodularQuadratic<double>& q) {
  const auto n = q.dimension();
  const std::size_t source = n;
  const std::size_t sink = n + 1;
  FlowNetwork net(n + 2, source, sink);

  // w x_i x_j = w x_j + (-w)(1 - x_i) x_j for w <= 0; the second term is an
  // arc j -> i cut exactly when j is on the source side and i is not.
  Eigen::VectorXd unary = q.linear;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = q.quadratic(Eigen::Index(i), Eigen::Index(j));
      if (w == 0.0) continue;
      unary[Eigen::Index(j)] += w;
      net.add_arc(j, i, -w);
    }
  }
  double constant = q.constant;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = unary[Eigen::Index(j)];
    if (u > 0.0) {
      net.add_arc(j, sink, u);
    } else if (u < 0.0) {
      net.add_arc(source, j, -u);
      constant += u;
    }
  }

  const double cut = net.max_flow();
  const auto side = net.source_side();
  BinaryPoint x(n);
  for (std::size_t i = 0; i < n; ++i) x.set(i, side[i]);
  const double value = q.value(x);

  const double scale = 1.0 + std::abs(constant) + cut;
  if (std::abs(constant + cut - value) > 1e-9 * scale) {
    throw Error("graphcut_minimize: cut value " + std::to_string(constant + cut) +
                " disagrees with energy of the cut assignment " + std::to_string(value));
  }
  return {std::move(x), value};
}

std::vector<double> RelaxationState::best_bound_trace() const {
  std::vector<double> out(bound_trace.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < bound_trace.size(); ++t) out[t] = best = std::max(best, bound_trace[t]);
  return out;
}

RelaxationResult submodular_relaxation_solve(const BqpProblem<double>& p, std::size_t iterations, double step,
                                             bool polish_iterates) {
  if (iterations == 0) throw InvalidConfiguration("relaxation needs at least one iteration");
  if (!(step > 0.0)) throw InvalidConfiguration("relaxation step must be positive");
  const auto n = Eigen::Index(p.dimension());
  const auto [plus, minus] = split_posneg(p);

  RelaxationState state;
  state.step_size = step;
  state.gamma = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (plus(i, j) > 0.0) state.gamma(i, j) = 0.5;
    }
  }
  const bool submodular = (plus.array() == 0.0).all();
  const std::size_t rounds = submodular ? 1 : iterations;

  for (std::size_t t = 1; t <= rounds; ++t) {
    const auto cut = graphcut_minimize(relax(p, state.gamma));
    const BinaryPoint x = polish_iterates ? polish(p, cut.x) : cut.x;
    const double value = p.value(x);
    state.bound_trace.push_back(cut.value);
    state.value_trace.push_back(value);
    if (t == 1 || better(value, x, state.best_value, state.best_x)) {
      state.best_x = x;
      state.best_value = value;
    }

    const double eta = step / std::sqrt(double(t));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double a = plus(i, j);
        if (a == 0.0) continue;
        const double grad = a * (double(cut.x[std::size_t(i)]) + double(cut.x[std::size_t(j)]) - 1.0);
        state.gamma(i, j) = std::clamp(state.gamma(i, j) + eta * grad, 0.0, 1.0);
      }
    }
  }
  return {state.best_x, state.best_value, std::move(state)};
}

Minimum brute_force_minimize(const BqpProblem<double>& p, std::size_t cap) {
  const auto n = p.dimension();
  if (n > cap) {
    throw InvalidConfiguration("brute force refuses n = " + std::to_string(n) + " (cap " + std::to_string(cap) + ")");
  }
  const std::uint64_t total = std::uint64_t(1) << n;
  BinaryPoint best_x(n);
  double best = p.value(best_x);
  for (std::uint64_t code = 1; code < total; ++code) {
    const auto x = BinaryPoint::from_code(code, n);
    const double v = p.value(x);
    if (v < best) {
      best = v;
      best_x = x;
    }
  }
  return {best_x, best};
}

double sample_objective(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis, const BinaryPoint& x) {
  if (std::size_t(theta.size()) != basis.size()) throw DimensionMismatch("sample_objective: theta length mismatch");
  return theta.dot(mercer_features(x, basis));
}

Minimum local_search_minimize(const Eigen::VectorXd& theta, const FeatureBasis<double>& basis, std::size_t restarts,
                              std::uint64_t seed) {
  if (restarts == 0) throw InvalidConfiguration("local search needs at least one restart");
  if (std::size_t(theta.size()) != basis.size()) throw DimensionMismatch("local_search_minimize: theta length mismatch");
  const std::size_t n = basis.dimension();
  const std::size_t d = basis.size();

  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);

  std::optional<Minimum> best;
  std::vector<double> terms(d);
  std::vector<double> flip_gain(n);
  for (std::size_t r = 0; r < restarts; ++r) {
    BinaryPoint x(n);
    for (std::size_t i = 0; i < n; ++i) x.set(i, coin(rng));

    const Eigen::VectorXd phi = mercer_features(x, basis);
    for (std::size_t s = 0; s < d; ++s) terms[s] = theta[Eigen::Index(s)] * phi[Eigen::Index(s)];

    while (true) {
      // Flipping bit k negates every term whose subset contains k.
      std::fill(flip_gain.begin(), flip_gain.end(), 0.0);
      for (std::size_t s = 0; s < d; ++s) {
        for (std::uint64_t m = basis.mask(s); m != 0; m &= m - 1) flip_gain[std::size_t(std::countr_zero(m))] -= 2.0 * terms[s];
      }
      std::size_t pick = n;
      double gain = -1e-12;
      for (std::size_t k = 0; k < n; ++k) {
        if (flip_gain[k] < gain) {
          gain = flip_gain[k];
          pick = k;
        }
      }
      if (pick == n) break;
      x.flip(pick);
      for (std::size_t s = 0; s < d; ++s) {
        if (basis.mask(s) >> pick & 1U) terms[s] = -terms[s];
      }
    }

    const double value = sample_objective(theta, basis, x);
    if (!best || better(value, x, best->value, best->x)) best = Minimum{x, value};
  }
  return *best;
}

}  // namespace mercbo
