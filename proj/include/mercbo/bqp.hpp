#pragma once

// Binary quadratic programs c + b^T x + x^T A x over x in {0,1}^n with A
// strictly upper triangular, and their reduction from a Thompson sample over
// second-order Mercer features.

#include "mercbo/binary_point.hpp"
#include "mercbo/errors.hpp"
#include "mercbo/features.hpp"

#include <Eigen/Core>

#include <cmath>
#include <string>
#include <utility>

namespace mercbo {

namespace detail {

template <typename Scalar>
Scalar quadratic_value(Scalar constant, const VectorX<Scalar>& linear, const MatrixX<Scalar>& quadratic,
                       const BinaryPoint& x) {
  const auto n = linear.size();
  if (Eigen::Index(x.size()) != n) {
    throw DimensionMismatch("bqp: point has dimension " + std::to_string(x.size()) + ", problem has " +
                            std::to_string(n));
  }
  Scalar v = constant;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!x[std::size_t(i)]) continue;
    v += linear[i];
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (x[std::size_t(j)]) v += quadratic(i, j);
    }
  }
  return v;
}

template <typename Scalar>
void check_upper(const VectorX<Scalar>& linear, const MatrixX<Scalar>& quadratic) {
  const auto n = linear.size();
  if (n == 0 || quadratic.rows() != n || quadratic.cols() != n) throw DimensionMismatch("bqp: coefficient shapes disagree");
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      if (quadratic(i, j) != Scalar(0)) throw InvalidConfiguration("bqp: quadratic matrix must be strictly upper triangular");
    }
  }
  if (!linear.allFinite() || !quadratic.allFinite()) throw InvalidConfiguration("bqp: non-finite coefficients");
}

}  // namespace detail

template <typename Scalar = double>
struct BqpProblem {
  Scalar constant;
  VectorX<Scalar> linear;
  MatrixX<Scalar> quadratic;  // strictly upper triangular

  BqpProblem(Scalar c, VectorX<Scalar> b, MatrixX<Scalar> a)
      : constant(c), linear(std::move(b)), quadratic(std::move(a)) {
    detail::check_upper(linear, quadratic);
    if (!std::isfinite(double(constant))) throw InvalidConfiguration("bqp: non-finite constant");
  }

  std::size_t dimension() const { return std::size_t(linear.size()); }
  Scalar value(const BinaryPoint& x) const { return detail::quadratic_value(constant, linear, quadratic, x); }
};

// Quadratic with every pairwise coefficient <= 0, exactly minimizable by a cut.
template <typename Scalar = double>
struct SubmodularQuadratic {
  Scalar constant;
  VectorX<Scalar> linear;
  MatrixX<Scalar> quadratic;

  SubmodularQuadratic(Scalar c, VectorX<Scalar> b, MatrixX<Scalar> a)
      : constant(c), linear(std::move(b)), quadratic(std::move(a)) {
    detail::check_upper(linear, quadratic);
    if ((quadratic.array() > Scalar(0)).any()) throw NotSubmodular("submodular quadratic has a positive pairwise term");
  }

  std::size_t dimension() const { return std::size_t(linear.size()); }
  Scalar value(const BinaryPoint& x) const { return detail::quadratic_value(constant, linear, quadratic, x); }
  BqpProblem<Scalar> as_bqp() const { return {constant, linear, quadratic}; }
};

template <typename Scalar>
Scalar bqp_value(const BqpProblem<Scalar>& p, const BinaryPoint& x) {
  return p.value(x);
}

// Rewrites theta^T phi(x) over a second-order basis as c + b^T x + x^T A x
// using (-1)^{x_i} = 1 - 2 x_i. Each pair term theta_ij w2 (1-2x_i)(1-2x_j)
// contributes -2 theta_ij w2 to both b_i and b_j and 4 theta_ij w2 to A_ij.
template <typename Scalar>
BqpProblem<Scalar> build_bqp(const VectorX<Scalar>& theta, const FeatureBasis<Scalar>& basis) {
  if (basis.max_order() != 2) {
    throw InvalidConfiguration("build_bqp requires a second-order basis, got order " + std::to_string(basis.max_order()));
  }
  if (std::size_t(theta.size()) != basis.size()) {
    throw DimensionMismatch("build_bqp: theta has length " + std::to_string(theta.size()) + ", basis has " +
                            std::to_string(basis.size()));
  }
  const std::size_t n = basis.dimension();
  const Scalar w1 = basis.order_weight(1);
  const Scalar w2 = basis.order_weight(2);

  Scalar c = theta[0] * basis.order_weight(0);
  VectorX<Scalar> b = VectorX<Scalar>::Zero(Eigen::Index(n));
  MatrixX<Scalar> a = MatrixX<Scalar>::Zero(Eigen::Index(n), Eigen::Index(n));

  for (std::size_t i = 0; i < n; ++i) {
    const Scalar t = theta[Eigen::Index(basis.single_index(i))] * w1;
    c += t;
    b[Eigen::Index(i)] -= Scalar(2) * t;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Scalar t = theta[Eigen::Index(basis.pair_index(i, j))] * w2;
      c += t;
      b[Eigen::Index(i)] -= Scalar(2) * t;
      b[Eigen::Index(j)] -= Scalar(2) * t;
      a(Eigen::Index(i), Eigen::Index(j)) = Scalar(4) * t;
    }
  }
  return BqpProblem<Scalar>(c, std::move(b), std::move(a));
}

// A = A+ + A-, with A+ holding the non-negative and A- the non-positive entries.
template <typename Scalar>
std::pair<MatrixX<Scalar>, MatrixX<Scalar>> split_posneg(const BqpProblem<Scalar>& p) {
  return {p.quadratic.cwiseMax(Scalar(0)), p.quadratic.cwiseMin(Scalar(0))};
}

// Submodular lower bound of p: each positive term a x_i x_j is replaced by
// a gamma_ij (x_i + x_j - 1), which never exceeds it for gamma_ij in [0, 1].
template <typename Scalar>
SubmodularQuadratic<Scalar> relax(const BqpProblem<Scalar>& p, const MatrixX<Scalar>& gamma) {
  const auto n = Eigen::Index(p.dimension());
  if (gamma.rows() != n || gamma.cols() != n) throw DimensionMismatch("relax: gamma shape mismatch");
  auto [plus, minus] = split_posneg(p);

  Scalar c = p.constant;
  VectorX<Scalar> b = p.linear;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar a = plus(i, j);
      if (a == Scalar(0)) continue;
      const Scalar g = gamma(i, j);
      if (!(g >= Scalar(0) && g <= Scalar(1))) throw InvalidConfiguration("relax: gamma entries must lie in [0, 1]");
      b[i] += a * g;
      b[j] += a * g;
      c -= a * g;
    }
  }
  return SubmodularQuadratic<Scalar>(c, std::move(b), std::move(minus));
}

}  // namespace mercbo
