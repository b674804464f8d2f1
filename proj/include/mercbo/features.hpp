#pragma once

// Closed-form Mercer features of the diffusion kernel on {0,1}^n.
//
// The combinatorial graph over {0,1}^n is the Cartesian product of n
// single-edge graphs, so its Laplacian eigenvectors are Hadamard columns
// indexed by subsets S of the variables, with eigenvalue 2|S|. The feature
// for subset S is e^{-beta |S|} (-1)^{sum_{i in S} x_i}, and the kernel is
// the inner product of feature vectors.

#include "mercbo/binary_point.hpp"
#include "mercbo/errors.hpp"

#include <Eigen/Core>

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mercbo {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr std::size_t kMaxBasisSize = std::size_t(1) << 24;

// Canonically ordered variable subsets up to max_order: ascending by size,
// then lexicographic on sorted indices. Indices are 0-based (variable x_1 is
// index 0).
template <typename Scalar = double>
class FeatureBasis {
 public:
  FeatureBasis(std::size_t n, std::size_t max_order, Scalar beta);

  std::size_t dimension() const { return n_; }
  std::size_t max_order() const { return max_order_; }
  Scalar beta() const { return beta_; }
  std::size_t size() const { return masks_.size(); }

  std::uint64_t mask(std::size_t i) const { return masks_[i]; }
  std::size_t order(std::size_t i) const { return std::size_t(std::popcount(masks_[i])); }
  Scalar eigenvalue(std::size_t i) const { return Scalar(2 * order(i)); }
  // e^{-beta k}, the square root of e^{-beta * 2k}.
  Scalar weight(std::size_t i) const { return weights_[order(i)]; }
  Scalar order_weight(std::size_t k) const { return weights_[k]; }
  std::vector<std::size_t> subset(std::size_t i) const;

  // Position of {i} and {i, j} (i < j) in the canonical ordering.
  std::size_t single_index(std::size_t i) const { return 1 + i; }
  std::size_t pair_index(std::size_t i, std::size_t j) const {
    return 1 + n_ + i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }

  FeatureBasis with_beta(Scalar beta) const { return FeatureBasis(n_, max_order_, beta); }

 private:
  std::size_t n_;
  std::size_t max_order_;
  Scalar beta_;
  std::vector<std::uint64_t> masks_;
  std::vector<Scalar> weights_;
};

inline std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::size_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

template <typename Scalar>
FeatureBasis<Scalar>::FeatureBasis(std::size_t n, std::size_t max_order, Scalar beta)
    : n_(n), max_order_(max_order), beta_(beta) {
  if (n == 0 || n > kMaxDimension) {
    throw InvalidConfiguration("feature basis: dimension must be in [1, 64], got " + std::to_string(n));
  }
  if (max_order > n) {
    throw InvalidConfiguration("feature basis: max_order " + std::to_string(max_order) +
                               " exceeds dimension " + std::to_string(n));
  }
  if (!(beta >= Scalar(0)) || !std::isfinite(double(beta))) {
    throw InvalidConfiguration("feature basis: beta must be finite and non-negative");
  }
  std::uint64_t total = 0;
  for (std::size_t k = 0; k <= max_order; ++k) {
    total += binomial(n, k);
    if (total > kMaxBasisSize) throw InvalidConfiguration("feature basis too large");
  }
  masks_.reserve(total);

  for (std::size_t k = 0; k <= max_order; ++k) {
    // Lexicographic k-combinations of {0..n-1}.
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    while (true) {
      std::uint64_t m = 0;
      for (auto i : idx) m |= std::uint64_t(1) << i;
      masks_.push_back(m);
      std::size_t pos = k;
      while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++idx[pos - 1];
      for (std::size_t i = pos; i < k; ++i) idx[i] = idx[i - 1] + 1;
    }
  }

  weights_.resize(max_order + 1);
  for (std::size_t k = 0; k <= max_order; ++k) {
    using std::exp;
    weights_[k] = exp(-beta * Scalar(k));
  }
}

template <typename Scalar>
std::vector<std::size_t> FeatureBasis<Scalar>::subset(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::uint64_t m = masks_[i]; m != 0; m &= m - 1) out.push_back(std::size_t(std::countr_zero(m)));
  return out;
}

template <typename Scalar = double>
FeatureBasis<Scalar> enumerate_subsets(std::size_t n, std::size_t max_order, Scalar beta = Scalar(1)) {
  return FeatureBasis<Scalar>(n, max_order, beta);
}

template <typename Scalar>
VectorX<Scalar> mercer_features(const BinaryPoint& x, const FeatureBasis<Scalar>& basis) {
  if (x.size() != basis.dimension()) {
    throw DimensionMismatch("mercer_features: point has dimension " + std::to_string(x.size()) +
                            ", basis expects " + std::to_string(basis.dimension()));
  }
  const std::uint64_t xm = x.mask();
  VectorX<Scalar> phi(Eigen::Index(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const bool odd = std::popcount(xm & basis.mask(i)) & 1;
    const Scalar w = basis.weight(i);
    phi[Eigen::Index(i)] = odd ? -w : w;
  }
  return phi;
}

// Rows are the feature vectors of the given points.
template <typename Scalar>
MatrixX<Scalar> feature_matrix(std::span<const BinaryPoint> points, const FeatureBasis<Scalar>& basis) {
  MatrixX<Scalar> phi(Eigen::Index(points.size()), Eigen::Index(basis.size()));
  for (std::size_t r = 0; r < points.size(); ++r) phi.row(Eigen::Index(r)) = mercer_features(points[r], basis).transpose();
  return phi;
}

// Full 2^n-term diffusion kernel in product form:
// (1 + e^{-2 beta})^{n-d} (1 - e^{-2 beta})^d with d the Hamming distance.
template <typename Scalar = double>
Scalar exact_kernel(const BinaryPoint& x, const BinaryPoint& y, Scalar beta) {
  if (x.size() != y.size()) throw DimensionMismatch("exact_kernel: dimension mismatch");
  if (!(beta >= Scalar(0))) throw InvalidConfiguration("exact_kernel: beta must be non-negative");
  using std::exp;
  using std::pow;
  const auto d = hamming(x, y);
  const Scalar q = exp(Scalar(-2) * beta);
  return pow(Scalar(1) + q, Scalar(x.size() - d)) * pow(Scalar(1) - q, Scalar(d));
}

template <typename Scalar>
Scalar kernel_from_features(const BinaryPoint& x, const BinaryPoint& y, const FeatureBasis<Scalar>& basis) {
  return mercer_features(x, basis).dot(mercer_features(y, basis));
}

}  // namespace mercbo
