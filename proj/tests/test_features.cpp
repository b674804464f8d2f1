#include "mercbo/features.hpp"
#include "mercbo/laplacian_oracle.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <bit>
#include <cmath>
#include <random>

using namespace mercbo;

namespace {

BinaryPoint random_point(std::size_t n, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  BinaryPoint x(n);
  for (std::size_t i = 0; i < n; ++i) x.set(i, coin(rng));
  return x;
}

// The defining 2^n-term sum: sum over all r of e^{-beta * 2|r|} (-1)^{<r, x + y>}.
double kernel_by_enumeration(const BinaryPoint& x, const BinaryPoint& y, double beta) {
  const std::uint64_t diff = x.mask() ^ y.mask();
  double k = 0.0;
  for (std::uint64_t r = 0; r < (std::uint64_t(1) << x.size()); ++r) {
    const double sign = (std::popcount(r & diff) & 1) ? -1.0 : 1.0;
    k += std::exp(-beta * 2.0 * std::popcount(r)) * sign;
  }
  return k;
}

const double kHalfLn2 = std::log(2.0) / 2.0;

}  // namespace

TEST_CASE("enumerate_subsets orders by size then lexicographically") {
  const auto b = enumerate_subsets<double>(2, 2);
  REQUIRE(b.size() == 4);
  CHECK(b.subset(0).empty());
  CHECK(b.subset(1) == std::vector<std::size_t>{0});
  CHECK(b.subset(2) == std::vector<std::size_t>{1});
  CHECK(b.subset(3) == std::vector<std::size_t>{0, 1});

  const auto first = enumerate_subsets<double>(3, 1);
  REQUIRE(first.size() == 4);
  CHECK(first.subset(3) == std::vector<std::size_t>{2});

  CHECK(enumerate_subsets<double>(10, 2).size() == 56);

  const auto b4 = enumerate_subsets<double>(4, 3);
  CHECK(b4.size() == 1 + 4 + 6 + 4);
  CHECK(b4.subset(5) == std::vector<std::size_t>{0, 1});
  CHECK(b4.subset(10) == std::vector<std::size_t>{2, 3});
  CHECK(b4.subset(11) == std::vector<std::size_t>{0, 1, 2});
  CHECK(b4.subset(14) == std::vector<std::size_t>{1, 2, 3});
  for (std::size_t i = 0; i < b4.size(); ++i) CHECK(b4.eigenvalue(i) == 2.0 * double(b4.subset(i).size()));
}

TEST_CASE("pair_index agrees with the canonical ordering") {
  const auto b = enumerate_subsets<double>(7, 2);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(b.subset(b.single_index(i)) == std::vector<std::size_t>{i});
    for (std::size_t j = i + 1; j < 7; ++j) CHECK(b.subset(b.pair_index(i, j)) == std::vector<std::size_t>{i, j});
  }
}

TEST_CASE("enumerate_subsets rejects invalid configurations") {
  CHECK_THROWS_AS(enumerate_subsets<double>(0, 0), InvalidConfiguration);
  CHECK_THROWS_AS(enumerate_subsets<double>(3, 4), InvalidConfiguration);
  CHECK_THROWS_AS(enumerate_subsets<double>(3, 2, -1.0), InvalidConfiguration);
}

TEST_CASE("mercer_features examples") {
  const auto flat = mercer_features(BinaryPoint{0, 0}, enumerate_subsets<double>(2, 2, 0.0));
  CHECK(flat == Eigen::Vector4d(1, 1, 1, 1));

  const auto basis = enumerate_subsets<double>(2, 2, kHalfLn2);
  const double r = 1.0 / std::sqrt(2.0);
  const auto a = mercer_features(BinaryPoint{1, 0}, basis);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == doctest::Approx(-r).epsilon(1e-15));
  CHECK(a[2] == doctest::Approx(r).epsilon(1e-15));
  CHECK(a[3] == doctest::Approx(-0.5).epsilon(1e-15));

  const auto b = mercer_features(BinaryPoint{1, 1}, basis);
  CHECK(b[1] == doctest::Approx(-r).epsilon(1e-15));
  CHECK(b[2] == doctest::Approx(-r).epsilon(1e-15));
  CHECK(b[3] == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(mercer_features(BinaryPoint{1, 0, 1}, basis), DimensionMismatch);
}

TEST_CASE("feature magnitudes are e^{-beta k} and the constant feature is +1") {
  std::mt19937_64 rng(3);
  const auto basis = enumerate_subsets<double>(9, 3, 0.37);
  for (int trial = 0; trial < 20; ++trial) {
    const auto phi = mercer_features(random_point(9, rng), basis);
    CHECK(phi[0] == 1.0);
    for (std::size_t i = 0; i < basis.size(); ++i) {
      CHECK(std::abs(phi[Eigen::Index(i)]) == doctest::Approx(std::exp(-0.37 * double(basis.order(i)))));
    }
  }
}

TEST_CASE("exact_kernel examples") {
  CHECK(exact_kernel(BinaryPoint{0, 1}, BinaryPoint{0, 1}, kHalfLn2) == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(exact_kernel(BinaryPoint{0, 1}, BinaryPoint{1, 1}, kHalfLn2) == doctest::Approx(0.75).epsilon(1e-14));
  for (std::size_t n : {1u, 4u, 7u}) {
    BinaryPoint x(n);
    BinaryPoint y = x;
    y.flip(0);
    CHECK(exact_kernel(x, x, 0.0) == std::pow(2.0, double(n)));
    CHECK(exact_kernel(x, y, 0.0) == 0.0);
  }
  CHECK_THROWS_AS(exact_kernel(BinaryPoint{0}, BinaryPoint{0, 1}, 0.1), DimensionMismatch);
}

TEST_CASE("exact_kernel matches the full 2^n-term sum") {
  std::mt19937_64 rng(11);
  for (std::size_t n = 1; n <= 10; ++n) {
    for (double beta : {0.0, 0.1, 0.5, 1.0}) {
      const auto x = random_point(n, rng);
      const auto y = random_point(n, rng);
      const double ref = kernel_by_enumeration(x, y, beta);
      CHECK(std::abs(exact_kernel(x, y, beta) - ref) <= 1e-10 * exact_kernel(x, x, beta));
    }
  }
}

TEST_CASE("kernel_from_features examples") {
  const auto full = enumerate_subsets<double>(2, 2, kHalfLn2);
  CHECK(kernel_from_features(BinaryPoint{0, 0}, BinaryPoint{1, 0}, full) == doctest::Approx(0.75).epsilon(1e-14));

  std::mt19937_64 rng(5);
  const auto constant = enumerate_subsets<double>(6, 0, 0.8);
  for (int i = 0; i < 10; ++i) CHECK(kernel_from_features(random_point(6, rng), random_point(6, rng), constant) == 1.0);

  const double beta = 0.3;
  const auto second = enumerate_subsets<double>(8, 2, beta);
  const auto x = random_point(8, rng);
  const double expected = 1.0 + 8.0 * std::exp(-2.0 * beta) + 28.0 * std::exp(-4.0 * beta);
  CHECK(kernel_from_features(x, x, second) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("full-order features reproduce the exact kernel") {
  std::mt19937_64 rng(17);
  for (std::size_t n = 1; n <= 10; ++n) {
    for (double beta : {0.1, 0.5, 1.0}) {
      const auto basis = enumerate_subsets<double>(n, n, beta);
      for (int pair = 0; pair < 100; ++pair) {
        const auto x = random_point(n, rng);
        const auto y = random_point(n, rng);
        const double exact = exact_kernel(x, y, beta);
        CHECK(std::abs(kernel_from_features(x, y, basis) - exact) <= 1e-9 * exact_kernel(x, x, beta));
      }
    }
  }
}

TEST_CASE("truncated self-kernel grows with the order and converges at n") {
  std::mt19937_64 rng(23);
  for (std::size_t n : {3u, 6u, 9u}) {
    const auto x = random_point(n, rng);
    double prev = 0.0;
    for (std::size_t order = 0; order <= n; ++order) {
      const double k = kernel_from_features(x, x, enumerate_subsets<double>(n, order, 0.4));
      CHECK(k >= prev);
      prev = k;
    }
    CHECK(prev == doctest::Approx(exact_kernel(x, x, 0.4)).epsilon(1e-12));
  }
}

TEST_CASE("feature parity: bits outside S are irrelevant, bits inside S negate") {
  std::mt19937_64 rng(29);
  const std::size_t n = 8;
  const auto basis = enumerate_subsets<double>(n, 3, 0.2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_point(n, rng);
    const auto phi = mercer_features(x, basis);
    for (std::size_t bit = 0; bit < n; ++bit) {
      auto y = x;
      y.flip(bit);
      const auto psi = mercer_features(y, basis);
      for (std::size_t s = 0; s < basis.size(); ++s) {
        const bool inside = (basis.mask(s) >> bit) & 1U;
        CHECK(psi[Eigen::Index(s)] == (inside ? -phi[Eigen::Index(s)] : phi[Eigen::Index(s)]));
      }
    }
  }
}

TEST_CASE("Gram matrix of truncated features is positive semidefinite") {
  std::mt19937_64 rng(31);
  const auto basis = enumerate_subsets<double>(10, 2, 0.3);
  std::vector<BinaryPoint> pts;
  for (int i = 0; i < 20; ++i) pts.push_back(random_point(10, rng));
  Eigen::MatrixXd gram(20, 20);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 20; ++j) gram(i, j) = kernel_from_features(pts[std::size_t(i)], pts[std::size_t(j)], basis);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("Laplacian oracle spectrum") {
  const auto one = laplacian_eigens_oracle(1);
  CHECK(one.eigenvalues[0] == doctest::Approx(0.0));
  CHECK(one.eigenvalues[1] == doctest::Approx(2.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(one.eigenvectors(0, 0) == doctest::Approx(r));
  CHECK(one.eigenvectors(1, 0) == doctest::Approx(r));
  CHECK(one.eigenvectors(0, 1) == doctest::Approx(r));
  CHECK(one.eigenvectors(1, 1) == doctest::Approx(-r));

  const auto two = laplacian_eigens_oracle(2);
  const Eigen::Vector4d expected(0, 2, 2, 4);
  CHECK((two.eigenvalues - expected).cwiseAbs().maxCoeff() < 1e-8);

  const auto three = laplacian_eigens_oracle(3);
  REQUIRE(three.clusters.size() == 4);
  CHECK(three.clusters[1].eigenvalue == doctest::Approx(2.0));
  CHECK(three.clusters[1].multiplicity == 3);
  CHECK(three.clusters[2].eigenvalue == doctest::Approx(4.0));
  CHECK(three.clusters[2].multiplicity == 3);

  CHECK_THROWS_AS(laplacian_eigens_oracle(5), InvalidConfiguration);
  CHECK_NOTHROW(laplacian_eigens_oracle(5, 5));
}

TEST_CASE("Laplacian oracle eigenvectors are Hadamard columns up to sign") {
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto spec = laplacian_eigens_oracle(n);
    const Eigen::MatrixXd h = hadamard(n) / std::sqrt(double(1 << n));
    std::vector<bool> used(std::size_t(h.cols()), false);
    for (Eigen::Index c = 0; c < spec.eigenvectors.cols(); ++c) {
      const auto v = spec.eigenvectors.col(c);
      bool matched = false;
      for (Eigen::Index k = 0; k < h.cols() && !matched; ++k) {
        if (used[std::size_t(k)]) continue;
        const double dist = std::min((v - h.col(k)).cwiseAbs().maxCoeff(), (v + h.col(k)).cwiseAbs().maxCoeff());
        if (dist < 1e-8) {
          used[std::size_t(k)] = true;
          matched = true;
          CHECK(spec.eigenvalues[c] == doctest::Approx(2.0 * std::popcount(std::uint64_t(k))));
        }
      }
      CHECK(matched);
    }
  }
}
