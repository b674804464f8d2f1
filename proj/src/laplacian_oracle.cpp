#include "mercbo/laplacian_oracle.hpp"

#include "mercbo/errors.hpp"

#include <Eigen/Eigenvalues>

#include <bit>
#include <cmath>
#include <string>

namespace mercbo {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Eigen::MatrixXd edge_laplacian() {
  Eigen::MatrixXd l(2, 2);
  l << 1, -1, -1, 1;
  return l;
}

// Laplacian of the single-edge factor for coordinate `k` (0 = most significant)
// lifted to the full product space.
Eigen::MatrixXd coordinate_laplacian(std::size_t n, std::size_t k) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    out = kron(out, i == k ? edge_laplacian() : Eigen::MatrixXd::Identity(2, 2));
  }
  return out;
}

}  // namespace

Eigen::MatrixXd hadamard(std::size_t n) {
  const Eigen::Index size = Eigen::Index(1) << n;
  Eigen::MatrixXd h(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    for (Eigen::Index j = 0; j < size; ++j) {
      h(i, j) = (std::popcount(std::uint64_t(i & j)) & 1) ? -1.0 : 1.0;
    }
  }
  return h;
}

LaplacianSpectrum laplacian_eigens_oracle(std::size_t n, std::size_t cap) {
  if (n == 0) throw InvalidConfiguration("laplacian oracle: n must be at least 1");
  if (n > cap) {
    throw InvalidConfiguration("laplacian oracle refuses n = " + std::to_string(n) + " (cap " +
                               std::to_string(cap) + ")");
  }

  // L(G_1 [] ... [] G_n) = L(G_1) (+) ... (+) L(G_n), built left to right.
  Eigen::MatrixXd lap = edge_laplacian();
  for (std::size_t i = 1; i < n; ++i) {
    const auto dim = lap.rows();
    lap = kron(lap, Eigen::MatrixXd::Identity(2, 2)) + kron(Eigen::MatrixXd::Identity(dim, dim), edge_laplacian());
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);
  if (solver.info() != Eigen::Success) throw Error("laplacian oracle: eigensolver failed");

  LaplacianSpectrum out;
  out.laplacian = lap;
  out.eigenvalues = solver.eigenvalues();
  out.eigenvectors = solver.eigenvectors();

  // Generic commuting operator with simple spectrum: distinct powers of two
  // make every subset sum distinct.
  Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(lap.rows(), lap.cols());
  for (std::size_t k = 0; k < n; ++k) probe += std::ldexp(1.0, int(k)) * coordinate_laplacian(n, k);

  constexpr double kClusterTol = 1e-6;
  Eigen::Index start = 0;
  const Eigen::Index total = out.eigenvalues.size();
  while (start < total) {
    Eigen::Index end = start + 1;
    while (end < total && std::abs(out.eigenvalues[end] - out.eigenvalues[start]) < kClusterTol) ++end;
    const Eigen::Index m = end - start;

    out.clusters.push_back({out.eigenvalues.segment(start, m).mean(), std::size_t(m)});
    if (m > 1) {
      Eigen::MatrixXd basis = out.eigenvectors.middleCols(start, m);
      Eigen::MatrixXd restricted = basis.transpose() * probe * basis;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> inner(0.5 * (restricted + restricted.transpose()));
      out.eigenvectors.middleCols(start, m) = basis * inner.eigenvectors();
    }
    start = end;
  }

  for (Eigen::Index c = 0; c < out.eigenvectors.cols(); ++c) {
    auto col = out.eigenvectors.col(c);
    col.normalize();
    Eigen::Index lead = 0;
    while (lead < col.size() && std::abs(col[lead]) < 1e-8) ++lead;
    if (lead < col.size() && col[lead] < 0) col = -col;
  }
  return out;
}

}  // namespace mercbo
