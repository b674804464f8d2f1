#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace mercbo {

inline constexpr std::size_t kLaplacianOracleCap = 4;

struct EigenCluster {
  double eigenvalue;  // mean of the numerically obtained values in the cluster
  std::size_t multiplicity;
};

struct LaplacianSpectrum {
  Eigen::MatrixXd laplacian;     // 2^n x 2^n, vertex index = integer encoding of x
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // unit columns, first nonzero entry positive
  std::vector<EigenCluster> clusters;
};

// Hadamard matrix of order 2^n, H_ij = (-1)^{<r_i, r_j>}.
Eigen::MatrixXd hadamard(std::size_t n);

// Materializes the combinatorial-graph Laplacian as an iterated Kronecker sum
// of [[1,-1],[-1,1]] and eigendecomposes it numerically. Degenerate
// eigenspaces are rotated onto the joint eigenbasis of the per-coordinate
// Laplacians (which commute with L), so each returned column is an individual
// eigenvector rather than an arbitrary basis of its eigenspace. Test oracle.
LaplacianSpectrum laplacian_eigens_oracle(std::size_t n, std::size_t cap = kLaplacianOracleCap);

}  // namespace mercbo
