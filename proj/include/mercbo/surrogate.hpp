#pragma once

// Bayesian linear surrogate f(x) = theta^T phi(x) over Mercer features.

#include "mercbo/binary_point.hpp"
#include "mercbo/features.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace mercbo {

class TrainingSet {
 public:
  TrainingSet(std::vector<BinaryPoint> points, Eigen::VectorXd y, FeatureBasis<double> basis);

  std::size_t size() const { return points_.size(); }
  const std::vector<BinaryPoint>& points() const { return points_; }
  const Eigen::VectorXd& y() const { return y_; }
  const Eigen::MatrixXd& features() const { return features_; }
  const FeatureBasis<double>& basis() const { return basis_; }

  // Same points and outputs, features recomputed under another diffusion scale.
  TrainingSet with_beta(double beta) const;

 private:
  std::vector<BinaryPoint> points_;
  Eigen::VectorXd y_;
  FeatureBasis<double> basis_;
  Eigen::MatrixXd features_;
};

// Diagonal prior covariance Upsilon with strong-hierarchy structure: the entry
// for subset S is the product of the per-variable scales over S (1 for the
// empty set).
Eigen::VectorXd strong_hierarchy_scales(const FeatureBasis<double>& basis, std::span<const double> variable_scales);

class PosteriorModel {
 public:
  // Factorizes `covariance` (with jitter escalation if needed).
  PosteriorModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double noise_variance,
                 std::optional<Eigen::VectorXd> prior_scales = std::nullopt);

  std::size_t dimension() const { return std::size_t(mean_.size()); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  // Lower triangular L with L L^T = covariance (+ jitter).
  const Eigen::MatrixXd& covariance_factor() const { return factor_; }
  double noise_variance() const { return noise_variance_; }
  const std::optional<Eigen::VectorXd>& prior_scales() const { return prior_scales_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd factor_;
  double noise_variance_;
  std::optional<Eigen::VectorXd> prior_scales_;
};

// mu = (Phi^T Phi + s2 Upsilon^{-1})^{-1} Phi^T y, Sigma = s2 (Phi^T Phi + s2 Upsilon^{-1})^{-1}.
PosteriorModel fit_posterior(const TrainingSet& train, double noise_variance,
                             const std::optional<Eigen::VectorXd>& prior_scales = std::nullopt);

// theta = mu + L z, z ~ N(0, I) drawn from a generator seeded with `seed`.
Eigen::VectorXd sample_theta(const PosteriorModel& model, std::uint64_t seed);

struct Prediction {
  double mean;
  double variance;
};

Prediction predict(const PosteriorModel& model, const Eigen::VectorXd& phi);

double log_evidence(const TrainingSet& train, double beta, double noise_variance,
                    const std::optional<Eigen::VectorXd>& prior_scales = std::nullopt);

struct HyperConfig {
  std::vector<double> beta_grid;
  std::vector<double> noise_grid;
  double jitter = 1e-10;

  // 10 log-spaced betas in [0.01, 2], 6 log-spaced noise variances in [1e-4, 1].
  static HyperConfig defaults();
};

struct HyperParameters {
  double beta;
  double noise_variance;
  double log_evidence;
};

std::vector<double> log_spaced(double lo, double hi, std::size_t count);

// Grid argmax of log_evidence; ties go to the smaller beta, then the smaller
// noise variance.
HyperParameters fit_hyperparameters(const TrainingSet& train, const HyperConfig& cfg,
                                    const std::optional<Eigen::VectorXd>& prior_scales = std::nullopt);

}  // namespace mercbo
