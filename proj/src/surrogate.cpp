#include "mercbo/surrogate.hpp"

#include "mercbo/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace mercbo {

namespace {

constexpr double kJitterFactor = 1e-10;
constexpr int kJitterEscalations = 6;

bool factor_ok(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  if (llt.info() != Eigen::Success) return false;
  const auto diag = llt.matrixLLT().diagonal();
  return diag.allFinite() && (diag.array() > 0.0).all();
}

// Cholesky with escalating diagonal jitter, starting at factor * trace / D.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& m, double jitter_factor = kJitterFactor) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (factor_ok(llt)) return llt;

  double base = jitter_factor * m.trace() / double(std::max<Eigen::Index>(m.rows(), 1));
  if (!(base > 0.0) || !std::isfinite(base)) base = jitter_factor;
  double jitter = base;
  for (int k = 0; k <= kJitterEscalations; ++k, jitter *= 10.0) {
    llt.compute(m + jitter * Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    if (factor_ok(llt)) return llt;
  }
  throw SingularModel("cholesky factorization failed after jitter escalation");
}

void check_prior(const std::optional<Eigen::VectorXd>& prior_scales, Eigen::Index dim) {
  if (!prior_scales) return;
  if (prior_scales->size() != dim) {
    throw DimensionMismatch("prior scales have length " + std::to_string(prior_scales->size()) +
                            ", expected " + std::to_string(dim));
  }
  if (!prior_scales->allFinite() || (prior_scales->array() <= 0.0).any()) {
    throw InvalidConfiguration("prior scales must be finite and positive");
  }
}

void check_noise(double noise_variance) {
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw InvalidConfiguration("noise variance must be finite and positive");
  }
}

double gaussian_log_evidence(const Eigen::MatrixXd& cov, const Eigen::VectorXd& y, double jitter_factor) {
  const auto llt = robust_llt(cov, jitter_factor);
  const Eigen::VectorXd alpha = llt.matrixL().solve(y);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (alpha.squaredNorm() + logdet + double(y.size()) * std::log(2.0 * std::numbers::pi));
}

}  // namespace

TrainingSet::TrainingSet(std::vector<BinaryPoint> points, Eigen::VectorXd y, FeatureBasis<double> basis)
    : points_(std::move(points)), y_(std::move(y)), basis_(std::move(basis)) {
  if (Eigen::Index(points_.size()) != y_.size()) {
    throw DimensionMismatch("training set: " + std::to_string(points_.size()) + " points but " +
                            std::to_string(y_.size()) + " outputs");
  }
  if (!y_.allFinite()) throw InvalidConfiguration("training set: non-finite outputs");
  features_ = feature_matrix<double>(points_, basis_);
}

TrainingSet TrainingSet::with_beta(double beta) const { return TrainingSet(points_, y_, basis_.with_beta(beta)); }

Eigen::VectorXd strong_hierarchy_scales(const FeatureBasis<double>& basis, std::span<const double> variable_scales) {
  if (variable_scales.size() != basis.dimension()) {
    throw DimensionMismatch("strong hierarchy: expected " + std::to_string(basis.dimension()) + " variable scales");
  }
  for (double v : variable_scales) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidConfiguration("strong hierarchy: variable scales must be positive");
  }
  Eigen::VectorXd scales(Eigen::Index(basis.size()));
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double s = 1.0;
    for (auto v : basis.subset(i)) s *= variable_scales[v];
    scales[Eigen::Index(i)] = s;
  }
  return scales;
}

PosteriorModel::PosteriorModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance, double noise_variance,
                               std::optional<Eigen::VectorXd> prior_scales)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      noise_variance_(noise_variance),
      prior_scales_(std::move(prior_scales)) {
  const auto d = mean_.size();
  if (covariance_.rows() != d || covariance_.cols() != d) throw DimensionMismatch("posterior: covariance shape");
  check_prior(prior_scales_, d);
  check_noise(noise_variance_);
  if (!mean_.allFinite() || !covariance_.allFinite()) throw InvalidConfiguration("posterior: non-finite moments");
  factor_ = robust_llt(covariance_).matrixL();
}

PosteriorModel fit_posterior(const TrainingSet& train, double noise_variance,
                             const std::optional<Eigen::VectorXd>& prior_scales) {
  if (train.size() == 0) throw InvalidConfiguration("fit_posterior: empty training set");
  check_noise(noise_variance);
  const auto& phi = train.features();
  const Eigen::Index d = phi.cols();
  check_prior(prior_scales, d);
  if (!phi.allFinite()) throw InvalidConfiguration("fit_posterior: non-finite features");

  Eigen::MatrixXd precision = phi.transpose() * phi;
  if (prior_scales) {
    precision.diagonal().array() += noise_variance / prior_scales->array();
  } else {
    precision.diagonal().array() += noise_variance;
  }
  const auto llt = robust_llt(precision);

  Eigen::VectorXd mean = llt.solve(phi.transpose() * train.y());
  Eigen::MatrixXd cov = noise_variance * llt.solve(Eigen::MatrixXd::Identity(d, d));
  cov = 0.5 * (cov + cov.transpose()).eval();
  return PosteriorModel(std::move(mean), std::move(cov), noise_variance, prior_scales);
}

Eigen::VectorXd sample_theta(const PosteriorModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(Eigen::Index(model.dimension()));
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  return model.mean() + model.covariance_factor().triangularView<Eigen::Lower>() * z;
}

Prediction predict(const PosteriorModel& model, const Eigen::VectorXd& phi) {
  if (std::size_t(phi.size()) != model.dimension()) throw DimensionMismatch("predict: feature dimension mismatch");
  return {model.mean().dot(phi), phi.dot(model.covariance() * phi) + model.noise_variance()};
}

double log_evidence(const TrainingSet& train, double beta, double noise_variance,
                    const std::optional<Eigen::VectorXd>& prior_scales) {
  if (train.size() == 0) throw InvalidConfiguration("log_evidence: empty training set");
  check_noise(noise_variance);
  const TrainingSet rebuilt = train.with_beta(beta);
  const auto& phi = rebuilt.features();
  check_prior(prior_scales, phi.cols());

  const Eigen::Index n = phi.rows();
  Eigen::MatrixXd cov = noise_variance * Eigen::MatrixXd::Identity(n, n);
  if (prior_scales) {
    cov += phi * prior_scales->asDiagonal() * phi.transpose();
  } else {
    cov += phi * phi.transpose();
  }
  return gaussian_log_evidence(cov, train.y(), kJitterFactor);
}

HyperConfig HyperConfig::defaults() { return {log_spaced(0.01, 2.0, 10), log_spaced(1e-4, 1.0, 6), kJitterFactor}; }

std::vector<double> log_spaced(double lo, double hi, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {lo};
  std::vector<double> out(count);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(a + (b - a) * double(i) / double(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

HyperParameters fit_hyperparameters(const TrainingSet& train, const HyperConfig& cfg,
                                    const std::optional<Eigen::VectorXd>& prior_scales) {
  if (cfg.beta_grid.empty() || cfg.noise_grid.empty()) throw InvalidConfiguration("hyperparameter grids must be non-empty");
  if (!(cfg.jitter > 0.0)) throw InvalidConfiguration("jitter must be positive");
  if (train.size() == 0) throw InvalidConfiguration("fit_hyperparameters: empty training set");

  auto betas = cfg.beta_grid;
  auto noises = cfg.noise_grid;
  std::sort(betas.begin(), betas.end());
  std::sort(noises.begin(), noises.end());

  const auto& basis = train.basis();
  const Eigen::Index n = Eigen::Index(train.size());

  // Without a per-feature prior, Phi Phi^T = sum_k e^{-2 beta k} G_k where G_k
  // is the Gram matrix of the order-k parity columns; build those once.
  std::vector<Eigen::MatrixXd> order_grams;
  if (!prior_scales) {
    const Eigen::MatrixXd parity = feature_matrix<double>(train.points(), basis.with_beta(0.0));
    order_grams.assign(basis.max_order() + 1, Eigen::MatrixXd::Zero(n, n));
    std::size_t col = 0;
    for (std::size_t k = 0; k <= basis.max_order(); ++k) {
      const auto count = Eigen::Index(binomial(basis.dimension(), k));
      const auto block = parity.middleCols(Eigen::Index(col), count);
      order_grams[k].selfadjointView<Eigen::Lower>().rankUpdate(block);
      order_grams[k] = order_grams[k].selfadjointView<Eigen::Lower>();
      col += std::size_t(count);
    }
  } else {
    check_prior(prior_scales, Eigen::Index(basis.size()));
  }

  std::optional<HyperParameters> best;
  for (double beta : betas) {
    if (!(beta >= 0.0)) throw InvalidConfiguration("beta grid entries must be non-negative");
    Eigen::MatrixXd signal;
    if (!prior_scales) {
      signal = Eigen::MatrixXd::Zero(n, n);
      for (std::size_t k = 0; k < order_grams.size(); ++k) signal += std::exp(-2.0 * beta * double(k)) * order_grams[k];
    } else {
      const Eigen::MatrixXd phi = feature_matrix<double>(train.points(), basis.with_beta(beta));
      signal = phi * prior_scales->asDiagonal() * phi.transpose();
    }
    for (double noise : noises) {
      check_noise(noise);
      double value;
      try {
        Eigen::MatrixXd cov = signal;
        cov.diagonal().array() += noise;
        value = gaussian_log_evidence(cov, train.y(), cfg.jitter);
      } catch (const SingularModel&) {
        continue;
      }
      if (!std::isfinite(value)) continue;
      if (!best || value > best->log_evidence) best = HyperParameters{beta, noise, value};
    }
  }
  if (!best) throw SingularModel("fit_hyperparameters: every grid evaluation failed");
  return *best;
}

}  // namespace mercbo
