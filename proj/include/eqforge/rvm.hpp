#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqforge/error.hpp"

namespace eqforge {

/// eta = phi * w + noise, with one label per column of phi.
struct RegressionProblem {
  Eigen::VectorXd eta;
  Eigen::MatrixXd phi;
  std::vector<std::string> term_labels;

  std::size_t n_samples() const { return static_cast<std::size_t>(phi.rows()); }
  std::size_t n_terms() const { return static_cast<std::size_t>(phi.cols()); }

  /// Throws SizeError/DomainError if shapes disagree or entries are not finite.
  void validate() const;

  RegressionProblem select_rows(std::span<const std::size_t> rows) const;
  RegressionProblem select_columns(std::span<const std::size_t> columns) const;
};

/// Prior precisions (one per column) and noise variance. An infinite alpha
/// prunes its column: the weight is pinned at zero.
struct Hyperparameters {
  Eigen::VectorXd alpha;
  double sigma2 = 1.0;

  std::vector<std::size_t> active() const;
};

/// Gaussian weight posterior. Entries outside `active` are exactly zero.
struct WeightPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  std::vector<std::size_t> active;
  double log_evidence = 0.0;

  Eigen::VectorXd stddev() const;
};

enum class EvidenceStrategy {
  kSequential,  // add / delete / re-estimate one basis function per step
  kFixedPoint,  // update every alpha at once, prune the ones that diverge
  kCombined,    // sequential from one basis and from a fixed-point warm start; best evidence
};

struct ConvergenceConfig {
  int max_iterations = 1000;
  double log_alpha_tolerance = 1e-6;
  double sigma2_tolerance = 1e-6;
  // Also converged once no single update gains more log evidence than this.
  double evidence_tolerance = 1e-10;
  // Precisions above this (in unit-norm column units) count as infinite.
  double alpha_infinity = 1e12;
  // Candidates whose cosine with an active column exceeds this are not added.
  double alignment_max = 1.0 - 1e-3;
  // Noise variance floor relative to the mean square of eta.
  double min_sigma2_ratio = 1e-10;
  EvidenceStrategy strategy = EvidenceStrategy::kCombined;
  // Warm-start sweeps for kCombined.
  int fixed_point_sweeps = 200;
};

enum class EvidenceForm {
  kDense,      // N x N covariance of eta
  kWoodbury,   // M x M posterior precision
};

/// log p(eta | alpha, sigma2) for the Gaussian marginal with covariance
/// sigma2 I + phi A^-1 phi^T. Pruned columns do not contribute.
double log_marginal_likelihood(const RegressionProblem& problem, const Hyperparameters& hyper,
                               EvidenceForm form = EvidenceForm::kWoodbury);

/// Closed-form posterior: Sigma = (phi^T phi / sigma2 + diag(alpha))^-1 and
/// mu = Sigma phi^T eta / sigma2, restricted to the finite-alpha columns.
WeightPosterior posterior(const RegressionProblem& problem, const Hyperparameters& hyper);

struct EvidenceFit {
  Hyperparameters hyper;
  WeightPosterior posterior;
  int iterations = 0;
  // Log evidence after every accepted update.
  std::vector<double> evidence_trace;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, EvidenceFit last) : Error(what), last_(std::move(last)) {}
  const EvidenceFit& last_iterate() const { return last_; }

 private:
  EvidenceFit last_;
};

/// Type-II maximum likelihood over (alpha, sigma2), followed by the posterior
/// at the optimum. Throws ConvergenceError carrying the last iterate when the
/// iteration cap is reached.
EvidenceFit maximize_evidence(const RegressionProblem& problem, const ConvergenceConfig& config = {});

}  // namespace eqforge
