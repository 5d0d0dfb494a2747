#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqforge/rvm.hpp"

namespace eqforge {

struct TsbrConfig {
  double threshold = 0.1;
  ConvergenceConfig rvm;
  int max_outer_iterations = 100;
};

struct TermEstimate {
  std::string label;
  std::size_t index = 0;  // column in the original problem
  double mean = 0.0;
  double std = 0.0;
};

struct TsbrIteration {
  std::size_t columns_in = 0;       // columns handed to the evidence fit
  std::size_t kept_after_threshold = 0;
  int rvm_iterations = 0;
};

/// Sparse model produced by the threshold loop. `mean` and `covariance` are
/// full size (M and M x M) with zeros outside the surviving terms.
struct SparseModel {
  std::vector<TermEstimate> terms;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double criterion = 0.0;
  std::size_t n_samples_used = 0;
  std::vector<TsbrIteration> log;

  std::size_t active_count() const { return terms.size(); }
  bool empty() const { return terms.empty(); }
  std::vector<std::string> support() const;
};

/// Sum of Sigma_jj / mu_j^2 over the nonzero weights; +infinity when there
/// are none.
double model_selection_criterion(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance);
double model_selection_criterion(const WeightPosterior& posterior);

/// Alternates evidence maximization with hard thresholding of |mean| < threshold
/// on the surviving columns until the zero pattern repeats or every weight is zero.
SparseModel fit_tsbr(const RegressionProblem& problem, const TsbrConfig& config = {});

}  // namespace eqforge
