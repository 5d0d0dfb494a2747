#include "eqforge/tsbr.hpp"

#include <cmath>
#include <limits>

namespace eqforge {

std::vector<std::string> SparseModel::support() const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(t.label);
  return out;
}

double model_selection_criterion(const Eigen::VectorXd& mean, const Eigen::MatrixXd& covariance) {
  double total = 0.0;
  bool any = false;
  for (Eigen::Index j = 0; j < mean.size(); ++j) {
    if (mean[j] == 0.0) continue;
    any = true;
    total += covariance(j, j) / (mean[j] * mean[j]);
  }
  return any ? total : std::numeric_limits<double>::infinity();
}

double model_selection_criterion(const WeightPosterior& posterior) {
  return model_selection_criterion(posterior.mean, posterior.covariance);
}

SparseModel fit_tsbr(const RegressionProblem& problem, const TsbrConfig& config) {
  problem.validate();
  if (!(config.threshold >= 0.0)) throw ConfigError("threshold must be non-negative");
  if (config.max_outer_iterations < 1) throw ConfigError("max_outer_iterations must be positive");

  const auto m = static_cast<Eigen::Index>(problem.n_terms());
  SparseModel model;
  model.n_samples_used = problem.n_samples();
  model.mean = Eigen::VectorXd::Zero(m);
  model.covariance = Eigen::MatrixXd::Zero(m, m);

  auto threshold_pattern = [&](Eigen::VectorXd& mean) {
    std::vector<std::size_t> nonzero;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::abs(mean[j]) < config.threshold) mean[j] = 0.0;
      if (mean[j] != 0.0) nonzero.push_back(static_cast<std::size_t>(j));
    }
    return nonzero;
  };

  // First pass on the full dictionary.
  EvidenceFit fit = maximize_evidence(problem, config.rvm);
  Eigen::VectorXd mean = fit.posterior.mean;
  Eigen::MatrixXd last_covariance = fit.posterior.covariance;
  std::vector<std::size_t> last_columns(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) last_columns[static_cast<std::size_t>(j)] = static_cast<std::size_t>(j);
  std::vector<std::size_t> pattern = threshold_pattern(mean);
  model.log.push_back({static_cast<std::size_t>(m), pattern.size(), fit.iterations});

  int outer = 0;
  while (!pattern.empty()) {
    if (++outer > config.max_outer_iterations)
      throw ConvergenceError("threshold loop exceeded " + std::to_string(config.max_outer_iterations) +
                                 " outer iterations",
                             fit);
    const std::vector<std::size_t> columns = pattern;
    const RegressionProblem reduced = problem.select_columns(columns);
    fit = maximize_evidence(reduced, config.rvm);
    Eigen::VectorXd next = Eigen::VectorXd::Zero(m);
    for (std::size_t c = 0; c < columns.size(); ++c)
      next[static_cast<Eigen::Index>(columns[c])] = fit.posterior.mean[static_cast<Eigen::Index>(c)];
    mean = next;
    last_columns = columns;
    last_covariance = fit.posterior.covariance;
    pattern = threshold_pattern(mean);
    model.log.push_back({columns.size(), pattern.size(), fit.iterations});
    if (pattern == columns) break;
  }

  // Embed the last posterior covariance on the surviving components.
  model.mean = mean;
  for (std::size_t a = 0; a < last_columns.size(); ++a) {
    const auto ja = static_cast<Eigen::Index>(last_columns[a]);
    if (mean[ja] == 0.0) continue;
    for (std::size_t b = 0; b < last_columns.size(); ++b) {
      const auto jb = static_cast<Eigen::Index>(last_columns[b]);
      if (mean[jb] == 0.0) continue;
      model.covariance(ja, jb) = last_covariance(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    if (mean[j] == 0.0) continue;
    TermEstimate t;
    t.index = static_cast<std::size_t>(j);
    t.label = problem.term_labels.empty() ? "w" + std::to_string(j) : problem.term_labels[static_cast<std::size_t>(j)];
    t.mean = mean[j];
    t.std = std::sqrt(std::max(model.covariance(j, j), 0.0));
    model.terms.push_back(std::move(t));
  }
  model.criterion = model_selection_criterion(model.mean, model.covariance);
  return model;
}

}  // namespace eqforge
