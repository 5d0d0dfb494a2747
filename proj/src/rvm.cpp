#include "eqforge/rvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

namespace eqforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)
// Add/delete moves smaller than this are treated as no-ops.
constexpr double kMinEvidenceGain = 1e-10;
constexpr double kZeroFactor = 1e-12;

bool factorize(const Eigen::MatrixXd& h, Eigen::LLT<Eigen::MatrixXd>& llt) {
  llt.compute(h);
  if (llt.info() == Eigen::Success) return true;
  const double jitter = 1e-10 * h.trace() / static_cast<double>(std::max<Eigen::Index>(h.rows(), 1));
  Eigen::MatrixXd jittered = h;
  jittered.diagonal().array() += jitter;
  llt.compute(jittered);
  return llt.info() == Eigen::Success;
}

// Columns rescaled to unit norm; the evidence is invariant under this change
// of variables (alpha_j scales by the squared column norm).
struct NormalizedProblem {
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  Eigen::VectorXd scale;
  std::vector<bool> usable;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd gram;
  Eigen::VectorXd phi_t_eta;
  Eigen::VectorXd eta;
  double eta_sq = 0.0;
};

NormalizedProblem normalize(const RegressionProblem& problem) {
  NormalizedProblem np;
  np.n = problem.phi.rows();
  np.m = problem.phi.cols();
  np.scale = problem.phi.colwise().norm().transpose();
  np.usable.resize(static_cast<std::size_t>(np.m));
  for (Eigen::Index j = 0; j < np.m; ++j) {
    np.usable[static_cast<std::size_t>(j)] = np.scale[j] > 0.0;
    if (np.scale[j] == 0.0) np.scale[j] = 1.0;
  }
  np.phi = problem.phi * np.scale.cwiseInverse().asDiagonal();
  np.gram = np.phi.transpose() * np.phi;
  np.phi_t_eta = np.phi.transpose() * problem.eta;
  np.eta = problem.eta;
  np.eta_sq = problem.eta.squaredNorm();
  return np;
}

struct Stats {
  Eigen::MatrixXd sigma;  // k x k
  Eigen::VectorXd mu;     // k
  Eigen::VectorXd s;      // M, "sparsity" factors S_m
  Eigen::VectorXd q;      // M, "quality" factors Q_m
  double log_ml = 0.0;
};

Stats compute_stats(const NormalizedProblem& np, const std::vector<std::size_t>& active, const Eigen::VectorXd& alpha,
                    double beta, bool with_factors) {
  Stats st;
  const auto k = static_cast<Eigen::Index>(active.size());
  const auto n = static_cast<double>(np.n);
  if (k == 0) {
    st.log_ml = -0.5 * (n * kLog2Pi - n * std::log(beta) + beta * np.eta_sq);
    if (with_factors) {
      st.s = beta * np.gram.diagonal();
      st.q = beta * np.phi_t_eta;
    }
    return st;
  }
  Eigen::MatrixXd h(k, k);
  Eigen::VectorXd b(k);
  double log_alpha_sum = 0.0;
  for (Eigen::Index a = 0; a < k; ++a) {
    const auto ia = static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]);
    b[a] = np.phi_t_eta[ia];
    log_alpha_sum += std::log(alpha[ia]);
    for (Eigen::Index c = 0; c < k; ++c)
      h(a, c) = beta * np.gram(ia, static_cast<Eigen::Index>(active[static_cast<std::size_t>(c)]));
    h(a, a) += alpha[ia];
  }
  Eigen::LLT<Eigen::MatrixXd> llt;
  if (!factorize(h, llt)) throw NumericalError("posterior precision is not positive definite");
  st.sigma = llt.solve(Eigen::MatrixXd::Identity(k, k));
  st.mu = beta * (st.sigma * b);
  const Eigen::MatrixXd lower = llt.matrixL();
  const double log_det_h = 2.0 * lower.diagonal().array().log().sum();
  const double quad = beta * np.eta_sq - beta * b.dot(st.mu);
  st.log_ml = -0.5 * (n * kLog2Pi - n * std::log(beta) + log_det_h - log_alpha_sum + quad);
  if (with_factors) {
    Eigen::MatrixXd x(np.m, k);
    for (Eigen::Index a = 0; a < k; ++a) x.col(a) = np.gram.col(static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]));
    const Eigen::MatrixXd w = llt.matrixL().solve(x.transpose());  // k x M
    st.s = beta * np.gram.diagonal() - beta * beta * w.colwise().squaredNorm().transpose();
    st.q = beta * np.phi_t_eta - beta * (x * st.mu);
  }
  return st;
}

// Contribution of one basis function to the log evidence, in terms of its
// leave-one-out factors s and q: 0.5 [log(alpha / (alpha + s)) + q^2 / (alpha + s)].
double basis_contribution(double alpha, double s, double q) {
  return 0.5 * (std::log(alpha / (alpha + s)) + q * q / (alpha + s));
}

struct FitState {
  std::vector<std::size_t> active;
  Eigen::VectorXd alpha;  // M, +inf when pruned
  double beta = 1.0;
};

double sigma2_floor(const NormalizedProblem& np, const ConvergenceConfig& config) {
  const double mean_sq = np.eta_sq / static_cast<double>(np.n);
  return config.min_sigma2_ratio * std::max(mean_sq, 1e-300);
}

double residual_sq(const NormalizedProblem& np, const std::vector<std::size_t>& active, const Eigen::VectorXd& mu) {
  Eigen::VectorXd r = np.eta;
  for (std::size_t a = 0; a < active.size(); ++a)
    r.noalias() -= mu[static_cast<Eigen::Index>(a)] * np.phi.col(static_cast<Eigen::Index>(active[a]));
  return r.squaredNorm();
}

// Re-estimates sigma2 from the current posterior. The candidate from the
// fixed-point rule is only accepted if it does not lower the evidence;
// otherwise a golden-section search between the old and new values is used.
// Returns the relative change of sigma2.
double update_noise(const NormalizedProblem& np, FitState& state, const Stats& stats, const ConvergenceConfig& config,
                    double& log_ml) {
  const double old_sigma2 = 1.0 / state.beta;
  double gamma_sum = 0.0;
  for (std::size_t a = 0; a < state.active.size(); ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    gamma_sum += 1.0 - state.alpha[static_cast<Eigen::Index>(state.active[a])] * stats.sigma(ai, ai);
  }
  const double dof = static_cast<double>(np.n) - gamma_sum;
  const double floor = sigma2_floor(np, config);
  double candidate = floor;
  if (dof > kZeroFactor) candidate = residual_sq(np, state.active, stats.mu) / dof;
  candidate = std::max(candidate, floor);
  if (!std::isfinite(candidate) || candidate == old_sigma2) return 0.0;

  auto evidence_at = [&](double sigma2) {
    return compute_stats(np, state.active, state.alpha, 1.0 / sigma2, false).log_ml;
  };
  double best_sigma2 = candidate;
  double best = evidence_at(candidate);
  if (best < log_ml) {
    // Golden-section search on log sigma2 over the segment [old, candidate].
    double lo = std::log(std::min(old_sigma2, candidate));
    double hi = std::log(std::max(old_sigma2, candidate));
    constexpr double kPhi = 0.6180339887498949;
    double x1 = hi - kPhi * (hi - lo);
    double x2 = lo + kPhi * (hi - lo);
    double f1 = evidence_at(std::exp(x1));
    double f2 = evidence_at(std::exp(x2));
    for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + kPhi * (hi - lo);
        f2 = evidence_at(std::exp(x2));
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - kPhi * (hi - lo);
        f1 = evidence_at(std::exp(x1));
      }
    }
    if (f1 >= f2) {
      best = f1;
      best_sigma2 = std::exp(x1);
    } else {
      best = f2;
      best_sigma2 = std::exp(x2);
    }
    if (best < log_ml) return 0.0;
  }
  state.beta = 1.0 / best_sigma2;
  log_ml = best;
  return std::abs(best_sigma2 - old_sigma2) / old_sigma2;
}

bool aligned_with_active(const NormalizedProblem& np, const std::vector<std::size_t>& active, Eigen::Index m,
                         double alignment_max) {
  for (auto a : active)
    if (std::abs(np.gram(m, static_cast<Eigen::Index>(a))) > alignment_max) return true;
  return false;
}

EvidenceFit finish(const RegressionProblem& problem, const NormalizedProblem& np, const FitState& state,
                   const std::vector<double>& trace, int iterations) {
  EvidenceFit fit;
  fit.iterations = iterations;
  fit.evidence_trace = trace;
  fit.hyper.sigma2 = 1.0 / state.beta;
  fit.hyper.alpha = Eigen::VectorXd::Constant(np.m, kInf);
  std::vector<std::size_t> active = state.active;
  std::sort(active.begin(), active.end());
  for (auto a : active) {
    const auto ai = static_cast<Eigen::Index>(a);
    fit.hyper.alpha[ai] = state.alpha[ai] * np.scale[ai] * np.scale[ai];
  }
  fit.posterior = posterior(problem, fit.hyper);
  return fit;
}

FitState initial_state(const NormalizedProblem& np, const ConvergenceConfig& config, EvidenceStrategy strategy) {
  FitState state;
  state.alpha = Eigen::VectorXd::Constant(np.m, kInf);
  const double mean = np.eta.mean();
  const double variance = (np.eta.array() - mean).square().mean();
  const double sigma2 = std::max(0.1 * variance, sigma2_floor(np, config));
  state.beta = 1.0 / sigma2;
  if (strategy == EvidenceStrategy::kFixedPoint) {
    for (Eigen::Index j = 0; j < np.m; ++j) {
      if (!np.usable[static_cast<std::size_t>(j)]) continue;
      state.active.push_back(static_cast<std::size_t>(j));
      state.alpha[j] = 1.0;
    }
    return state;
  }
  // Seed with the column of maximal normalized correlation.
  Eigen::Index best = -1;
  double best_proj = 0.0;
  for (Eigen::Index j = 0; j < np.m; ++j) {
    if (!np.usable[static_cast<std::size_t>(j)]) continue;
    const double proj = np.phi_t_eta[j] * np.phi_t_eta[j];
    if (proj > best_proj) {
      best_proj = proj;
      best = j;
    }
  }
  if (best < 0) return state;
  state.active.push_back(static_cast<std::size_t>(best));
  state.alpha[best] = best_proj > sigma2 ? 1.0 / (best_proj - sigma2) : 1.0 / best_proj;
  return state;
}

EvidenceFit maximize_sequential(const RegressionProblem& problem, const NormalizedProblem& np,
                                const ConvergenceConfig& config, FitState state) {
  std::vector<double> trace;
  Stats stats = compute_stats(np, state.active, state.alpha, state.beta, true);
  double log_ml = stats.log_ml;
  trace.push_back(log_ml);

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    // Score every candidate move.
    enum class Move { kNone, kAdd, kDelete, kUpdate };
    Move best_move = Move::kNone;
    Eigen::Index best_j = -1;
    double best_gain = 0.0;
    double best_alpha = kInf;
    double max_log_alpha_change = 0.0;
    double best_update_gain = 0.0;
    bool structural_pending = false;

    std::vector<Eigen::Index> position(static_cast<std::size_t>(np.m), -1);
    for (std::size_t a = 0; a < state.active.size(); ++a)
      position[state.active[a]] = static_cast<Eigen::Index>(a);

    for (Eigen::Index j = 0; j < np.m; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (!np.usable[ju]) continue;
      const double big_s = stats.s[j];
      const double big_q = stats.q[j];
      if (position[ju] >= 0) {
        const double alpha = state.alpha[j];
        if (!(alpha > big_s)) continue;
        const double s = alpha * big_s / (alpha - big_s);
        const double q = alpha * big_q / (alpha - big_s);
        const double theta = q * q - s;
        const double current = basis_contribution(alpha, s, q);
        double new_alpha = theta > kZeroFactor ? s * s / theta : kInf;
        if (new_alpha > config.alpha_infinity) new_alpha = kInf;
        if (std::isinf(new_alpha)) {
          const double gain = -current;
          if (gain > kMinEvidenceGain) structural_pending = true;
          if (gain > best_gain) {
            best_gain = gain;
            best_move = Move::kDelete;
            best_j = j;
          }
        } else {
          max_log_alpha_change = std::max(max_log_alpha_change, std::abs(std::log(new_alpha / alpha)));
          const double gain = basis_contribution(new_alpha, s, q) - current;
          best_update_gain = std::max(best_update_gain, gain);
          if (gain > best_gain) {
            best_gain = gain;
            best_move = Move::kUpdate;
            best_j = j;
            best_alpha = new_alpha;
          }
        }
      } else {
        const double theta = big_q * big_q - big_s;
        if (big_s <= kZeroFactor || theta <= kZeroFactor) continue;
        const double new_alpha = big_s * big_s / theta;
        if (new_alpha > config.alpha_infinity) continue;
        if (aligned_with_active(np, state.active, j, config.alignment_max)) continue;
        const double gain = basis_contribution(new_alpha, big_s, big_q);
        if (gain > kMinEvidenceGain) structural_pending = true;
        if (gain > best_gain) {
          best_gain = gain;
          best_move = Move::kAdd;
          best_j = j;
          best_alpha = new_alpha;
        }
      }
    }

    // Along flat ridges alpha can keep drifting while the evidence is stuck;
    // a negligible best gain counts as converged too.
    const bool alpha_converged =
        !structural_pending &&
        (max_log_alpha_change < config.log_alpha_tolerance || best_update_gain < config.evidence_tolerance);
    if ((best_move == Move::kAdd || best_move == Move::kDelete) && best_gain <= kMinEvidenceGain)
      best_move = Move::kNone;

    if (!alpha_converged && best_move != Move::kNone) {
      const auto ju = static_cast<std::size_t>(best_j);
      switch (best_move) {
        case Move::kAdd:
          state.active.push_back(ju);
          state.alpha[best_j] = best_alpha;
          break;
        case Move::kDelete:
          state.active.erase(std::find(state.active.begin(), state.active.end(), ju));
          state.alpha[best_j] = kInf;
          break;
        case Move::kUpdate:
          state.alpha[best_j] = best_alpha;
          break;
        case Move::kNone:
          break;
      }
      stats = compute_stats(np, state.active, state.alpha, state.beta, false);
      // An exact single-coordinate maximization cannot lower the evidence;
      // a drop beyond round-off means the factorization lost accuracy.
      log_ml = stats.log_ml;
    }

    const double before_noise = log_ml;
    const double sigma2_change = update_noise(np, state, stats, config, log_ml);
    const bool noise_converged =
        sigma2_change < config.sigma2_tolerance || log_ml - before_noise < config.evidence_tolerance;
    trace.push_back(log_ml);
    stats = compute_stats(np, state.active, state.alpha, state.beta, true);
    log_ml = stats.log_ml;

    if (alpha_converged && noise_converged) return finish(problem, np, state, trace, iter);
  }
  throw ConvergenceError("evidence maximization did not converge in " + std::to_string(config.max_iterations) +
                             " iterations",
                         finish(problem, np, state, trace, config.max_iterations));
}

// Runs up to `budget` simultaneous re-estimation sweeps in place. Returns the
// iteration count on convergence, 0 otherwise.
int run_fixed_point(const NormalizedProblem& np, const ConvergenceConfig& config, FitState& state,
                    std::vector<double>& trace, int budget) {
  for (int iter = 1; iter <= budget; ++iter) {
    Stats stats = compute_stats(np, state.active, state.alpha, state.beta, false);
    trace.push_back(stats.log_ml);
    double max_change = 0.0;
    bool pruned = false;
    double gamma_sum = 0.0;
    std::vector<std::size_t> kept;
    for (std::size_t a = 0; a < state.active.size(); ++a) {
      const auto ai = static_cast<Eigen::Index>(a);
      const auto j = static_cast<Eigen::Index>(state.active[a]);
      const double gamma = 1.0 - state.alpha[j] * stats.sigma(ai, ai);
      gamma_sum += gamma;
      const double mu2 = stats.mu[ai] * stats.mu[ai];
      const double new_alpha = mu2 > 0.0 ? gamma / mu2 : kInf;
      if (!(new_alpha <= config.alpha_infinity) || !(new_alpha > 0.0)) {
        state.alpha[j] = kInf;
        pruned = true;
        continue;
      }
      max_change = std::max(max_change, std::abs(std::log(new_alpha / state.alpha[j])));
      state.alpha[j] = new_alpha;
      kept.push_back(state.active[a]);
    }
    const double old_sigma2 = 1.0 / state.beta;
    const double dof = static_cast<double>(np.n) - gamma_sum;
    double sigma2 = sigma2_floor(np, config);
    if (dof > kZeroFactor) sigma2 = std::max(sigma2, residual_sq(np, state.active, stats.mu) / dof);
    state.active = kept;
    state.beta = 1.0 / sigma2;
    const double sigma2_change = std::abs(sigma2 - old_sigma2) / old_sigma2;
    if (!pruned && max_change < config.log_alpha_tolerance && sigma2_change < config.sigma2_tolerance) return iter;
    if (state.active.empty()) return iter;
  }
  return 0;
}

EvidenceFit maximize_fixed_point(const RegressionProblem& problem, const NormalizedProblem& np,
                                 const ConvergenceConfig& config) {
  FitState state = initial_state(np, config, EvidenceStrategy::kFixedPoint);
  std::vector<double> trace;
  const int iterations = run_fixed_point(np, config, state, trace, config.max_iterations);
  if (iterations == 0)
    throw ConvergenceError("fixed-point evidence maximization did not converge in " +
                               std::to_string(config.max_iterations) + " iterations",
                           finish(problem, np, state, trace, config.max_iterations));
  return finish(problem, np, state, trace, iterations);
}

// Sequential ascent from a single basis function and, separately, from the
// state reached by fixed-point sweeps over the full model. The two reach
// different local maxima on collinear dictionaries; the larger evidence wins.
EvidenceFit maximize_combined(const RegressionProblem& problem, const NormalizedProblem& np,
                              const ConvergenceConfig& config) {
  std::optional<EvidenceFit> best;
  std::optional<ConvergenceError> failure;
  auto consider = [&](FitState start) {
    try {
      EvidenceFit fit = maximize_sequential(problem, np, config, std::move(start));
      if (!best || fit.posterior.log_evidence > best->posterior.log_evidence) best = std::move(fit);
    } catch (const ConvergenceError& e) {
      if (!failure) failure = e;
    }
  };
  consider(initial_state(np, config, EvidenceStrategy::kSequential));
  FitState dense = initial_state(np, config, EvidenceStrategy::kFixedPoint);
  std::vector<double> ignored;
  run_fixed_point(np, config, dense, ignored, config.fixed_point_sweeps);
  consider(std::move(dense));
  if (best) return *std::move(best);
  throw *failure;
}

}  // namespace

void RegressionProblem::validate() const {
  if (phi.rows() < 1 || phi.cols() < 1) throw SizeError("regression problem needs N >= 1 and M >= 1");
  if (eta.size() != phi.rows()) throw SizeError("eta length does not match the rows of phi");
  if (!term_labels.empty() && term_labels.size() != n_terms())
    throw SizeError("term label count does not match the columns of phi");
  if (!eta.allFinite() || !phi.allFinite()) throw DomainError("regression problem has non-finite entries");
}

RegressionProblem RegressionProblem::select_rows(std::span<const std::size_t> rows) const {
  RegressionProblem out;
  out.term_labels = term_labels;
  out.eta.resize(static_cast<Eigen::Index>(rows.size()));
  out.phi.resize(static_cast<Eigen::Index>(rows.size()), phi.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_samples()) throw SizeError("row index out of range");
    const auto r = static_cast<Eigen::Index>(rows[i]);
    out.eta[static_cast<Eigen::Index>(i)] = eta[r];
    out.phi.row(static_cast<Eigen::Index>(i)) = phi.row(r);
  }
  return out;
}

RegressionProblem RegressionProblem::select_columns(std::span<const std::size_t> columns) const {
  RegressionProblem out;
  out.eta = eta;
  out.phi.resize(phi.rows(), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j] >= n_terms()) throw SizeError("column index out of range");
    out.phi.col(static_cast<Eigen::Index>(j)) = phi.col(static_cast<Eigen::Index>(columns[j]));
    if (!term_labels.empty()) out.term_labels.push_back(term_labels[columns[j]]);
  }
  return out;
}

std::vector<std::size_t> Hyperparameters::active() const {
  std::vector<std::size_t> out;
  for (Eigen::Index j = 0; j < alpha.size(); ++j)
    if (std::isfinite(alpha[j])) out.push_back(static_cast<std::size_t>(j));
  return out;
}

Eigen::VectorXd WeightPosterior::stddev() const { return covariance.diagonal().cwiseMax(0.0).cwiseSqrt(); }

namespace {

void check_hyper(const RegressionProblem& problem, const Hyperparameters& hyper) {
  if (static_cast<std::size_t>(hyper.alpha.size()) != problem.n_terms())
    throw SizeError("alpha length does not match the number of terms");
  if (!(hyper.sigma2 > 0.0) || !std::isfinite(hyper.sigma2)) throw DomainError("sigma2 must be positive and finite");
  for (Eigen::Index j = 0; j < hyper.alpha.size(); ++j)
    if (!(hyper.alpha[j] > 0.0)) throw DomainError("alpha must be positive (or +infinity)");
}

}  // namespace

double log_marginal_likelihood(const RegressionProblem& problem, const Hyperparameters& hyper, EvidenceForm form) {
  check_hyper(problem, hyper);
  const auto active = hyper.active();
  const auto n = problem.phi.rows();
  const auto k = static_cast<Eigen::Index>(active.size());
  const double sigma2 = hyper.sigma2;
  Eigen::MatrixXd phi_a(n, k);
  Eigen::VectorXd alpha_a(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    phi_a.col(a) = problem.phi.col(static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)]));
    alpha_a[a] = hyper.alpha[static_cast<Eigen::Index>(active[static_cast<std::size_t>(a)])];
  }
  double log_det = 0.0;
  double quad = 0.0;
  if (form == EvidenceForm::kDense) {
    Eigen::MatrixXd c = sigma2 * Eigen::MatrixXd::Identity(n, n);
    c.noalias() += phi_a * alpha_a.cwiseInverse().asDiagonal() * phi_a.transpose();
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw NumericalError("marginal covariance is not positive definite");
    const Eigen::MatrixXd lower = llt.matrixL();
    log_det = 2.0 * lower.diagonal().array().log().sum();
    quad = problem.eta.dot(llt.solve(problem.eta));
  } else {
    log_det = static_cast<double>(n) * std::log(sigma2);
    quad = problem.eta.squaredNorm() / sigma2;
    if (k > 0) {
      Eigen::MatrixXd h = phi_a.transpose() * phi_a / sigma2;
      h.diagonal() += alpha_a;
      Eigen::LLT<Eigen::MatrixXd> llt;
      if (!factorize(h, llt)) throw NumericalError("posterior precision is not positive definite");
      const Eigen::MatrixXd lower = llt.matrixL();
      const Eigen::VectorXd b = phi_a.transpose() * problem.eta / sigma2;
      log_det += 2.0 * lower.diagonal().array().log().sum() - alpha_a.array().log().sum();
      quad -= b.dot(llt.solve(b));
    }
  }
  return -0.5 * (static_cast<double>(n) * kLog2Pi + log_det + quad);
}

WeightPosterior posterior(const RegressionProblem& problem, const Hyperparameters& hyper) {
  check_hyper(problem, hyper);
  const auto m = problem.phi.cols();
  WeightPosterior post;
  post.active = hyper.active();
  post.mean = Eigen::VectorXd::Zero(m);
  post.covariance = Eigen::MatrixXd::Zero(m, m);
  const auto k = static_cast<Eigen::Index>(post.active.size());
  if (k > 0) {
    Eigen::MatrixXd phi_a(problem.phi.rows(), k);
    for (Eigen::Index a = 0; a < k; ++a)
      phi_a.col(a) = problem.phi.col(static_cast<Eigen::Index>(post.active[static_cast<std::size_t>(a)]));
    Eigen::MatrixXd h = phi_a.transpose() * phi_a / hyper.sigma2;
    for (Eigen::Index a = 0; a < k; ++a) h(a, a) += hyper.alpha[static_cast<Eigen::Index>(post.active[static_cast<std::size_t>(a)])];
    Eigen::LLT<Eigen::MatrixXd> llt;
    if (!factorize(h, llt)) throw NumericalError("posterior precision is singular; check for NaN inputs");
    Eigen::MatrixXd sigma = llt.solve(Eigen::MatrixXd::Identity(k, k));
    sigma = 0.5 * (sigma + sigma.transpose());
    const Eigen::VectorXd mu = sigma * (phi_a.transpose() * problem.eta) / hyper.sigma2;
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto ia = static_cast<Eigen::Index>(post.active[static_cast<std::size_t>(a)]);
      post.mean[ia] = mu[a];
      for (Eigen::Index c = 0; c < k; ++c)
        post.covariance(ia, static_cast<Eigen::Index>(post.active[static_cast<std::size_t>(c)])) = sigma(a, c);
    }
  }
  post.log_evidence = log_marginal_likelihood(problem, hyper, EvidenceForm::kWoodbury);
  return post;
}

EvidenceFit maximize_evidence(const RegressionProblem& problem, const ConvergenceConfig& config) {
  problem.validate();
  if (config.max_iterations < 1) throw ConfigError("max_iterations must be positive");
  const NormalizedProblem np = normalize(problem);
  if (np.eta_sq == 0.0) {
    // Nothing to explain: every weight is pruned and the noise floor is used.
    EvidenceFit fit;
    fit.hyper.alpha = Eigen::VectorXd::Constant(np.m, kInf);
    fit.hyper.sigma2 = config.min_sigma2_ratio;
    fit.posterior = posterior(problem, fit.hyper);
    fit.evidence_trace.push_back(fit.posterior.log_evidence);
    return fit;
  }
  switch (config.strategy) {
    case EvidenceStrategy::kFixedPoint:
      return maximize_fixed_point(problem, np, config);
    case EvidenceStrategy::kSequential:
      return maximize_sequential(problem, np, config, initial_state(np, config, EvidenceStrategy::kSequential));
    case EvidenceStrategy::kCombined:
      break;
  }
  return maximize_combined(problem, np, config);
}

}  // namespace eqforge
