#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "eqforge/rvm.hpp"

using namespace eqforge;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

RegressionProblem random_problem(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> z;
  RegressionProblem p;
  p.phi.resize(n, m);
  p.eta.resize(n);
  for (int i = 0; i < n; ++i) {
    p.eta[i] = z(rng);
    for (int j = 0; j < m; ++j) p.phi(i, j) = z(rng);
  }
  return p;
}

// Direct transcription of the Gaussian evidence density.
double dense_log_evidence(const RegressionProblem& p, const Hyperparameters& h) {
  const auto n = p.phi.rows();
  Eigen::MatrixXd c = h.sigma2 * Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index j = 0; j < p.phi.cols(); ++j)
    if (std::isfinite(h.alpha[j])) c += p.phi.col(j) * p.phi.col(j).transpose() / h.alpha[j];
  const double det = c.determinant();
  const double quad = p.eta.dot(c.inverse() * p.eta);
  return -0.5 * (n * std::log(2 * std::numbers::pi) + std::log(det) + quad);
}

}  // namespace

TEST(Evidence, RankOneDeterminantLemma) {
  for (int n : {1, 3, 8}) {
    for (double alpha : {0.1, 1.0, 7.0}) {
      RegressionProblem p{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Ones(n, 1), {"1"}};
      Hyperparameters h{Eigen::VectorXd::Constant(1, alpha), 1.0};
      const double want = -0.5 * n * std::log(2 * std::numbers::pi) - 0.5 * std::log(1 + n / alpha);
      EXPECT_NEAR(log_marginal_likelihood(p, h), want, 1e-12);
      EXPECT_NEAR(log_marginal_likelihood(p, h, EvidenceForm::kDense), want, 1e-12);
    }
  }
}

TEST(Evidence, AllPrunedIsPureNoise) {
  std::mt19937_64 rng(3);
  auto p = random_problem(rng, 6, 3);
  Hyperparameters h{Eigen::VectorXd::Constant(3, kInf), 0.7};
  const double want = -3.0 * std::log(2 * std::numbers::pi * 0.7) - p.eta.squaredNorm() / 1.4;
  EXPECT_NEAR(log_marginal_likelihood(p, h), want, 1e-12);
  EXPECT_NEAR(log_marginal_likelihood(p, h, EvidenceForm::kDense), want, 1e-12);
}

TEST(Evidence, DenseAndWoodburyAgree) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = random_problem(rng, 5, 3);
    Hyperparameters h{Eigen::VectorXd(3), std::exp(u(rng))};
    for (int j = 0; j < 3; ++j) h.alpha[j] = std::exp(u(rng));
    if (trial % 5 == 0) h.alpha[1] = kInf;
    const double a = log_marginal_likelihood(p, h, EvidenceForm::kDense);
    EXPECT_NEAR(log_marginal_likelihood(p, h, EvidenceForm::kWoodbury), a, 1e-8);
    EXPECT_NEAR(dense_log_evidence(p, h), a, 1e-8);
  }
}

TEST(Evidence, RejectsBadHyperparameters) {
  RegressionProblem p{Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Ones(2, 1), {}};
  EXPECT_THROW(log_marginal_likelihood(p, {Eigen::VectorXd::Ones(1), 0.0}), DomainError);
  EXPECT_THROW(log_marginal_likelihood(p, {Eigen::VectorXd::Ones(1), -1.0}), DomainError);
  EXPECT_THROW(log_marginal_likelihood(p, {Eigen::VectorXd::Ones(2), 1.0}), SizeError);
}

TEST(Posterior, ScalarCase) {
  RegressionProblem p{Eigen::VectorXd::Ones(4), Eigen::MatrixXd::Ones(4, 1), {"1"}};
  const auto post = posterior(p, {Eigen::VectorXd::Ones(1), 1.0});
  EXPECT_NEAR(post.covariance(0, 0), 0.2, 1e-15);
  EXPECT_NEAR(post.mean[0], 0.8, 1e-15);
  EXPECT_NEAR(post.stddev()[0], std::sqrt(0.2), 1e-15);
}

TEST(Posterior, AllPrunedIsZero) {
  std::mt19937_64 rng(5);
  auto p = random_problem(rng, 4, 2);
  const auto post = posterior(p, {Eigen::VectorXd::Constant(2, kInf), 1.0});
  EXPECT_TRUE(post.mean.isZero(0));
  EXPECT_TRUE(post.covariance.isZero(0));
  EXPECT_TRUE(post.active.empty());
}

TEST(Posterior, MatchesClosedFormAndZeroOutsideActive) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = random_problem(rng, 8, 4);
    Hyperparameters h{Eigen::Vector4d(0.5, kInf, 2.0, 0.1), 0.3};
    const auto post = posterior(p, h);
    Eigen::MatrixXd phi(8, 3);
    phi << p.phi.col(0), p.phi.col(2), p.phi.col(3);
    Eigen::MatrixXd a = Eigen::Vector3d(0.5, 2.0, 0.1).asDiagonal();
    const Eigen::MatrixXd sigma = (phi.transpose() * phi / 0.3 + a).inverse();
    const Eigen::VectorXd mu = sigma * phi.transpose() * p.eta / 0.3;
    const int idx[] = {0, 2, 3};
    for (int r = 0; r < 3; ++r) {
      EXPECT_NEAR(post.mean[idx[r]], mu[r], 1e-10);
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(post.covariance(idx[r], idx[c]), sigma(r, c), 1e-10);
    }
    EXPECT_EQ(post.mean[1], 0.0);
    EXPECT_TRUE(post.covariance.row(1).isZero(0));
    EXPECT_TRUE(post.covariance.col(1).isZero(0));
    EXPECT_TRUE(post.covariance.isApprox(post.covariance.transpose(), 1e-12));
  }
}

TEST(Posterior, SmallAlphaApproachesLeastSquares) {
  std::mt19937_64 rng(8);
  auto p = random_problem(rng, 10, 3);
  const auto post = posterior(p, {Eigen::VectorXd::Constant(3, 1e-12), 1.0});
  const Eigen::VectorXd ls = p.phi.colPivHouseholderQr().solve(p.eta);
  EXPECT_LT((post.mean - ls).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Posterior, SquareInvertibleSystemIsInverted) {
  std::mt19937_64 rng(9);
  auto p = random_problem(rng, 4, 4);
  const auto post = posterior(p, {Eigen::VectorXd::Constant(4, 1e-10), 1e-10});
  const Eigen::VectorXd exact = p.phi.inverse() * p.eta;
  EXPECT_LT((post.mean - exact).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(MaximizeEvidence, NoiselessRecoversSingleTerm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1, 1);
  RegressionProblem p;
  p.phi.resize(40, 5);
  for (int i = 0; i < 40; ++i) {
    const double x = u(rng);
    p.phi.row(i) << 1.0, x, std::sin(3 * x), std::exp(x) - 1, std::cos(5 * x);
  }
  p.eta = 2.0 * p.phi.col(1);
  const auto fit = maximize_evidence(p);
  EXPECT_EQ(fit.hyper.active(), (std::vector<std::size_t>{1}));
  EXPECT_NEAR(fit.posterior.mean[1], 2.0, 1e-3);
}

TEST(MaximizeEvidence, ZeroTargetPrunesEverything) {
  RegressionProblem p{Eigen::VectorXd::Zero(10), Eigen::MatrixXd::Random(10, 3), {}};
  const auto fit = maximize_evidence(p);
  EXPECT_TRUE(fit.posterior.active.empty());
  EXPECT_TRUE(fit.posterior.mean.isZero(0));
}

TEST(MaximizeEvidence, BeatsBruteForceGridOnTwoColumns) {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 3; ++trial) {
    auto p = random_problem(rng, 12, 2);
    p.eta = 0.8 * p.phi.col(0) + 0.3 * Eigen::VectorXd::NullaryExpr(12, [&] { return z(rng); });
    const auto fit = maximize_evidence(p);
    double best = -kInf;
    const int g = 25;
    for (int a = 0; a < g; ++a)
      for (int b = 0; b < g; ++b)
        for (int s = 0; s < g; ++s) {
          const double la = -6 + 12.0 * a / (g - 1), lb = -6 + 12.0 * b / (g - 1), ls = -6 + 12.0 * s / (g - 1);
          Hyperparameters h{Eigen::Vector2d(std::pow(10, la), std::pow(10, lb)), std::pow(10, ls)};
          best = std::max(best, log_marginal_likelihood(p, h));
        }
    EXPECT_GE(fit.posterior.log_evidence, best - 1e-6);
  }
}

TEST(MaximizeEvidence, TraceIsMonotone) {
  std::mt19937_64 rng(4);
  for (auto strategy : {EvidenceStrategy::kSequential, EvidenceStrategy::kCombined}) {
    auto p = random_problem(rng, 30, 8);
    p.eta = p.phi.col(2) - 0.5 * p.phi.col(5) + 0.1 * p.eta;
    ConvergenceConfig cfg;
    cfg.strategy = strategy;
    const auto fit = maximize_evidence(p, cfg);
    for (std::size_t i = 1; i < fit.evidence_trace.size(); ++i)
      EXPECT_GE(fit.evidence_trace[i], fit.evidence_trace[i - 1] - 1e-10);
    EXPECT_NEAR(fit.evidence_trace.back(), fit.posterior.log_evidence, 1e-6);
  }
}

TEST(MaximizeEvidence, CovarianceIsSymmetricPositiveDefinite) {
  std::mt19937_64 rng(12);
  auto p = random_problem(rng, 25, 6);
  p.eta = 1.5 * p.phi.col(0) + p.phi.col(3) + 0.2 * p.eta;
  const auto fit = maximize_evidence(p);
  const auto& act = fit.posterior.active;
  ASSERT_FALSE(act.empty());
  Eigen::MatrixXd sub(act.size(), act.size());
  for (std::size_t a = 0; a < act.size(); ++a)
    for (std::size_t b = 0; b < act.size(); ++b)
      sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          fit.posterior.covariance(static_cast<Eigen::Index>(act[a]), static_cast<Eigen::Index>(act[b]));
  EXPECT_LT((sub - sub.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(Eigen::LLT<Eigen::MatrixXd>(sub).info(), Eigen::Success);
}

TEST(MaximizeEvidence, ColumnScalingRescalesWeight) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_problem(rng, 30, 4);
    p.eta = 0.9 * p.phi.col(1) - 0.6 * p.phi.col(2) + 0.05 * p.eta;
    const auto base = maximize_evidence(p);
    auto scaled = p;
    const double c = 3.7;
    scaled.phi.col(1) *= c;
    const auto fit = maximize_evidence(scaled);
    EXPECT_EQ(fit.posterior.active, base.posterior.active);
    EXPECT_NEAR(fit.posterior.mean[1], base.posterior.mean[1] / c, 1e-6);
  }
}

TEST(MaximizeEvidence, StrategiesAgreeOnWellPosedProblems) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 5; ++trial) {
    auto p = random_problem(rng, 50, 6);
    p.eta = 1.2 * p.phi.col(0) - 0.7 * p.phi.col(4) + 0.05 * p.eta;
    ConvergenceConfig seq, fp;
    seq.strategy = EvidenceStrategy::kSequential;
    fp.strategy = EvidenceStrategy::kFixedPoint;
    fp.max_iterations = 100000;
    const auto a = maximize_evidence(p, seq);
    const auto b = maximize_evidence(p, fp);
    // Small weights may linger in one but not the other; the large ones must match.
    for (std::size_t j : {0u, 4u}) EXPECT_NEAR(a.posterior.mean[j], b.posterior.mean[j], 1e-3);
    EXPECT_NEAR(a.posterior.log_evidence, b.posterior.log_evidence, 1e-2);
  }
}

TEST(MaximizeEvidence, IterationCapRaisesWithLastIterate) {
  std::mt19937_64 rng(2);
  auto p = random_problem(rng, 30, 10);
  ConvergenceConfig cfg;
  cfg.max_iterations = 1;
  cfg.strategy = EvidenceStrategy::kSequential;
  try {
    maximize_evidence(p, cfg);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().hyper.alpha.size(), 10);
  }
}

TEST(MaximizeEvidence, RejectsInvalidProblems) {
  RegressionProblem p{Eigen::VectorXd::Ones(3), Eigen::MatrixXd::Ones(2, 1), {}};
  EXPECT_THROW(maximize_evidence(p), SizeError);
  RegressionProblem q{Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Ones(2, 1), {}};
  q.eta[0] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(maximize_evidence(q), DomainError);
}
