// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any of them fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "eqforge/datasets.hpp"
#include "eqforge/dictionary.hpp"
#include "eqforge/predict.hpp"
#include "eqforge/rvm.hpp"
#include "eqforge/subtsbr.hpp"
#include "eqforge/tsbr.hpp"

using namespace eqforge;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  std::string out(static_cast<std::size_t>(std::snprintf(nullptr, 0, f, args...)), '\0');
  std::snprintf(out.data(), out.size() + 1, f, args...);
  return out;
}

DictionarySpec plain_spec(const std::vector<std::string>& vars, unsigned degree) {
  DictionarySpec s;
  for (const auto& v : vars) s.variables.push_back(VariableSpec{v, std::nullopt, false});
  s.degree = degree;
  return s;
}

// Rows of `table` passing `keep`, with every variable and the target finite.
RegressionProblem table_problem(const DataTable& table, const Dictionary& dict, const std::vector<std::string>& vars,
                                const std::string& target, const std::function<bool(Eigen::Index)>& keep) {
  std::vector<Eigen::Index> rows;
  const auto tc = static_cast<Eigen::Index>(table.column_index(target));
  for (Eigen::Index r = 0; r < table.values.rows(); ++r)
    if (keep(r) && std::isfinite(table.values(r, tc))) rows.push_back(r);
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(vars.size()));
  Eigen::VectorXd eta(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < vars.size(); ++c)
      samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          table.values(rows[i], static_cast<Eigen::Index>(table.column_index(vars[c])));
    eta[static_cast<Eigen::Index>(i)] = table.values(rows[i], tc);
  }
  const auto dm = evaluate(dict, samples);
  RegressionProblem p;
  p.phi = dm.matrix;
  p.eta.resize(static_cast<Eigen::Index>(dm.kept_rows.size()));
  for (std::size_t i = 0; i < dm.kept_rows.size(); ++i)
    p.eta[static_cast<Eigen::Index>(i)] = eta[static_cast<Eigen::Index>(dm.kept_rows[i])];
  p.term_labels = dict.labels();
  return p;
}

// --- predator-prey

const std::vector<std::string> kTruthDx{"x", "x y"};
const std::vector<std::string> kTruthDy{"y", "x y"};

struct PredatorPreyProblems {
  Trajectory trajectory;
  RegressionProblem dx, dy;
};

PredatorPreyProblems predator_prey(std::uint64_t seed, double sigma) {
  NoiseSpec noise;
  noise.gaussian_sigma = sigma;
  noise.seed = seed;
  PredatorPreyProblems out;
  out.trajectory = gen_predator_prey({}, noise);
  const auto dict = plain_spec({"x", "y"}, 3).build();
  const auto dm = evaluate(dict, out.trajectory.states);
  out.dx = {out.trajectory.gradients.col(0), dm.matrix, dict.labels()};
  out.dy = {out.trajectory.gradients.col(1), dm.matrix, dict.labels()};
  return out;
}

SubsamplingConfig predator_prey_subsampling(std::uint64_t seed) {
  SubsamplingConfig sc;
  sc.subsample_size = 60;
  sc.n_subsamples = 30;
  sc.seed = seed;
  return sc;
}

struct RecoveryStats {
  int successes = 0;
  int within_band = 0;                 // successful seeds with all four weights within the band
  std::vector<std::array<double, 4>> weights;  // per successful seed: dx x, dx xy, dy xy, dy y
  double seconds = 0;
};

RecoveryStats recovery(double sigma) {
  RecoveryStats s;
  const auto t0 = Clock::now();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pp = predator_prey(seed, sigma);
    const auto a = fit_subtsbr(pp.dx, {}, predator_prey_subsampling(seed));
    const auto b = fit_subtsbr(pp.dy, {}, predator_prey_subsampling(seed));
    if (!same_support(a.model.support(), kTruthDx) || !same_support(b.model.support(), kTruthDy)) continue;
    ++s.successes;
    auto w = [](const SparseModel& m, const char* label) {
      for (const auto& t : m.terms)
        if (t.label == label) return t.mean;
      return 0.0;
    };
    const std::array<double, 4> ws{w(a.model, "x"), w(a.model, "x y"), w(b.model, "x y"), w(b.model, "y")};
    s.weights.push_back(ws);
    const double truth[4] = {0.5, -1.5, 1.0, -0.5};
    bool in = true;
    for (int k = 0; k < 4; ++k) in = in && std::abs(ws[k] - truth[k]) <= 0.08;
    s.within_band += in;
  }
  s.seconds = seconds_since(t0);
  return s;
}

RecoveryStats g_low_noise_stats;  // shared by criteria 4 and 5
RecoveryStats g_high_noise_stats;

// --- criteria

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto l = subsamples_needed(1296, 0.02, 100, 0.99);
  const double ms = seconds_since(t0) * 1e3;
  return {l == 36 && ms < 1.0, fmt("L = %zu (want 36), %.3f ms", l, ms)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> pick_n(1, 8), pick_m(1, 4);
  std::uniform_real_distribution<double> log_u(-2, 2);
  double worst_post = 0, worst_ev = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = pick_n(rng), m = pick_m(rng);
    RegressionProblem p;
    p.phi = Eigen::MatrixXd::NullaryExpr(n, m, [&] { return z(rng); });
    p.eta = Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
    Hyperparameters h{Eigen::VectorXd(m), std::pow(10.0, log_u(rng))};
    for (int j = 0; j < m; ++j) h.alpha[j] = (trial % 4 == 0 && j == 0) ? kInf : std::pow(10.0, log_u(rng));
    // Direct dense evaluation on the finite-alpha columns.
    std::vector<int> act;
    for (int j = 0; j < m; ++j)
      if (std::isfinite(h.alpha[j])) act.push_back(j);
    const auto k = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd phi(n, k);
    Eigen::VectorXd alpha(k);
    for (Eigen::Index c = 0; c < k; ++c) {
      phi.col(c) = p.phi.col(act[static_cast<std::size_t>(c)]);
      alpha[c] = h.alpha[act[static_cast<std::size_t>(c)]];
    }
    const Eigen::MatrixXd sigma = (phi.transpose() * phi / h.sigma2 + Eigen::MatrixXd(alpha.asDiagonal())).inverse();
    const Eigen::VectorXd mu = sigma * phi.transpose() * p.eta / h.sigma2;
    const auto post = posterior(p, h);
    for (Eigen::Index a = 0; a < k; ++a) {
      const auto ja = act[static_cast<std::size_t>(a)];
      worst_post = std::max(worst_post, std::abs(post.mean[ja] - mu[a]));
      for (Eigen::Index b = 0; b < k; ++b)
        worst_post = std::max(worst_post, std::abs(post.covariance(ja, act[static_cast<std::size_t>(b)]) - sigma(a, b)));
    }
    const double dense = log_marginal_likelihood(p, h, EvidenceForm::kDense);
    const double wood = log_marginal_likelihood(p, h, EvidenceForm::kWoodbury);
    worst_ev = std::max(worst_ev, std::abs(dense - wood));
  }
  const double secs = seconds_since(t0);
  return {worst_post <= 1e-10 && worst_ev <= 1e-8 && secs < 5,
          fmt("max posterior diff %.2e (<= 1e-10), max evidence diff %.2e (<= 1e-8), %.2f s", worst_post, worst_ev,
              secs)};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  std::uniform_int_distribution<int> pick_n(5, 30);
  const int g = 50;
  std::vector<double> grid_alpha(g), grid_sigma(g);
  for (int i = 0; i < g; ++i) {
    grid_alpha[i] = std::pow(10.0, -4.0 + 10.0 * i / (g - 1));
    grid_sigma[i] = std::pow(10.0, -4.0 + 6.0 * i / (g - 1));
  }
  double worst_gap = -kInf;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = pick_n(rng);
    RegressionProblem p;
    p.phi = Eigen::MatrixXd::NullaryExpr(n, 2, [&] { return z(rng); });
    const double w0 = trial % 3 == 0 ? 0.0 : z(rng), w1 = trial % 5 == 0 ? 0.0 : z(rng);
    const double noise = std::pow(10.0, -1.5 + trial % 4 * 0.5);
    p.eta = w0 * p.phi.col(0) + w1 * p.phi.col(1) + noise * Eigen::VectorXd::NullaryExpr(n, [&] { return z(rng); });
    const auto fit = maximize_evidence(p);
    double best = -kInf;
    for (double a0 : grid_alpha)
      for (double a1 : grid_alpha)
        for (double s2 : grid_sigma) best = std::max(best, log_marginal_likelihood(p, {Eigen::Vector2d(a0, a1), s2}));
    worst_gap = std::max(worst_gap, best - fit.posterior.log_evidence);
  }
  const double secs = seconds_since(t0);
  return {worst_gap <= 1e-6 && secs < 60,
          fmt("max (grid best - fit) = %.3e (<= 1e-6), %.1f s", worst_gap, secs)};
}

Outcome criterion4() {
  g_high_noise_stats = recovery(0.02);
  const auto& s = g_high_noise_stats;
  // Mean recovered weights over successful seeds must sit within the band.
  const double truth[4] = {0.5, -1.5, 1.0, -0.5};
  double mean[4] = {0, 0, 0, 0};
  for (const auto& w : s.weights)
    for (int k = 0; k < 4; ++k) mean[k] += w[k] / static_cast<double>(s.weights.size());
  bool band = !s.weights.empty();
  for (int k = 0; k < 4; ++k) band = band && std::abs(mean[k] - truth[k]) <= 0.08;
  return {s.successes >= 10 && band && s.seconds < 600,
          fmt("support recovered in %d/20 seeds (>= 10); mean weights (%.3f, %.3f, %.3f, %.3f) within 0.08: %s; "
              "seeds with every weight in the band: %d/%d; %.1f s",
              s.successes, mean[0], mean[1], mean[2], mean[3], band ? "yes" : "no", s.within_band, s.successes,
              s.seconds)};
}

Outcome criterion5() {
  g_low_noise_stats = recovery(0.01);
  return {g_low_noise_stats.successes > g_high_noise_stats.successes,
          fmt("sigma 0.01: %d/20, sigma 0.02: %d/20 (strictly greater required)", g_low_noise_stats.successes,
              g_high_noise_stats.successes)};
}

Outcome criterion6() {
  int wrong = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pp = predator_prey(seed, 0.02);
    const bool ok = same_support(fit_tsbr(pp.dx).support(), kTruthDx) && same_support(fit_tsbr(pp.dy).support(), kTruthDy);
    wrong += !ok;
  }
  return {wrong >= 16, fmt("full-data TSBR wrong support in %d/20 seeds (>= 16 required)", wrong)};
}

Outcome criterion7() {
  const auto t0 = Clock::now();
  const std::vector<std::string> pde_vars{"x", "t", "u", "u_x", "u_xx"};
  const std::vector<std::string> ic_vars{"xi1", "x", "sin_x", "cos_x"};
  const std::vector<std::string> bc_vars{"xi2", "xi3", "t", "sin_t", "cos_t"};
  const auto pde_spec = plain_spec(pde_vars, 3), ic_spec = plain_spec(ic_vars, 3), bc_spec = plain_spec(bc_vars, 3);
  const auto pde_dict = pde_spec.build(), ic_dict = ic_spec.build(), bc_dict = bc_spec.build();

  int recovered = 0;
  bool forward_ok = true;
  std::string notes;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    NoiseSpec noise;
    noise.gaussian_sigma = 0.01;
    noise.outlier_fraction = 0.02;
    noise.seed = seed;
    const auto ds = gen_heat_random_ibc({}, noise);
    const auto& tab = ds.table;
    const auto valid = static_cast<Eigen::Index>(tab.column_index("deriv_valid"));
    const auto xc = static_cast<Eigen::Index>(tab.column_index("x"));
    const auto tcol = static_cast<Eigen::Index>(tab.column_index("t"));

    auto discover = [&](const DictionarySpec& spec, const Dictionary& dict, const std::vector<std::string>& vars,
                        const std::string& target, std::size_t s, const std::function<bool(Eigen::Index)>& keep) {
      const auto p = table_problem(tab, dict, vars, target, keep);
      SubsamplingConfig sc;
      sc.subsample_size = s;
      sc.n_subsamples = 300;
      sc.seed = seed;
      return make_discovered(target, spec, fit_subtsbr(p, {}, sc), s, seed);
    };
    const auto pde = discover(pde_spec, pde_dict, pde_vars, "u_t", 245, [&](Eigen::Index r) { return tab.values(r, valid) == 1.0; });
    const double c = pde.weight("u_xx");
    const bool ok = pde.terms.size() == 1 && c >= 0.47 && c <= 0.53;
    notes += fmt(" seed %d: %s;", static_cast<int>(seed), pde.to_string().c_str());
    if (!ok) continue;
    ++recovered;

    DiscoveredHeatSystem sys;
    sys.pde = pde;
    sys.initial = discover(ic_spec, ic_dict, ic_vars, "u", 55, [&](Eigen::Index r) { return tab.values(r, tcol) == 0.0; });
    sys.left = discover(bc_spec, bc_dict, bc_vars, "u", 55, [&](Eigen::Index r) { return tab.values(r, xc) == 0.0; });
    sys.right = discover(bc_spec, bc_dict, bc_vars, "u", 55, [&](Eigen::Index r) { return tab.values(r, xc) == 5.0; });
    const HeatXi xi{0.5, 0.5, 0.5};
    const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(151, 0, 15);
    const std::vector<double> req{0, 3, 6, 9, 12, 15};
    const auto report = mse_report(solve_discovered_heat(sys, xi, 51, times), solve_heat(heat_benchmark_problem(xi), 51, times),
                                   times, req);
    double worst = 0;
    for (const auto& [t, mse] : report.mse_by_time) worst = std::max(worst, mse);
    forward_ok = forward_ok && worst <= 1e-3;
    notes += fmt(" forward max MSE %.2e;", worst);
  }
  const double secs = seconds_since(t0);
  return {recovered >= 3 && forward_ok && secs < 1800,
          fmt("u_xx in [0.47, 0.53] alone in %d/5 seeds (>= 3); forward MSE <= 1e-3 for every recovered seed: %s; "
              "%.0f s;%s",
              recovered, forward_ok ? "yes" : "no", secs, notes.c_str())};
}

Outcome criterion8() {
  const auto t0 = Clock::now();
  const auto spec = plain_spec({"t", "N"}, 10);
  const auto dict = spec.build();
  int recovered = 0;
  bool fan_ok = true;
  std::string notes;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    NoiseSpec noise;
    noise.gaussian_sigma = 0.02;
    noise.seed = seed;
    const auto tab = to_table(gen_fish_harvesting({}, noise));
    const auto valid = static_cast<Eigen::Index>(tab.column_index("deriv_valid"));
    const auto p = table_problem(tab, dict, {"t", "N"}, "dNdt", [&](Eigen::Index r) { return tab.values(r, valid) == 1.0; });
    SubsamplingConfig sc;
    sc.subsample_size = 20;
    sc.n_subsamples = 500;
    sc.seed = seed;
    const auto eq = make_discovered("dNdt", spec, fit_subtsbr(p, {}, sc), 20, seed);
    const double c0 = eq.weight("1"), c1 = eq.weight("N"), c2 = eq.weight("N^2");
    const bool ok = same_support(eq.support(), {"1", "N", "N^2"}) && std::abs(c0 + 3) <= 0.25 &&
                    std::abs(c1 - 4) <= 0.25 && std::abs(c2 + 1) <= 0.25;
    notes += fmt(" seed %d: %s;", static_cast<int>(seed), eq.to_string(3).c_str());
    if (!ok) continue;
    ++recovered;

    // Lower root of the discovered quadratic separates the two behaviours.
    const double disc = c1 * c1 - 4 * c2 * c0;
    const double lower = disc >= 0 ? std::min((-c1 + std::sqrt(disc)) / (2 * c2), (-c1 - std::sqrt(disc)) / (2 * c2)) : kInf;
    const auto fan = integrate_fan(eq, "N", Eigen::VectorXd::LinSpaced(30, 0.5, 3.5), 20.0, 401);
    for (const auto& m : fan) {
      if (m.initial > lower) {
        fan_ok = fan_ok && !m.blew_up && std::abs(m.terminal() - 3.0) <= 0.15;
      } else {
        for (Eigen::Index i = 1; i < m.values.size(); ++i) fan_ok = fan_ok && m.values[i] < m.values[i - 1];
      }
    }
  }
  const double secs = seconds_since(t0);
  return {recovered >= 5 && fan_ok && secs < 900,
          fmt("{1, N, N^2} within 0.25 in %d/10 seeds (>= 5); fan behaviour correct for every recovered seed: %s; "
              "%.0f s;%s",
              recovered, fan_ok ? "yes" : "no", secs, notes.c_str())};
}

Outcome criterion9() {
  const auto pp = predator_prey(0, 0.02);
  double prev = kInf;
  bool monotone = true;
  SubsamplingConfig sc = predator_prey_subsampling(0);
  sc.n_subsamples = 50;
  const auto full = fit_subtsbr(pp.dx, {}, sc);
  double prefix = kInf;
  bool nested = true;
  for (std::size_t l = 1; l <= 50; ++l) {
    sc.n_subsamples = l;
    const double c = fit_subtsbr(pp.dx, {}, sc).model.criterion;
    monotone = monotone && c <= prev;
    prefix = std::min(prefix, full.subsamples[l - 1].criterion);
    nested = nested && c == prefix;
    prev = c;
  }
  return {monotone && nested, fmt("non-increasing over L = 1..50: %s; equals prefix minimum of the L = 50 run: %s",
                                  monotone ? "yes" : "no", nested ? "yes" : "no")};
}

Outcome criterion10() {
  const auto t0 = Clock::now();
  // The reference dataset is one on which full-data TSBR misses both supports;
  // take the first seed with that property.
  std::uint64_t seed = 0;
  for (;; ++seed) {
    const auto pp = predator_prey(seed, 0.02);
    if (!same_support(fit_tsbr(pp.dx).support(), kTruthDx) && !same_support(fit_tsbr(pp.dy).support(), kTruthDy)) break;
  }
  const auto pp = predator_prey(seed, 0.02);
  SweepConfig cfg;
  cfg.sizes = {40, 60, 80, 120, 160, 200};
  cfg.counts = {30};
  cfg.trials = 50;
  cfg.seed = 10;
  bool pass = true;
  std::string notes;
  for (int k = 0; k < 2; ++k) {
    cfg.truth = k == 0 ? kTruthDx : kTruthDy;
    const auto cells = sweep(k == 0 ? pp.dx : pp.dy, {}, cfg);
    std::size_t best_adj = 0;
    std::vector<double> rates;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      rates.push_back(cells[i].success_rate);
      if (cells[i].median_adjusted_criterion < cells[best_adj].median_adjusted_criterion) best_adj = i;
    }
    auto sorted = rates;
    std::sort(sorted.rbegin(), sorted.rend());
    const double second = sorted[1];  // sizes tied with the runner-up count as top-2
    const bool ok = rates[best_adj] >= second;
    pass = pass && ok;
    notes += fmt(" %s:", k == 0 ? "dx/dt" : "dy/dt");
    for (const auto& c : cells) notes += fmt(" S=%zu rate %.2f adj %.3g;", c.subsample_size, c.success_rate, c.median_adjusted_criterion);
    notes += fmt(" argmin S=%zu %s;", cells[best_adj].subsample_size, ok ? "in top-2" : "NOT in top-2");
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 1200, fmt("dataset seed %d, %.0f s;%s", static_cast<int>(seed), secs, notes.c_str())};
}

Outcome criterion11() {
  const double want[2][4] = {{28.3, 25.7, 14.5, 10.2}, {34.3, 31.7, 20.5, 16.2}};
  const double sigmas[2] = {0.02, 0.01};
  double worst = 0;
  std::string notes;
  for (int s = 0; s < 2; ++s) {
    double mean[4] = {0, 0, 0, 0};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto tr = predator_prey(seed, sigmas[s]).trajectory;
      for (int c = 0; c < 2; ++c) {
        const double a = snr_db(tr.clean_states.col(c), tr.states.col(c) - tr.clean_states.col(c));
        const double b = snr_db(tr.clean_gradients.col(c), tr.gradients.col(c) - tr.clean_gradients.col(c));
        worst = std::max({worst, std::abs(a - want[s][c]), std::abs(b - want[s][c + 2])});
        mean[c] += a / 20;
        mean[c + 2] += b / 20;
      }
    }
    notes += fmt(" sigma %.2f mean (%.2f, %.2f, %.2f, %.2f);", sigmas[s], mean[0], mean[1], mean[2], mean[3]);
  }
  return {worst <= 1.5,
          fmt("required: every dataset within 1.5 dB; largest deviation over 20 seeds per noise level: %.2f dB;%s", worst,
              notes.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"subsample-count formula", criterion1},
      {"posterior closed forms", criterion2},
      {"evidence maximization vs grid", criterion3},
      {"predator-prey support recovery", criterion4},
      {"lower-noise improvement", criterion5},
      {"full-data TSBR picks the wrong support", criterion6},
      {"heat pipeline end to end", criterion7},
      {"fish harvesting recovery and fan", criterion8},
      {"criterion monotone in L", criterion9},
      {"adjusted-criterion size selection", criterion10},
      {"SNR reproduction", criterion11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
