#include "eqforge/subtsbr.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "eqforge/parallel.hpp"

namespace eqforge {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SubsampleResult run_subsample(const RegressionProblem& problem, const TsbrConfig& tsbr_config, std::size_t size,
                              std::uint64_t seed, std::size_t index) {
  SubsampleResult result;
  result.index = index;
  result.rows = draw_subsample(problem.n_samples(), size, seed, index);
  const auto start = std::chrono::steady_clock::now();
  try {
    result.model = fit_tsbr(problem.select_rows(result.rows), tsbr_config);
    result.criterion = result.model.criterion;
  } catch (const Error& e) {
    result.error = e.what();
    result.model = SparseModel{};
    result.criterion = kInf;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::size_t resolve_threads(std::size_t requested) { return requested == 0 ? default_thread_count() : requested; }

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  const double lo = values[mid - 1];
  const double hi = values[mid];
  if (std::isinf(lo) || std::isinf(hi)) return std::isinf(lo) ? lo : hi;
  return 0.5 * (lo + hi);
}

// Winner among the first `count` results: minimal criterion, lowest index on ties.
std::size_t argmin_criterion(const std::vector<SubsampleResult>& results, std::size_t count) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < count; ++r)
    if (results[r].criterion < results[best].criterion) best = r;
  return best;
}

}  // namespace

std::vector<std::size_t> draw_subsample(std::size_t n, std::size_t size, std::uint64_t seed, std::size_t index) {
  if (size == 0 || size > n) throw ConfigError("subsample size must be in [1, N]");
  std::mt19937_64 rng(splitmix64(splitmix64(seed) ^ splitmix64(0xa5a5a5a5ULL + index)));
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < size; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

SubtsbrResult fit_subtsbr(const RegressionProblem& problem, const TsbrConfig& tsbr_config,
                          const SubsamplingConfig& sub_config) {
  problem.validate();
  const std::size_t n = problem.n_samples();
  if (sub_config.subsample_size < 1 || sub_config.subsample_size > n)
    throw ConfigError("subsample size must satisfy 1 <= S <= N (N = " + std::to_string(n) + ")");
  if (sub_config.n_subsamples < 1) throw ConfigError("number of subsamples must be at least 1");
  const std::size_t threads = resolve_threads(sub_config.threads);
  const std::size_t total = sub_config.n_subsamples;

  std::vector<SubsampleResult> results(total);
  std::size_t used = total;
  if (!sub_config.adaptive.enabled()) {
    parallel_for(total, threads, [&](std::size_t r) {
      results[r] = run_subsample(problem, tsbr_config, sub_config.subsample_size, sub_config.seed, r);
    });
  } else {
    // Batches are computed in parallel; the stopping rule is applied in index
    // order so the outcome does not depend on scheduling.
    const auto& rule = sub_config.adaptive;
    double best = kInf;
    std::size_t stall = 0;
    bool stop = false;
    std::size_t done = 0;
    while (!stop && done < total) {
      const std::size_t batch = std::min(threads, total - done);
      parallel_for(batch, threads, [&](std::size_t b) {
        results[done + b] = run_subsample(problem, tsbr_config, sub_config.subsample_size, sub_config.seed, done + b);
      });
      for (std::size_t r = done; r < done + batch; ++r) {
        if (results[r].criterion < best) {
          best = results[r].criterion;
          stall = 0;
        } else {
          ++stall;
        }
        const bool floor_hit = rule.criterion_floor && best < *rule.criterion_floor;
        const bool stalled = rule.stall_patience && stall >= *rule.stall_patience;
        if (floor_hit || stalled) {
          used = r + 1;
          stop = true;
          break;
        }
      }
      done += batch;
    }
    if (!stop) used = total;
    results.resize(used);
  }

  SubtsbrResult out;
  out.winner = argmin_criterion(results, results.size());
  out.subsamples = std::move(results);
  if (std::isinf(out.subsamples[out.winner].criterion))
    throw EmptyModelError("every subsample produced an empty model; try a larger subsample size or a smaller threshold");
  out.model = out.subsamples[out.winner].model;
  return out;
}

double adjusted_criterion(double criterion, std::size_t subsample_size) {
  return criterion * std::sqrt(static_cast<double>(subsample_size));
}

std::size_t subsamples_needed(std::size_t n, double outlier_fraction, std::size_t subsample_size, double confidence) {
  if (n == 0) throw ConfigError("N must be positive");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) throw DomainError("outlier fraction must lie in [0, 1)");
  if (!(confidence > 0.0 && confidence < 1.0)) throw DomainError("confidence must lie in (0, 1)");
  if (subsample_size < 1 || subsample_size > n) throw ConfigError("subsample size must satisfy 1 <= S <= N");
  if (outlier_fraction == 0.0) return 1;
  const double good = (1.0 - outlier_fraction) * static_cast<double>(n);
  const double s = static_cast<double>(subsample_size);
  if (s > good)
    throw InfeasibleError("subsample size " + std::to_string(subsample_size) +
                          " exceeds the number of clean points; every subsample contains an outlier");
  auto log_choose = [](double a, double k) { return std::lgamma(a + 1.0) - std::lgamma(k + 1.0) - std::lgamma(a - k + 1.0); };
  const double clean_probability = std::exp(log_choose(good, s) - log_choose(static_cast<double>(n), s));
  if (clean_probability >= 1.0) return 1;
  const double l = std::log1p(-confidence) / std::log1p(-clean_probability);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(l)));
}

std::uint64_t sweep_trial_seed(std::uint64_t seed, std::size_t size, std::size_t trial) {
  return splitmix64(splitmix64(seed ^ 0x5bd1e995ULL) + splitmix64(size) * 31 + trial);
}

bool same_support(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  return std::set<std::string>(a.begin(), a.end()) == std::set<std::string>(b.begin(), b.end());
}

std::vector<SweepCell> sweep(const RegressionProblem& problem, const TsbrConfig& tsbr_config,
                             const SweepConfig& config) {
  problem.validate();
  if (config.sizes.empty() || config.counts.empty()) throw ConfigError("sweep needs sizes and counts");
  if (config.trials < 1) throw ConfigError("sweep needs at least one trial");
  for (auto s : config.sizes)
    if (s < 1 || s > problem.n_samples()) throw ConfigError("sweep size out of range: " + std::to_string(s));
  for (auto l : config.counts)
    if (l < 1) throw ConfigError("sweep counts must be positive");
  const std::size_t max_count = *std::max_element(config.counts.begin(), config.counts.end());

  struct TrialRun {
    std::vector<SubsampleResult> results;
  };
  const std::size_t n_sizes = config.sizes.size();
  std::vector<TrialRun> runs(n_sizes * config.trials);
  parallel_for(runs.size(), resolve_threads(config.threads), [&](std::size_t job) {
    const std::size_t si = job / config.trials;
    const std::size_t trial = job % config.trials;
    const std::size_t size = config.sizes[si];
    const std::uint64_t seed = sweep_trial_seed(config.seed, size, trial);
    auto& res = runs[job].results;
    res.reserve(max_count);
    for (std::size_t r = 0; r < max_count; ++r) res.push_back(run_subsample(problem, tsbr_config, size, seed, r));
  });

  std::vector<SweepCell> cells;
  for (std::size_t si = 0; si < n_sizes; ++si) {
    for (auto count : config.counts) {
      SweepCell cell;
      cell.subsample_size = config.sizes[si];
      cell.n_subsamples = count;
      cell.trials = config.trials;
      std::vector<double> criteria;
      std::vector<double> adjusted;
      double seconds = 0.0;
      for (std::size_t trial = 0; trial < config.trials; ++trial) {
        const auto& res = runs[si * config.trials + trial].results;
        const std::size_t w = argmin_criterion(res, count);
        for (std::size_t r = 0; r < count; ++r) seconds += res[r].seconds;
        criteria.push_back(res[w].criterion);
        adjusted.push_back(adjusted_criterion(res[w].criterion, cell.subsample_size));
        if (std::isinf(res[w].criterion)) {
          ++cell.failures;
          continue;
        }
        if (config.truth && same_support(res[w].model.support(), *config.truth)) ++cell.successes;
      }
      cell.success_rate = config.truth ? static_cast<double>(cell.successes) / static_cast<double>(config.trials)
                                       : std::numeric_limits<double>::quiet_NaN();
      cell.median_criterion = median(criteria);
      cell.median_adjusted_criterion = median(adjusted);
      cell.mean_seconds = seconds / static_cast<double>(config.trials);
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace eqforge
