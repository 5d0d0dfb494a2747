#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqforge/tsbr.hpp"

namespace eqforge {

/// Optional early stop: the loop ends once the best criterion drops below
/// `criterion_floor`, or after `stall_patience` consecutive subsamples
/// without improvement.
struct AdaptiveStopping {
  std::optional<double> criterion_floor;
  std::optional<std::size_t> stall_patience;

  bool enabled() const { return criterion_floor.has_value() || stall_patience.has_value(); }
};

struct SubsamplingConfig {
  std::size_t subsample_size = 0;
  std::size_t n_subsamples = 1;
  std::uint64_t seed = 0;
  AdaptiveStopping adaptive;
  std::size_t threads = 0;  // 0: default_thread_count()
};

struct SubsampleResult {
  std::size_t index = 0;
  std::vector<std::size_t> rows;  // sorted, distinct
  SparseModel model;
  double criterion = 0.0;
  double seconds = 0.0;
  std::string error;  // non-empty when the fit failed; criterion is then +inf
};

struct SubtsbrResult {
  SparseModel model;
  std::size_t winner = 0;
  std::vector<SubsampleResult> subsamples;

  const SubsampleResult& best() const { return subsamples[winner]; }
};

/// Row indices of subsample `index` for a given seed. Depends only on
/// (n, size, seed, index), so the first L subsamples of a longer run are the
/// same as those of a run with L subsamples.
std::vector<std::size_t> draw_subsample(std::size_t n, std::size_t size, std::uint64_t seed, std::size_t index);

/// Runs TSBR on random row subsets and keeps the model with the smallest
/// criterion (lowest subsample index on ties). Throws EmptyModelError when
/// every subsample ends with an empty model.
SubtsbrResult fit_subtsbr(const RegressionProblem& problem, const TsbrConfig& tsbr_config,
                          const SubsamplingConfig& sub_config);

/// Criterion scaled by sqrt(subsample size), comparable across sizes.
double adjusted_criterion(double criterion, std::size_t subsample_size);

/// Smallest L such that, with probability `confidence`, at least one of L
/// random size-S subsets of N points avoids all outliers (fraction p).
std::size_t subsamples_needed(std::size_t n, double outlier_fraction, std::size_t subsample_size, double confidence);

struct SweepConfig {
  std::vector<std::size_t> sizes;
  std::vector<std::size_t> counts;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  std::optional<std::vector<std::string>> truth;  // exact support to score against
  std::size_t threads = 0;
};

struct SweepCell {
  std::size_t subsample_size = 0;
  std::size_t n_subsamples = 0;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;  // trials without any usable model
  double success_rate = 0.0;  // NaN without a truth support
  double median_criterion = 0.0;
  double median_adjusted_criterion = 0.0;
  double mean_seconds = 0.0;
};

/// Seed of trial `trial` for subsample size `size` inside a sweep.
std::uint64_t sweep_trial_seed(std::uint64_t seed, std::size_t size, std::size_t trial);

/// Runs `trials` independent SubTSBR fits per (size, count) cell. Cells with
/// the same size share trial seeds, so a count-L cell uses the first L
/// subsamples of the corresponding larger run.
std::vector<SweepCell> sweep(const RegressionProblem& problem, const TsbrConfig& tsbr_config,
                             const SweepConfig& config);

bool same_support(const std::vector<std::string>& a, const std::vector<std::string>& b);

}  // namespace eqforge
