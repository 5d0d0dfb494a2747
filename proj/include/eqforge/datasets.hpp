#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "eqforge/heat.hpp"

namespace eqforge {

// When gaussian noise hits a differenced dataset: after differencing corrupts
// states and derivatives independently; before differencing corrupts the
// states only and lets the stencil propagate it.
enum class NoiseStage { kAfterDifferencing, kBeforeDifferencing };

struct NoiseSpec {
  double gaussian_sigma = 0.0;
  double outlier_fraction = 0.0;  // p in [0, 1)
  double outlier_low = 0.5;       // outliers add U(outlier_low, outlier_high)
  double outlier_high = 1.0;
  std::uint64_t seed = 0;
  NoiseStage stage = NoiseStage::kAfterDifferencing;

  void validate() const;
};

/// A flat sample table. NaN marks a value that is not available (for example
/// a derivative outside the stencil's interior).
struct DataTable {
  std::vector<std::string> columns;
  Eigen::MatrixXd values;

  std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t column_index(std::string_view name) const;  // ConfigError if absent
  bool has_column(std::string_view name) const;
  Eigen::VectorXd column(std::string_view name) const;
};

struct Trajectory {
  Eigen::VectorXd times;
  std::vector<std::string> state_names;
  Eigen::MatrixXd states;
  Eigen::MatrixXd clean_states;
  std::vector<std::string> gradient_names;
  Eigen::MatrixXd gradients;        // NaN where gradient_valid is false
  Eigen::MatrixXd clean_gradients;
  std::vector<bool> gradient_valid;
  std::vector<std::size_t> corrupted_rows;  // rows hit by outliers

  std::size_t size() const { return static_cast<std::size_t>(times.size()); }
};

/// Space-time samples of a scalar field over several realizations.
struct FieldDataset {
  DataTable table;
  Eigen::MatrixXd clean_values;  // same layout as table.values
  std::vector<std::size_t> corrupted_rows;
  std::vector<std::array<double, 3>> xi;  // per realization
};

// --- predator-prey: dx/dt = x/2 - 3xy/2, dy/dt = xy - y/2

struct PredatorPreyConfig {
  double x0 = 0.6;
  double y0 = 0.2;
  double t_end = 20.0;
  std::size_t n_points = 200;
};

void predator_prey_rhs(double x, double y, double& dxdt, double& dydt);

/// RK4 trajectory sampled at linspace(0, t_end, n_points). Gradients are the
/// exact right-hand sides at the clean samples; noise hits all four columns.
Trajectory gen_predator_prey(const PredatorPreyConfig& config, const NoiseSpec& noise);

// --- fish harvesting: dN/dt = N(4 - N) - 3

struct FishConfig {
  std::size_t n_curves = 5;
  std::size_t n_points = 20;
  double t_end = 2.0;
  double init_low = 1.0;
  double init_high = 3.0;
};

double fish_rhs(double n);

/// One trajectory per curve with five-point differenced gradients (two
/// points masked at each end). Initial values are drawn from the noise seed.
std::vector<Trajectory> gen_fish_harvesting(const FishConfig& config, const NoiseSpec& noise);

/// Same, from explicit initial values.
std::vector<Trajectory> gen_fish_harvesting(const FishConfig& config, const std::vector<double>& initial_values,
                                            const NoiseSpec& noise);

// --- heat diffusion with random initial and boundary conditions

using HeatXi = std::array<double, 3>;

/// u_t = 0.5 u_xx on [0, 5] with
///   u(x, 0) = -xi1 x (x - 5) / 2
///   u(0, t) = xi2 sin 2t - xi3^2 cos t + xi3^2
///   u(5, t) = xi2 xi3 sin t - xi3 sin(t + pi/4) + xi3 sqrt(2)/2
HeatProblem heat_benchmark_problem(const HeatXi& xi);

struct HeatDatasetConfig {
  std::size_t n_realizations = 20;
  std::size_t nx = 11;
  std::size_t nt = 11;
  double x_max = 5.0;
  double t_max = 5.0;
  HeatResolution resolution;
  // Columns that outliers are added to.
  std::vector<std::string> outlier_columns{"u", "u_t", "u_x", "u_xx"};
};

/// Columns: realization, x, t, xi1, xi2, xi3, sin_x, cos_x, sin_t, cos_t,
/// u, u_t, u_x, u_xx, deriv_valid. Rows ordered by realization, then t, then
/// x. Derivatives use five-point stencils and exist on interior nodes only.
/// xi1, xi2 ~ U(0, 1) and xi3 ~ N(0, 0.5^2), drawn from the noise seed.
FieldDataset gen_heat_random_ibc(const HeatDatasetConfig& config, const NoiseSpec& noise);

/// Same, with explicit parameters per realization.
FieldDataset gen_heat_random_ibc(const HeatDatasetConfig& config, const std::vector<HeatXi>& xi,
                                 const NoiseSpec& noise);

// --- tables and utilities

DataTable to_table(const Trajectory& trajectory);
/// Stacks curves with a leading "curve" column and a trailing "deriv_valid".
DataTable to_table(const std::vector<Trajectory>& curves);

/// 10 log10(|signal|^2 / |noise|^2); +inf when the noise is zero. Non-finite
/// entries are skipped pairwise.
double snr_db(const Eigen::VectorXd& signal, const Eigen::VectorXd& noise);

/// Picks round(p N) of the rows uniformly without replacement and adds an
/// independent U(low, high) draw to each listed column of those rows (NaN
/// entries stay NaN). Returns the sorted corrupted rows.
std::vector<std::size_t> inject_outliers(Eigen::MatrixXd& values, const std::vector<Eigen::Index>& columns,
                                         const NoiseSpec& spec, std::mt19937_64& rng);
void inject_outliers(Trajectory& trajectory, const NoiseSpec& spec);
void inject_outliers(FieldDataset& dataset, const std::vector<std::string>& columns, const NoiseSpec& spec);

}  // namespace eqforge
