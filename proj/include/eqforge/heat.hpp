#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace eqforge {

/// u_t = diffusion u_xx + advection u_x + reaction u + source
struct LinearPdeCoefficients {
  double diffusion = 0.0;
  double advection = 0.0;
  double reaction = 0.0;
  double source = 0.0;
};

struct HeatProblem {
  LinearPdeCoefficients coefficients;
  double x_min = 0.0;
  double x_max = 5.0;
  std::function<double(double x)> initial;
  std::function<double(double t)> left;   // u(x_min, t)
  std::function<double(double t)> right;  // u(x_max, t)
};

struct HeatResolution {
  std::size_t x_refinement = 40;  // fine cells per output cell
  double max_dt = 2.5e-3;
};

/// Crank-Nicolson method of lines with Dirichlet boundaries on a fine grid,
/// sampled at `nx_out` uniform points of [x_min, x_max] and at `t_out`
/// (increasing; t_out[0] is the initial time). Returns a t_out x nx_out field.
Eigen::MatrixXd solve_heat(const HeatProblem& problem, std::size_t nx_out, const Eigen::VectorXd& t_out,
                           const HeatResolution& resolution = {});

}  // namespace eqforge
