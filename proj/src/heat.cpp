#include "eqforge/heat.hpp"

#include <cmath>
#include <vector>

#include "eqforge/error.hpp"

namespace eqforge {

Eigen::MatrixXd solve_heat(const HeatProblem& problem, std::size_t nx_out, const Eigen::VectorXd& t_out,
                           const HeatResolution& resolution) {
  if (nx_out < 2) throw SizeError("heat solver needs at least two output points in x");
  if (t_out.size() < 1) throw SizeError("heat solver needs at least one output time");
  if (resolution.x_refinement < 1 || !(resolution.max_dt > 0.0)) throw ConfigError("bad heat solver resolution");
  if ((nx_out - 1) * resolution.x_refinement < 2) throw SizeError("heat solver needs at least one interior node");
  if (!(problem.x_max > problem.x_min)) throw ConfigError("heat domain must have x_max > x_min");
  if (!problem.initial || !problem.left || !problem.right) throw ConfigError("heat problem needs IC and both BCs");
  for (Eigen::Index i = 1; i < t_out.size(); ++i)
    if (!(t_out[i] > t_out[i - 1])) throw ConfigError("output times must be strictly increasing");

  const std::size_t cells = (nx_out - 1) * resolution.x_refinement;
  const std::size_t n = cells + 1;
  const double h = (problem.x_max - problem.x_min) / static_cast<double>(cells);
  const auto& k = problem.coefficients;

  Eigen::VectorXd u(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) u[static_cast<Eigen::Index>(i)] = problem.initial(problem.x_min + static_cast<double>(i) * h);
  u[0] = problem.left(t_out[0]);
  u[static_cast<Eigen::Index>(n - 1)] = problem.right(t_out[0]);

  // Spatial operator stencil (L u)_i = lo u_{i-1} + mid u_i + hi u_{i+1} + source.
  const double lo = k.diffusion / (h * h) - k.advection / (2.0 * h);
  const double mid = -2.0 * k.diffusion / (h * h) + k.reaction;
  const double hi = k.diffusion / (h * h) + k.advection / (2.0 * h);

  Eigen::MatrixXd out(t_out.size(), static_cast<Eigen::Index>(nx_out));
  auto sample = [&](Eigen::Index row) {
    for (std::size_t j = 0; j < nx_out; ++j)
      out(row, static_cast<Eigen::Index>(j)) = u[static_cast<Eigen::Index>(j * resolution.x_refinement)];
  };
  sample(0);

  const std::size_t m = n - 2;  // interior unknowns
  std::vector<double> rhs(m), c_prime(m), d_prime(m);
  for (Eigen::Index row = 1; row < t_out.size(); ++row) {
    const double span = t_out[row] - t_out[row - 1];
    const auto steps = static_cast<std::size_t>(std::ceil(span / resolution.max_dt - 1e-9));
    const double dt = span / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const double t_next = t_out[row - 1] + static_cast<double>(s + 1) * dt;
      const double left_next = problem.left(t_next);
      const double right_next = problem.right(t_next);
      // (I - dt/2 L) u^{n+1} = (I + dt/2 L) u^n + dt * source
      for (std::size_t i = 0; i < m; ++i) {
        const auto g = static_cast<Eigen::Index>(i + 1);
        rhs[i] = u[g] + 0.5 * dt * (lo * u[g - 1] + mid * u[g] + hi * u[g + 1]) + dt * k.source;
      }
      rhs[0] += 0.5 * dt * lo * left_next;
      rhs[m - 1] += 0.5 * dt * hi * right_next;
      const double a = -0.5 * dt * lo;
      const double b = 1.0 - 0.5 * dt * mid;
      const double c = -0.5 * dt * hi;
      // Thomas algorithm for the constant tridiagonal system.
      c_prime[0] = c / b;
      d_prime[0] = rhs[0] / b;
      for (std::size_t i = 1; i < m; ++i) {
        const double denom = b - a * c_prime[i - 1];
        c_prime[i] = c / denom;
        d_prime[i] = (rhs[i] - a * d_prime[i - 1]) / denom;
      }
      u[static_cast<Eigen::Index>(m)] = d_prime[m - 1];
      for (std::size_t i = m - 1; i-- > 0;)
        u[static_cast<Eigen::Index>(i + 1)] = d_prime[i] - c_prime[i] * u[static_cast<Eigen::Index>(i + 2)];
      u[0] = left_next;
      u[static_cast<Eigen::Index>(n - 1)] = right_next;
    }
    sample(row);
  }
  return out;
}

}  // namespace eqforge
