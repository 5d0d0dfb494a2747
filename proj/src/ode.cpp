#include "eqforge/ode.hpp"

#include <cmath>

namespace eqforge {

OdeSolution integrate_rk4(const OdeRhs& rhs, const Eigen::VectorXd& y0, const Eigen::VectorXd& sample_times,
                          const Rk4Options& options) {
  if (sample_times.size() < 1) throw SizeError("integrate_rk4 needs at least one sample time");
  if (options.substeps < 1) throw ConfigError("substeps must be positive");
  for (Eigen::Index i = 1; i < sample_times.size(); ++i)
    if (!(sample_times[i] > sample_times[i - 1])) throw ConfigError("sample times must be strictly increasing");

  const auto dim = y0.size();
  OdeSolution sol;
  sol.times = sample_times;
  sol.states.resize(sample_times.size(), dim);
  sol.states.row(0) = y0.transpose();

  Eigen::VectorXd y = y0, k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
  for (Eigen::Index i = 1; i < sample_times.size(); ++i) {
    const double t0 = sample_times[i - 1];
    const double h = (sample_times[i] - t0) / static_cast<double>(options.substeps);
    for (std::size_t s = 0; s < options.substeps; ++s) {
      const double t = t0 + static_cast<double>(s) * h;
      rhs(t, y, k1);
      tmp = y + 0.5 * h * k1;
      rhs(t + 0.5 * h, tmp, k2);
      tmp = y + 0.5 * h * k2;
      rhs(t + 0.5 * h, tmp, k3);
      tmp = y + h * k3;
      rhs(t + h, tmp, k4);
      y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      if (!y.allFinite() || y.cwiseAbs().maxCoeff() > options.blowup_bound) {
        OdeSolution partial;
        partial.times = sample_times.head(i);
        partial.states = sol.states.topRows(i);
        throw BlowUpError("solution blew up after t = " + std::to_string(sample_times[i - 1]), sample_times[i - 1],
                          std::move(partial));
      }
    }
    sol.states.row(i) = y.transpose();
  }
  return sol;
}

}  // namespace eqforge
