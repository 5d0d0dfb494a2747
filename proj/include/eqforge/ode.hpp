#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include <Eigen/Dense>

#include "eqforge/error.hpp"

namespace eqforge {

using OdeRhs = std::function<void(double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

struct OdeSolution {
  Eigen::VectorXd times;
  Eigen::MatrixXd states;  // one row per sample time
};

class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double last_finite_time, OdeSolution partial)
      : Error(what), last_finite_time_(last_finite_time), partial_(std::move(partial)) {}
  double last_finite_time() const { return last_finite_time_; }
  // Samples up to and including the last finite one.
  const OdeSolution& partial() const { return partial_; }

 private:
  double last_finite_time_;
  OdeSolution partial_;
};

struct Rk4Options {
  std::size_t substeps = 50;    // classical RK4 steps between consecutive samples
  double blowup_bound = 1e12;   // |y| above this counts as blow-up
};

/// Classical fourth-order Runge-Kutta sampled at `sample_times` (increasing,
/// first entry is the initial time).
OdeSolution integrate_rk4(const OdeRhs& rhs, const Eigen::VectorXd& y0, const Eigen::VectorXd& sample_times,
                          const Rk4Options& options = {});

}  // namespace eqforge
