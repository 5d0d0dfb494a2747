#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eqforge/datasets.hpp"
#include "eqforge/dictionary.hpp"
#include "eqforge/heat.hpp"
#include "eqforge/ode.hpp"
#include "eqforge/subtsbr.hpp"

namespace eqforge {

struct DiscoveredTerm {
  BasisTerm term;
  double mean = 0.0;
  double std = 0.0;
};

/// target = sum of mean_j * term_j, plus how the model was found.
struct DiscoveredEquation {
  std::string target;
  DictionarySpec dictionary;
  std::vector<DiscoveredTerm> terms;
  double criterion = std::numeric_limits<double>::infinity();
  double adjusted_criterion = std::numeric_limits<double>::infinity();
  std::size_t subsample_size = 0;
  std::size_t n_subsamples = 0;
  std::vector<std::size_t> winner_indices;  // rows of the winning subsample
  std::uint64_t seed = 0;

  bool empty() const { return terms.empty(); }
  std::vector<std::string> support() const;
  const DiscoveredTerm* find(std::string_view label) const;
  double weight(std::string_view label) const;  // 0 when absent

  /// "dxdt = 0.4993 x - 1.4912 x y"
  std::string to_string(int precision = 4) const;
};

/// Packs a SubTSBR winner. Term labels are parsed against the dictionary's variables.
DiscoveredEquation make_discovered(std::string target, DictionarySpec dictionary, const SubtsbrResult& result,
                                   std::size_t subsample_size, std::uint64_t seed);

/// Evaluates an equation's right-hand side on named inputs. Throws
/// UnsupportedFormError naming any term variable missing from `names`.
class CompiledRhs {
 public:
  CompiledRhs(const DiscoveredEquation& equation, std::span<const std::string> names);
  double operator()(std::span<const double> values) const;

 private:
  struct Factor {
    std::size_t slot;
    unsigned power;
  };
  std::vector<double> weights_;
  std::vector<std::vector<Factor>> factors_;
};

/// RK4 on a system with one equation per state; equations may use the state
/// names and "t". Samples at linspace(t0, t_end, n_out). BlowUpError carries
/// the last finite time.
OdeSolution integrate_ode(const std::vector<DiscoveredEquation>& system, const std::vector<std::string>& state_names,
                          const Eigen::VectorXd& initial_state, double t0, double t_end, std::size_t n_out,
                          const Rk4Options& options = {});

struct FanMember {
  double initial = 0.0;
  Eigen::VectorXd times;   // up to the last finite sample
  Eigen::VectorXd values;
  bool blew_up = false;
  double last_time = 0.0;

  double terminal() const { return values[values.size() - 1]; }
};

/// Integrates a scalar equation from each initial value (in parallel).
/// Blow-ups are recorded, not thrown.
std::vector<FanMember> integrate_fan(const DiscoveredEquation& equation, const std::string& state_name,
                                     const Eigen::VectorXd& initial_values, double t_end, std::size_t n_out,
                                     std::size_t threads = 0);

/// Names available to discovered initial/boundary expressions.
inline const std::vector<std::string>& heat_condition_variables() {
  static const std::vector<std::string> names{"x", "t", "xi1", "xi2", "xi3", "sin_x", "cos_x", "sin_t", "cos_t"};
  return names;
}

/// Reads u_t = a u_xx + b u_x + c u + d off a discovered equation. Any other
/// term raises UnsupportedFormError listing the offenders; a <= 0 is also
/// rejected since the backward problem is ill posed.
LinearPdeCoefficients linear_pde_coefficients(const DiscoveredEquation& pde);

struct DiscoveredHeatSystem {
  DiscoveredEquation pde;
  DiscoveredEquation initial;  // u(x, 0)
  DiscoveredEquation left;     // u(x_min, t)
  DiscoveredEquation right;    // u(x_max, t)
};

/// Builds the solvable problem at fixed xi. Conditions are evaluated with
/// heat_condition_variables(); x is pinned to the boundary for the BCs.
HeatProblem discovered_heat_problem(const DiscoveredHeatSystem& system, const HeatXi& xi, double x_min = 0.0,
                                    double x_max = 5.0);

/// t_out x nx_out field from the discovered system.
Eigen::MatrixXd solve_discovered_heat(const DiscoveredHeatSystem& system, const HeatXi& xi, std::size_t nx_out,
                                      const Eigen::VectorXd& t_out, double x_min = 0.0, double x_max = 5.0,
                                      const HeatResolution& resolution = {});

struct PredictionReport {
  Eigen::VectorXd times;      // rows of the fields
  Eigen::VectorXd x;          // columns of the fields (may be empty for ODEs)
  Eigen::MatrixXd predicted;
  Eigen::MatrixXd reference;
  std::vector<std::pair<double, double>> mse_by_time;  // requested slices
  double overall_mse = 0.0;
};

/// MSE per requested time (matched to the nearest row within 1e-9 relative,
/// DomainError otherwise) and over the whole field.
PredictionReport mse_report(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& reference,
                            const Eigen::VectorXd& times, std::span<const double> requested);

}  // namespace eqforge
