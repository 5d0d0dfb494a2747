#include "eqforge/predict.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

#include "eqforge/error.hpp"
#include "eqforge/parallel.hpp"

namespace eqforge {

std::vector<std::string> DiscoveredEquation::support() const {
  std::vector<std::string> out;
  for (const auto& t : terms) out.push_back(t.term.label());
  return out;
}

const DiscoveredTerm* DiscoveredEquation::find(std::string_view label) const {
  for (const auto& t : terms)
    if (t.term.label() == label) return &t;
  return nullptr;
}

double DiscoveredEquation::weight(std::string_view label) const {
  const auto* t = find(label);
  return t ? t->mean : 0.0;
}

std::string DiscoveredEquation::to_string(int precision) const {
  std::ostringstream out;
  out.precision(precision);
  out << std::fixed << target << " =";
  if (terms.empty()) return out.str() + " 0";
  bool first = true;
  for (const auto& t : terms) {
    const double w = t.mean;
    if (first)
      out << (w < 0 ? " -" : " ");
    else
      out << (w < 0 ? " - " : " + ");
    out << std::abs(w);
    if (!t.term.is_constant()) out << ' ' << t.term.label();
    first = false;
  }
  return out.str();
}

DiscoveredEquation make_discovered(std::string target, DictionarySpec dictionary, const SubtsbrResult& result,
                                   std::size_t subsample_size, std::uint64_t seed) {
  DiscoveredEquation eq;
  eq.target = std::move(target);
  for (const auto& t : result.model.terms)
    eq.terms.push_back({parse_term(t.label, dictionary.variables), t.mean, t.std});
  eq.dictionary = std::move(dictionary);
  eq.criterion = result.model.criterion;
  eq.adjusted_criterion = adjusted_criterion(eq.criterion, subsample_size);
  eq.subsample_size = subsample_size;
  eq.n_subsamples = result.subsamples.size();
  eq.winner_indices = result.best().rows;
  eq.seed = seed;
  return eq;
}

CompiledRhs::CompiledRhs(const DiscoveredEquation& equation, std::span<const std::string> names) {
  std::vector<std::string> missing;
  for (const auto& t : equation.terms) {
    std::vector<Factor> fs;
    for (const auto& [name, power] : t.term.factors()) {
      auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) {
        if (std::find(missing.begin(), missing.end(), name) == missing.end()) missing.push_back(name);
        continue;
      }
      fs.push_back({static_cast<std::size_t>(it - names.begin()), power});
    }
    weights_.push_back(t.mean);
    factors_.push_back(std::move(fs));
  }
  if (!missing.empty()) {
    std::string msg = "equation for " + equation.target + " uses variables that are not available:";
    for (const auto& m : missing) msg += " " + m;
    throw UnsupportedFormError(msg);
  }
}

double CompiledRhs::operator()(std::span<const double> values) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    double term = weights_[k];
    for (const auto& f : factors_[k]) {
      const double v = values[f.slot];
      for (unsigned p = 0; p < f.power; ++p) term *= v;
    }
    sum += term;
  }
  return sum;
}

OdeSolution integrate_ode(const std::vector<DiscoveredEquation>& system, const std::vector<std::string>& state_names,
                          const Eigen::VectorXd& initial_state, double t0, double t_end, std::size_t n_out,
                          const Rk4Options& options) {
  const std::size_t n = state_names.size();
  if (system.size() != n) throw ConfigError("need exactly one equation per state variable");
  if (static_cast<std::size_t>(initial_state.size()) != n) throw SizeError("initial state has the wrong length");
  if (n_out < 2 || !(t_end > t0)) throw ConfigError("need t_end > t0 and at least two output points");
  std::vector<std::string> names = state_names;
  names.push_back("t");
  std::vector<CompiledRhs> rhs;
  for (const auto& eq : system) rhs.emplace_back(eq, names);

  auto f = [&, buffer = std::vector<double>(n + 1)](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dydt) mutable {
    for (std::size_t i = 0; i < n; ++i) buffer[i] = y[static_cast<Eigen::Index>(i)];
    buffer[n] = t;
    for (std::size_t i = 0; i < n; ++i) dydt[static_cast<Eigen::Index>(i)] = rhs[i](buffer);
  };
  const Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n_out), t0, t_end);
  return integrate_rk4(f, initial_state, times, options);
}

std::vector<FanMember> integrate_fan(const DiscoveredEquation& equation, const std::string& state_name,
                                     const Eigen::VectorXd& initial_values, double t_end, std::size_t n_out,
                                     std::size_t threads) {
  std::vector<FanMember> fan(static_cast<std::size_t>(initial_values.size()));
  const std::vector<DiscoveredEquation> system{equation};
  const std::vector<std::string> names{state_name};
  // Compile once up front so an unsupported form surfaces as itself.
  [[maybe_unused]] const CompiledRhs check(equation, std::vector<std::string>{state_name, "t"});
  parallel_for(fan.size(), threads == 0 ? default_thread_count() : threads, [&](std::size_t i) {
    FanMember& m = fan[i];
    m.initial = initial_values[static_cast<Eigen::Index>(i)];
    try {
      OdeSolution sol = integrate_ode(system, names, Eigen::VectorXd::Constant(1, m.initial), 0.0, t_end, n_out);
      m.times = sol.times;
      m.values = sol.states.col(0);
    } catch (const BlowUpError& e) {
      m.blew_up = true;
      m.times = e.partial().times;
      m.values = e.partial().states.col(0);
    }
    m.last_time = m.times[m.times.size() - 1];
  });
  return fan;
}

LinearPdeCoefficients linear_pde_coefficients(const DiscoveredEquation& pde) {
  LinearPdeCoefficients c;
  std::vector<std::string> offending;
  for (const auto& t : pde.terms) {
    const auto& label = t.term.label();
    if (label == "u_xx")
      c.diffusion += t.mean;
    else if (label == "u_x")
      c.advection += t.mean;
    else if (label == "u")
      c.reaction += t.mean;
    else if (label == "1")
      c.source += t.mean;
    else
      offending.push_back(label);
  }
  if (!offending.empty()) {
    std::string msg = "discovered PDE is outside u_t = a u_xx + b u_x + c u + d; offending terms:";
    for (const auto& o : offending) msg += " [" + o + "]";
    throw UnsupportedFormError(msg);
  }
  if (c.diffusion < 0.0) throw UnsupportedFormError("negative diffusion coefficient; the forward problem is ill posed");
  for (double v : {c.diffusion, c.advection, c.reaction, c.source})
    if (!std::isfinite(v)) throw UnsupportedFormError("non-finite PDE coefficient");
  return c;
}

namespace {

// Slots follow heat_condition_variables().
std::function<double(double x, double t)> condition(const DiscoveredEquation& eq, const HeatXi& xi) {
  auto rhs = std::make_shared<CompiledRhs>(eq, heat_condition_variables());
  return [rhs, xi](double x, double t) {
    const double v[] = {x, t, xi[0], xi[1], xi[2], std::sin(x), std::cos(x), std::sin(t), std::cos(t)};
    return (*rhs)(v);
  };
}

}  // namespace

HeatProblem discovered_heat_problem(const DiscoveredHeatSystem& system, const HeatXi& xi, double x_min,
                                    double x_max) {
  HeatProblem p;
  p.coefficients = linear_pde_coefficients(system.pde);
  p.x_min = x_min;
  p.x_max = x_max;
  auto ic = condition(system.initial, xi);
  auto left = condition(system.left, xi);
  auto right = condition(system.right, xi);
  p.initial = [ic](double x) { return ic(x, 0.0); };
  p.left = [left, x_min](double t) { return left(x_min, t); };
  p.right = [right, x_max](double t) { return right(x_max, t); };
  return p;
}

Eigen::MatrixXd solve_discovered_heat(const DiscoveredHeatSystem& system, const HeatXi& xi, std::size_t nx_out,
                                      const Eigen::VectorXd& t_out, double x_min, double x_max,
                                      const HeatResolution& resolution) {
  return solve_heat(discovered_heat_problem(system, xi, x_min, x_max), nx_out, t_out, resolution);
}

PredictionReport mse_report(const Eigen::MatrixXd& predicted, const Eigen::MatrixXd& reference,
                            const Eigen::VectorXd& times, std::span<const double> requested) {
  if (predicted.rows() != reference.rows() || predicted.cols() != reference.cols())
    throw SizeError("predicted and reference fields differ in shape");
  if (times.size() != predicted.rows()) throw SizeError("one time per field row is required");
  PredictionReport r;
  r.times = times;
  r.predicted = predicted;
  r.reference = reference;
  r.overall_mse = predicted.size() == 0 ? 0.0 : (predicted - reference).squaredNorm() / static_cast<double>(predicted.size());
  for (double t : requested) {
    Eigen::Index row = -1;
    for (Eigen::Index i = 0; i < times.size(); ++i)
      if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t))) {
        row = i;
        break;
      }
    if (row < 0) throw DomainError("requested time " + std::to_string(t) + " is not on the output grid");
    const double mse = (predicted.row(row) - reference.row(row)).squaredNorm() / static_cast<double>(predicted.cols());
    r.mse_by_time.emplace_back(t, mse);
  }
  return r;
}

}  // namespace eqforge
