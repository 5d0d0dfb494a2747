#include "commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "eqforge/datasets.hpp"
#include "eqforge/dictionary.hpp"
#include "eqforge/io.hpp"
#include "eqforge/ode.hpp"
#include "eqforge/predict.hpp"
#include "eqforge/subtsbr.hpp"

namespace eqforge::cli {

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const auto& s : split_list(text)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw ConfigError(std::string("bad number '") + s + "' in " + what);
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& text, const char* what) {
  std::vector<std::size_t> out;
  for (double v : parse_doubles(text, what)) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ConfigError(std::string(what) + " must list positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// "--config FILE" may appear anywhere; it belongs to the root app, where
// CLI11 reads per-command sections ([discover], [generate.heat], ...).
std::vector<std::string> hoist_config(const std::vector<std::string>& args) {
  std::vector<std::string> front, rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      front = {args[i], args[i + 1]};
      ++i;
    } else if (args[i].rfind("--config=", 0) == 0) {
      front = {args[i]};
    } else {
      rest.push_back(args[i]);
    }
  }
  front.insert(front.end(), rest.begin(), rest.end());
  return front;
}

fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".meta.json");
  return p;
}

// ---------------------------------------------------------------- generate

struct NoiseOptions {
  double sigma = 0.0;
  double outlier_fraction = 0.0;
  double outlier_low = 0.5;
  double outlier_high = 1.0;
  std::string stage = "after";
  std::uint64_t seed = 0;
  std::string out;

  NoiseSpec spec() const {
    NoiseSpec n;
    n.gaussian_sigma = sigma;
    n.outlier_fraction = outlier_fraction;
    n.outlier_low = outlier_low;
    n.outlier_high = outlier_high;
    n.seed = seed;
    n.stage = stage == "before" ? NoiseStage::kBeforeDifferencing : NoiseStage::kAfterDifferencing;
    n.validate();
    return n;
  }
};

void add_noise_options(CLI::App* app, NoiseOptions& o, const std::string& default_out) {
  o.out = default_out;
  app->add_option("--out", o.out, "CSV path; a .meta.json sidecar is written next to it")->capture_default_str();
  app->add_option("--seed", o.seed, "Seed for every random draw")->capture_default_str();
  app->add_option("--noise", o.sigma, "Gaussian noise standard deviation")->capture_default_str();
  app->add_option("--outlier-frac", o.outlier_fraction, "Fraction of rows given additive uniform outliers")
      ->capture_default_str();
  app->add_option("--outlier-low", o.outlier_low, "Lower end of the outlier draw")->capture_default_str();
  app->add_option("--outlier-high", o.outlier_high, "Upper end of the outlier draw")->capture_default_str();
  app->add_option("--noise-stage", o.stage, "Gaussian noise after or before finite differencing")
      ->check(CLI::IsMember({"after", "before"}))
      ->capture_default_str();
}

Json sidecar_base(const std::string& generator, const NoiseSpec& noise, const DataTable& table) {
  return Json{{"generator", generator}, {"seed", noise.seed}, {"noise", to_json(noise)},
              {"columns", table.columns}, {"rows", table.rows()}};
}

void write_dataset(const fs::path& path, const DataTable& table, const Json& sidecar, std::ostream& out) {
  write_csv(path, table);
  write_json(sidecar_path(path), sidecar);
  out << "wrote " << table.rows() << " rows to " << path.string() << " (metadata: " << sidecar_path(path).string()
      << ")\n";
}

// ---------------------------------------------------------------- problems

struct ProblemOptions {
  std::string data;
  std::string target;
  std::string vars;
  std::string dims;
  std::string constants;
  std::string target_dim;
  std::string exclude;
  unsigned degree = 3;
  double threshold = 0.1;
  std::vector<std::string> where;
};

void add_problem_options(CLI::App* app, ProblemOptions& o) {
  app->add_option("--data", o.data, "Input CSV")->required();
  app->add_option("--target", o.target, "Column holding the left-hand side (e.g. dxdt)")->required();
  app->add_option("--vars", o.vars, "Comma-separated dictionary variables (CSV columns)")->required();
  app->add_option("--dims", o.dims, "Comma-separated dimensions aligned with --vars, e.g. \"L,L T^-1\"");
  app->add_option("--constants", o.constants, "Variables that are physical constants (dimensional dictionaries)");
  app->add_option("--target-dim", o.target_dim, "Dimension of the target; keeps only matching monomials");
  app->add_option("--exclude", o.exclude, "Comma-separated term labels removed from the dictionary");
  app->add_option("--degree", o.degree, "Maximal total degree of the monomials")->capture_default_str();
  app->add_option("--threshold", o.threshold, "Weights with |mean| below this are cut")->capture_default_str();
  app->add_option("--where", o.where, "Keep rows with col=value (repeatable)");
}

struct Problem {
  DictionarySpec spec;
  Dictionary dictionary;
  RegressionProblem regression;
  std::size_t dropped = 0;
};

Problem build_problem(const ProblemOptions& o) {
  if (o.threshold < 0.0 || !std::isfinite(o.threshold)) throw ConfigError("--threshold must be >= 0");
  const DataTable table = read_csv(o.data);
  Problem p;
  const auto names = split_list(o.vars);
  if (names.empty()) throw ConfigError("--vars is empty");
  const auto dims = split_list(o.dims);
  if (!dims.empty() && dims.size() != names.size()) throw ConfigError("--dims must have one entry per variable");
  const auto constants = split_list(o.constants);
  for (std::size_t i = 0; i < names.size(); ++i) {
    VariableSpec v{names[i], std::nullopt, false};
    if (!dims.empty()) v.dimension = parse_dimension(dims[i]);
    v.constant = std::find(constants.begin(), constants.end(), names[i]) != constants.end();
    p.spec.variables.push_back(v);
  }
  for (const auto& c : constants)
    if (std::find(names.begin(), names.end(), c) == names.end())
      throw ConfigError("--constants names '" + c + "', which is not in --vars");
  p.spec.degree = o.degree;
  if (!o.target_dim.empty()) p.spec.target_dimension = parse_dimension(o.target_dim);
  p.spec.exclude_terms = split_list(o.exclude);
  p.dictionary = p.spec.build();
  if (p.dictionary.empty()) throw ConfigError("the dictionary is empty");

  // Row filter, then drop rows whose target is missing.
  std::vector<std::pair<std::size_t, double>> filters;
  for (const auto& w : o.where) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) throw ConfigError("--where expects col=value, got '" + w + "'");
    const auto value = parse_doubles(w.substr(eq + 1), "--where");
    if (value.size() != 1) throw ConfigError("--where expects one value, got '" + w + "'");
    filters.emplace_back(table.column_index(w.substr(0, eq)), value[0]);
  }
  const std::size_t target_col = table.column_index(o.target);
  std::vector<std::size_t> columns;
  for (const auto& n : names) columns.push_back(table.column_index(n));
  std::vector<Eigen::Index> rows;
  for (Eigen::Index r = 0; r < table.values.rows(); ++r) {
    bool keep = true;
    for (const auto& [c, v] : filters)
      if (!(std::abs(table.values(r, static_cast<Eigen::Index>(c)) - v) <= 1e-9 * std::max(1.0, std::abs(v))))
        keep = false;
    if (!keep) continue;
    if (!std::isfinite(table.values(r, static_cast<Eigen::Index>(target_col)))) {
      ++p.dropped;
      continue;
    }
    rows.push_back(r);
  }
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
  Eigen::VectorXd target(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
          table.values(rows[i], static_cast<Eigen::Index>(columns[c]));
    target[static_cast<Eigen::Index>(i)] = table.values(rows[i], static_cast<Eigen::Index>(target_col));
  }
  DesignMatrix dm = evaluate(p.dictionary, samples);
  p.dropped += dm.rejected_rows.size();
  if (dm.kept_rows.empty()) throw ConfigError("no usable rows after filtering");
  p.regression.phi = std::move(dm.matrix);
  p.regression.eta.resize(static_cast<Eigen::Index>(dm.kept_rows.size()));
  for (std::size_t i = 0; i < dm.kept_rows.size(); ++i)
    p.regression.eta[static_cast<Eigen::Index>(i)] = target[static_cast<Eigen::Index>(dm.kept_rows[i])];
  p.regression.term_labels = p.dictionary.labels();
  return p;
}

// ---------------------------------------------------------------- discover

struct DiscoverOptions {
  ProblemOptions problem;
  std::optional<std::size_t> subsample;
  std::string n_sub = "1";
  std::optional<double> outlier_fraction;
  std::optional<double> confidence;
  std::uint64_t seed = 0;
  std::string out;
  std::optional<double> criterion_floor;
  std::optional<std::size_t> stall_patience;
};

int cmd_discover(const DiscoverOptions& o, std::ostream& out) {
  Problem p = build_problem(o.problem);
  const std::size_t n = p.regression.n_samples();
  const std::size_t s = o.subsample.value_or(n);
  if (s < 1 || s > n) throw ConfigError("--subsample must lie in [1, " + std::to_string(n) + "]");
  std::size_t l = 0;
  if (o.n_sub == "auto") {
    if (!o.outlier_fraction || !o.confidence) throw ConfigError("--n-sub auto needs --outlier-frac and --confidence");
    l = subsamples_needed(n, *o.outlier_fraction, s, *o.confidence);
  } else {
    l = parse_sizes(o.n_sub, "--n-sub").at(0);
  }
  out << "rows: " << n << " (dropped " << p.dropped << "), terms: " << p.dictionary.size() << ", S = " << s
      << ", L = " << l << "\n";

  TsbrConfig tsbr;
  tsbr.threshold = o.problem.threshold;
  SubsamplingConfig sub;
  sub.subsample_size = s;
  sub.n_subsamples = l;
  sub.seed = o.seed;
  sub.adaptive.criterion_floor = o.criterion_floor;
  sub.adaptive.stall_patience = o.stall_patience;
  const SubtsbrResult result = fit_subtsbr(p.regression, tsbr, sub);
  if (result.model.empty()) throw EmptyModelError("the winning subsample produced an empty model");
  DiscoveredEquation eq = make_discovered(o.problem.target, p.spec, result, s, o.seed);

  out << eq.to_string() << "\n";
  for (const auto& t : eq.terms)
    out << "  " << std::setw(16) << std::left << t.term.label() << std::right << std::setw(12) << std::setprecision(6)
        << t.mean << "  (std " << std::setprecision(3) << t.std << ")\n";
  out << "criterion " << std::setprecision(6) << eq.criterion << ", adjusted " << eq.adjusted_criterion
      << ", subsamples used " << eq.n_subsamples << ", winner #" << result.winner << "\n";
  if (!o.out.empty()) {
    write_model(o.out, eq);
    out << "model written to " << o.out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepOptions {
  ProblemOptions problem;
  std::string sizes;
  std::string counts;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::string truth;
  std::string out;
};

int cmd_sweep(const SweepOptions& o, std::ostream& out) {
  Problem p = build_problem(o.problem);
  SweepConfig sc;
  sc.sizes = parse_sizes(o.sizes, "--sizes");
  sc.counts = parse_sizes(o.counts, "--counts");
  sc.trials = o.trials;
  sc.seed = o.seed;
  if (!o.truth.empty()) {
    std::vector<std::string> truth;
    for (const auto& label : split_list(o.truth)) truth.push_back(parse_term(label, p.spec.variables).label());
    sc.truth = truth;
  }
  TsbrConfig tsbr;
  tsbr.threshold = o.problem.threshold;
  const auto cells = sweep(p.regression, tsbr, sc);
  const DataTable table = sweep_table(cells);
  write_csv(o.out, table);
  out << std::setw(6) << "S" << std::setw(6) << "L" << std::setw(10) << "success" << std::setw(14) << "med.crit"
      << std::setw(14) << "med.adj" << "\n";
  for (const auto& c : cells)
    out << std::setw(6) << c.subsample_size << std::setw(6) << c.n_subsamples << std::setw(10) << std::setprecision(3)
        << c.success_rate << std::setw(14) << std::setprecision(4) << c.median_criterion << std::setw(14)
        << c.median_adjusted_criterion << "\n";
  out << "sweep written to " << o.out << "\n";
  return kOk;
}

// ---------------------------------------------------------------- predict

DiscoveredEquation load_nonempty(const std::string& path) {
  DiscoveredEquation eq = read_model(path);
  if (eq.empty()) throw EmptyModelError("model " + path + " has no terms");
  return eq;
}

struct PredictOdeOptions {
  std::vector<std::string> models;
  std::string states;
  std::string init;
  double t0 = 0.0;
  double t_end = 20.0;
  std::size_t points = 201;
  std::string reference = "none";
  std::string out;
};

int cmd_predict_ode(const PredictOdeOptions& o, std::ostream& out) {
  std::vector<DiscoveredEquation> system;
  for (const auto& m : o.models) system.push_back(load_nonempty(m));
  const auto states = split_list(o.states);
  const auto init = parse_doubles(o.init, "--init");
  if (init.size() != states.size()) throw ConfigError("--init needs one value per state");
  const Eigen::VectorXd y0 = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
  const OdeSolution pred = integrate_ode(system, states, y0, o.t0, o.t_end, o.points);

  Eigen::MatrixXd ref = Eigen::MatrixXd::Constant(pred.states.rows(), pred.states.cols(),
                                                  std::numeric_limits<double>::quiet_NaN());
  if (o.reference != "none") {
    OdeRhs rhs;
    if (o.reference == "predator-prey") {
      if (states.size() != 2) throw ConfigError("the predator-prey reference has two states");
      rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { predator_prey_rhs(y[0], y[1], d[0], d[1]); };
    } else {
      if (states.size() != 1) throw ConfigError("the fish reference has one state");
      rhs = [](double, const Eigen::VectorXd& y, Eigen::VectorXd& d) { d[0] = fish_rhs(y[0]); };
    }
    try {
      ref = integrate_rk4(rhs, y0, pred.times).states;
    } catch (const BlowUpError& e) {
      ref.topRows(e.partial().states.rows()) = e.partial().states;
    }
  }
  PredictionReport report = mse_report(pred.states, ref, pred.times, {});
  write_prediction_csv(o.out, report, states);
  out << "integrated " << states.size() << " state(s) on [" << o.t0 << ", " << o.t_end << "] at " << o.points
      << " points\n";
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto c = static_cast<Eigen::Index>(s);
    out << "  " << states[s] << "(t_end) = " << pred.states(pred.states.rows() - 1, c);
    if (o.reference != "none")
      out << ", MSE vs reference " << (pred.states.col(c) - ref.col(c)).squaredNorm() / static_cast<double>(ref.rows());
    out << "\n";
  }
  out << "prediction written to " << o.out << "\n";
  return kOk;
}

struct PredictHeatOptions {
  std::string pde, ic, left, right;
  std::string xi = "0.5,0.5,0.5";
  double x_max = 5.0;
  double t_end = 15.0;
  std::size_t nx = 51;
  std::size_t t_points = 151;
  std::string times = "0,3,6,9,12,15";
  std::string out;
};

int cmd_predict_heat(const PredictHeatOptions& o, std::ostream& out) {
  DiscoveredHeatSystem system{load_nonempty(o.pde), load_nonempty(o.ic), load_nonempty(o.left),
                              load_nonempty(o.right)};
  const auto xi_values = parse_doubles(o.xi, "--xi");
  if (xi_values.size() != 3) throw ConfigError("--xi needs three values");
  const HeatXi xi{xi_values[0], xi_values[1], xi_values[2]};
  if (o.t_points < 2 || o.nx < 3) throw ConfigError("need --t-points >= 2 and --nx >= 3");
  const Eigen::VectorXd t_out = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(o.t_points), 0.0, o.t_end);
  const Eigen::MatrixXd predicted = solve_discovered_heat(system, xi, o.nx, t_out, 0.0, o.x_max);
  HeatProblem truth = heat_benchmark_problem(xi);
  truth.x_max = o.x_max;
  const Eigen::MatrixXd reference = solve_heat(truth, o.nx, t_out);
  const auto requested = parse_doubles(o.times, "--times");
  PredictionReport report = mse_report(predicted, reference, t_out, requested);
  report.x = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(o.nx), 0.0, o.x_max);
  write_prediction_csv(o.out, report);
  out << "discovered: " << system.pde.to_string() << "\n";
  out << std::setw(8) << "t" << std::setw(14) << "MSE" << "\n";
  for (const auto& [t, mse] : report.mse_by_time)
    out << std::setw(8) << t << std::setw(14) << std::scientific << std::setprecision(3) << mse << std::defaultfloat
        << "\n";
  out << "overall MSE " << std::scientific << std::setprecision(3) << report.overall_mse << std::defaultfloat << "\n";
  out << "prediction written to " << o.out << "\n";
  return kOk;
}

struct PredictFanOptions {
  std::string model;
  std::string state = "N";
  double low = 0.5;
  double high = 3.5;
  std::size_t count = 30;
  double t_end = 10.0;
  std::size_t points = 201;
  std::string out;
  std::string trajectories;
};

int cmd_predict_fan(const PredictFanOptions& o, std::ostream& out) {
  const DiscoveredEquation eq = load_nonempty(o.model);
  if (o.count < 1 || o.points < 2) throw ConfigError("need --count >= 1 and --points >= 2");
  const Eigen::VectorXd init = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(o.count), o.low, o.high);
  const auto fan = integrate_fan(eq, o.state, init, o.t_end, o.points);
  DataTable summary;
  summary.columns = {"initial", "terminal", "last_time", "blew_up", "monotone_decreasing", "monotone_increasing"};
  summary.values.resize(static_cast<Eigen::Index>(fan.size()), 6);
  DataTable paths;
  paths.columns = {"curve", "initial", "t", o.state};
  std::vector<std::array<double, 4>> rows;
  for (std::size_t i = 0; i < fan.size(); ++i) {
    const auto& m = fan[i];
    bool dec = true, inc = true;
    for (Eigen::Index k = 1; k < m.values.size(); ++k) {
      dec = dec && m.values[k] <= m.values[k - 1];
      inc = inc && m.values[k] >= m.values[k - 1];
    }
    summary.values.row(static_cast<Eigen::Index>(i)) << m.initial, m.terminal(), m.last_time, m.blew_up ? 1.0 : 0.0,
        dec ? 1.0 : 0.0, inc ? 1.0 : 0.0;
    for (Eigen::Index k = 0; k < m.values.size(); ++k)
      rows.push_back({static_cast<double>(i), m.initial, m.times[k], m.values[k]});
  }
  write_csv(o.out, summary);
  if (!o.trajectories.empty()) {
    paths.values.resize(static_cast<Eigen::Index>(rows.size()), 4);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (Eigen::Index c = 0; c < 4; ++c) paths.values(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
    write_csv(o.trajectories, paths);
  }
  out << eq.to_string() << "\n";
  out << std::setw(10) << "N0" << std::setw(14) << "terminal" << std::setw(10) << "t_last" << "\n";
  for (const auto& m : fan)
    out << std::setw(10) << std::setprecision(4) << m.initial << std::setw(14) << m.terminal() << std::setw(10)
        << m.last_time << (m.blew_up ? "  blow-up" : "") << "\n";
  out << "fan written to " << o.out << "\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparse Bayesian discovery of differential equations from noisy data", "eqforge"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "TOML/INI file; keys are long flag names under a [command] section "
                 "(e.g. [discover], [generate.heat]); flags on the command line win");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  // generate
  auto* generate = app.add_subcommand("generate", "Write a benchmark dataset (CSV plus metadata JSON)");
  generate->require_subcommand(1);

  PredatorPreyConfig pp;
  NoiseOptions pp_noise;
  auto* gen_pp = generate->add_subcommand("predator-prey", "dx/dt = x/2 - 3xy/2, dy/dt = xy - y/2");
  add_noise_options(gen_pp, pp_noise, "predator_prey.csv");
  gen_pp->add_option("--points", pp.n_points, "Samples on [0, t_end]")->capture_default_str();
  gen_pp->add_option("--t-end", pp.t_end, "Final time")->capture_default_str();
  gen_pp->add_option("--x0", pp.x0, "Initial prey")->capture_default_str();
  gen_pp->add_option("--y0", pp.y0, "Initial predator")->capture_default_str();

  FishConfig fish;
  NoiseOptions fish_noise;
  auto* gen_fish = generate->add_subcommand("fish", "dN/dt = N(4 - N) - 3 from random initial values");
  add_noise_options(gen_fish, fish_noise, "fish.csv");
  gen_fish->add_option("--curves", fish.n_curves, "Number of trajectories")->capture_default_str();
  gen_fish->add_option("--points", fish.n_points, "Samples per trajectory")->capture_default_str();
  gen_fish->add_option("--t-end", fish.t_end, "Final time")->capture_default_str();
  gen_fish->add_option("--init-low", fish.init_low, "Initial values are uniform on [low, high]")->capture_default_str();
  gen_fish->add_option("--init-high", fish.init_high, "Upper end of the initial values")->capture_default_str();

  HeatDatasetConfig heat;
  NoiseOptions heat_noise;
  auto* gen_heat = generate->add_subcommand("heat", "u_t = u_xx / 2 with random initial and boundary conditions");
  add_noise_options(gen_heat, heat_noise, "heat.csv");
  gen_heat->add_option("--realizations", heat.n_realizations, "Random (xi1, xi2, xi3) draws")->capture_default_str();
  gen_heat->add_option("--nx", heat.nx, "Grid points in x on [0, 5]")->capture_default_str();
  gen_heat->add_option("--nt", heat.nt, "Grid points in t on [0, 5]")->capture_default_str();

  // discover
  DiscoverOptions disc;
  auto* discover = app.add_subcommand("discover", "Find a sparse equation for one target column with SubTSBR");
  add_problem_options(discover, disc.problem);
  discover->add_option("--subsample", disc.subsample, "Subsample size S (default: all rows, i.e. plain TSBR)");
  discover->add_option("--n-sub", disc.n_sub, "Number of subsamples L, or 'auto' to derive it from the outlier rate")
      ->capture_default_str();
  discover->add_option("--outlier-frac", disc.outlier_fraction, "Assumed outlier fraction for --n-sub auto");
  discover->add_option("--confidence", disc.confidence, "Probability of one clean subsample for --n-sub auto");
  discover->add_option("--seed", disc.seed, "Subsample seed")->capture_default_str();
  discover->add_option("--out", disc.out, "Model JSON path");
  discover->add_option("--criterion-floor", disc.criterion_floor, "Stop once the best criterion falls below this");
  discover->add_option("--stall-patience", disc.stall_patience, "Stop after this many subsamples without improvement");

  // sweep
  SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep", "Success rate and criteria over subsample sizes and counts");
  add_problem_options(sweep_cmd, sw.problem);
  sweep_cmd->add_option("--sizes", sw.sizes, "Comma-separated subsample sizes")->required();
  sweep_cmd->add_option("--counts", sw.counts, "Comma-separated subsample counts")->required();
  sweep_cmd->add_option("--trials", sw.trials, "Independent runs per cell")->capture_default_str();
  sweep_cmd->add_option("--seed", sw.seed, "Base seed")->capture_default_str();
  sweep_cmd->add_option("--truth", sw.truth, "Comma-separated true term labels for the success rate");
  sweep_cmd->add_option("--out", sw.out, "Output CSV")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Run discovered models forward");
  predict->require_subcommand(1);

  PredictOdeOptions po;
  auto* pred_ode = predict->add_subcommand("ode", "Integrate a discovered ODE system with RK4");
  pred_ode->add_option("--model", po.models, "Model JSON, one per state in --states order (repeatable)")->required();
  pred_ode->add_option("--states", po.states, "Comma-separated state names")->required();
  pred_ode->add_option("--init", po.init, "Comma-separated initial state")->required();
  pred_ode->add_option("--t0", po.t0, "Initial time")->capture_default_str();
  pred_ode->add_option("--t-end", po.t_end, "Final time")->capture_default_str();
  pred_ode->add_option("--points", po.points, "Output samples")->capture_default_str();
  pred_ode->add_option("--reference", po.reference, "True system to compare against")
      ->check(CLI::IsMember({"none", "predator-prey", "fish"}))
      ->capture_default_str();
  pred_ode->add_option("--out", po.out, "Prediction CSV")->required();

  PredictHeatOptions ph;
  auto* pred_heat = predict->add_subcommand("heat", "Solve a discovered heat system and compare with the truth");
  pred_heat->add_option("--pde", ph.pde, "Model JSON for u_t")->required();
  pred_heat->add_option("--ic", ph.ic, "Model JSON for u(x, 0)")->required();
  pred_heat->add_option("--left", ph.left, "Model JSON for u(0, t)")->required();
  pred_heat->add_option("--right", ph.right, "Model JSON for u(x_max, t)")->required();
  pred_heat->add_option("--xi", ph.xi, "xi1,xi2,xi3")->capture_default_str();
  pred_heat->add_option("--x-max", ph.x_max, "Right end of the rod")->capture_default_str();
  pred_heat->add_option("--t-end", ph.t_end, "Final time")->capture_default_str();
  pred_heat->add_option("--nx", ph.nx, "Output points in x")->capture_default_str();
  pred_heat->add_option("--t-points", ph.t_points, "Output points in t")->capture_default_str();
  pred_heat->add_option("--times", ph.times, "Times for the MSE table (must lie on the output grid)")
      ->capture_default_str();
  pred_heat->add_option("--out", ph.out, "Prediction CSV")->required();

  PredictFanOptions pf;
  auto* pred_fan = predict->add_subcommand("fan", "Integrate a scalar ODE from evenly spaced initial values");
  pred_fan->add_option("--model", pf.model, "Model JSON")->required();
  pred_fan->add_option("--state", pf.state, "State variable name")->capture_default_str();
  pred_fan->add_option("--low", pf.low, "Smallest initial value")->capture_default_str();
  pred_fan->add_option("--high", pf.high, "Largest initial value")->capture_default_str();
  pred_fan->add_option("--count", pf.count, "Number of initial values")->capture_default_str();
  pred_fan->add_option("--t-end", pf.t_end, "Final time")->capture_default_str();
  pred_fan->add_option("--points", pf.points, "Output samples per curve")->capture_default_str();
  pred_fan->add_option("--out", pf.out, "Terminal-value CSV")->required();
  pred_fan->add_option("--trajectories", pf.trajectories, "Optional long-format CSV of every curve");

  try {
    const auto ordered = hoist_config(args);
    std::vector<std::string> reversed(ordered.rbegin(), ordered.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kIoOrConfig;
  }

  try {
    if (gen_pp->parsed()) {
      const NoiseSpec noise = pp_noise.spec();
      const Trajectory tr = gen_predator_prey(pp, noise);
      const DataTable table = to_table(tr);
      Json meta = sidecar_base("predator-prey", noise, table);
      meta["config"] = {{"x0", pp.x0}, {"y0", pp.y0}, {"t_end", pp.t_end}, {"n_points", pp.n_points}};
      meta["corrupted_rows"] = tr.corrupted_rows;
      write_dataset(pp_noise.out, table, meta, out);
    } else if (gen_fish->parsed()) {
      const NoiseSpec noise = fish_noise.spec();
      const auto curves = gen_fish_harvesting(fish, noise);
      const DataTable table = to_table(curves);
      Json meta = sidecar_base("fish", noise, table);
      meta["config"] = {{"n_curves", fish.n_curves}, {"n_points", fish.n_points}, {"t_end", fish.t_end},
                        {"init_low", fish.init_low}, {"init_high", fish.init_high}};
      Json initial = Json::array();
      for (const auto& c : curves) initial.push_back(c.clean_states(0, 0));
      meta["initial_values"] = initial;
      write_dataset(fish_noise.out, table, meta, out);
    } else if (gen_heat->parsed()) {
      const NoiseSpec noise = heat_noise.spec();
      const FieldDataset ds = gen_heat_random_ibc(heat, noise);
      Json meta = sidecar_base("heat", noise, ds.table);
      meta["config"] = {{"n_realizations", heat.n_realizations}, {"nx", heat.nx}, {"nt", heat.nt},
                        {"x_max", heat.x_max}, {"t_max", heat.t_max}, {"outlier_columns", heat.outlier_columns}};
      Json xi = Json::array();
      for (const auto& x : ds.xi) xi.push_back({x[0], x[1], x[2]});
      meta["xi"] = xi;
      meta["corrupted_rows"] = ds.corrupted_rows;
      write_dataset(heat_noise.out, ds.table, meta, out);
    } else if (discover->parsed()) {
      return cmd_discover(disc, out);
    } else if (sweep_cmd->parsed()) {
      return cmd_sweep(sw, out);
    } else if (pred_ode->parsed()) {
      return cmd_predict_ode(po, out);
    } else if (pred_heat->parsed()) {
      return cmd_predict_heat(ph, out);
    } else if (pred_fan->parsed()) {
      return cmd_predict_fan(pf, out);
    }
    return kOk;
  } catch (const EmptyModelError& e) {
    err << "error: " << e.what() << "\n";
    return kEmptyModel;
  } catch (const UnsupportedFormError& e) {
    err << "error: " << e.what() << "\n";
    return kUnsupportedForm;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kIoOrConfig;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIoOrConfig;
  } catch (const SizeError& e) {
    err << "error: " << e.what() << "\n";
    return kIoOrConfig;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kIoOrConfig;
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << "\n";
    return kIoOrConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace eqforge::cli
