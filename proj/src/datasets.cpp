#include "eqforge/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "eqforge/derivatives.hpp"
#include "eqforge/error.hpp"
#include "eqforge/ode.hpp"
#include "eqforge/parallel.hpp"

namespace eqforge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Independent streams per purpose so that, e.g., changing sigma does not move
// the initial values or the outlier rows.
enum Stream : std::uint64_t { kInitial = 1, kGaussian = 2, kOutlier = 3 };

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t tag, std::uint64_t sub = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(sub)};
  return std::mt19937_64(seq);
}

Eigen::VectorXd linspace(double a, double b, std::size_t n) {
  return Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), a, b);
}

void add_gaussian(Eigen::Ref<Eigen::MatrixXd> block, double sigma, std::mt19937_64& rng) {
  if (sigma == 0.0) return;
  std::normal_distribution<double> dist(0.0, sigma);
  for (Eigen::Index j = 0; j < block.cols(); ++j)
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      const double e = dist(rng);  // drawn even for NaN cells to keep streams aligned
      if (std::isfinite(block(i, j))) block(i, j) += e;
    }
}

std::vector<std::size_t> all_rows_outliers(Eigen::MatrixXd& values, const std::vector<Eigen::Index>& columns,
                                           const NoiseSpec& spec, std::uint64_t sub) {
  auto rng = make_stream(spec.seed, kOutlier, sub);
  return inject_outliers(values, columns, spec, rng);
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(gaussian_sigma >= 0.0) || !std::isfinite(gaussian_sigma)) throw ConfigError("noise sigma must be >= 0");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) throw ConfigError("outlier fraction must lie in [0, 1)");
  if (!(outlier_high >= outlier_low)) throw ConfigError("outlier interval must satisfy low <= high");
}

std::size_t DataTable::column_index(std::string_view name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) throw ConfigError("no column named '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns.begin());
}

bool DataTable::has_column(std::string_view name) const {
  return std::find(columns.begin(), columns.end(), name) != columns.end();
}

Eigen::VectorXd DataTable::column(std::string_view name) const {
  return values.col(static_cast<Eigen::Index>(column_index(name)));
}

void predator_prey_rhs(double x, double y, double& dxdt, double& dydt) {
  dxdt = 0.5 * x - 1.5 * x * y;
  dydt = x * y - 0.5 * y;
}

Trajectory gen_predator_prey(const PredatorPreyConfig& config, const NoiseSpec& noise) {
  noise.validate();
  if (config.n_points < 2) throw ConfigError("predator-prey needs at least two points");
  if (!(config.t_end > 0.0)) throw ConfigError("t_end must be positive");

  Trajectory tr;
  tr.times = linspace(0.0, config.t_end, config.n_points);
  tr.state_names = {"x", "y"};
  tr.gradient_names = {"dxdt", "dydt"};
  const OdeRhs rhs = [](double, const Eigen::VectorXd& s, Eigen::VectorXd& d) {
    predator_prey_rhs(s[0], s[1], d[0], d[1]);
  };
  tr.clean_states = integrate_rk4(rhs, Eigen::Vector2d(config.x0, config.y0), tr.times).states;
  tr.clean_gradients.resize(tr.clean_states.rows(), 2);
  for (Eigen::Index i = 0; i < tr.clean_states.rows(); ++i)
    predator_prey_rhs(tr.clean_states(i, 0), tr.clean_states(i, 1), tr.clean_gradients(i, 0),
                      tr.clean_gradients(i, 1));
  tr.gradient_valid.assign(config.n_points, true);

  // Gradients are exact here, so the noise stage does not matter.
  auto rng = make_stream(noise.seed, kGaussian);
  tr.states = tr.clean_states;
  tr.gradients = tr.clean_gradients;
  add_gaussian(tr.states, noise.gaussian_sigma, rng);
  add_gaussian(tr.gradients, noise.gaussian_sigma, rng);
  inject_outliers(tr, noise);
  return tr;
}

double fish_rhs(double n) { return n * (4.0 - n) - 3.0; }

std::vector<Trajectory> gen_fish_harvesting(const FishConfig& config, const NoiseSpec& noise) {
  if (!(config.init_high >= config.init_low)) throw ConfigError("initial-value interval is empty");
  auto rng = make_stream(noise.seed, kInitial);
  std::uniform_real_distribution<double> init(config.init_low, config.init_high);
  std::vector<double> initial(config.n_curves);
  for (auto& v : initial) v = init(rng);
  return gen_fish_harvesting(config, initial, noise);
}

std::vector<Trajectory> gen_fish_harvesting(const FishConfig& config, const std::vector<double>& initial_values,
                                            const NoiseSpec& noise) {
  noise.validate();
  if (config.n_points < 5) throw SizeError("fish curves need at least five points for the five-point stencil");
  if (!(config.t_end > 0.0)) throw ConfigError("t_end must be positive");

  const Eigen::VectorXd times = linspace(0.0, config.t_end, config.n_points);
  const double dt = times[1] - times[0];
  const OdeRhs rhs = [](double, const Eigen::VectorXd& s, Eigen::VectorXd& d) { d[0] = fish_rhs(s[0]); };

  std::vector<Trajectory> curves;
  for (std::size_t c = 0; c < initial_values.size(); ++c) {
    Trajectory tr;
    tr.times = times;
    tr.state_names = {"N"};
    tr.gradient_names = {"dNdt"};
    Eigen::VectorXd y0(1);
    y0[0] = initial_values[c];
    tr.clean_states = integrate_rk4(rhs, y0, times).states;
    tr.clean_gradients.resize(tr.clean_states.rows(), 1);
    for (Eigen::Index i = 0; i < tr.clean_states.rows(); ++i) tr.clean_gradients(i, 0) = fish_rhs(tr.clean_states(i, 0));

    auto rng = make_stream(noise.seed, kGaussian, c);
    tr.states = tr.clean_states;
    DerivativeEstimate d;
    if (noise.stage == NoiseStage::kBeforeDifferencing) {
      add_gaussian(tr.states, noise.gaussian_sigma, rng);
      d = central_diff_5pt({tr.states.col(0), dt});
    } else {
      d = central_diff_5pt({tr.clean_states.col(0), dt});
      add_gaussian(tr.states, noise.gaussian_sigma, rng);
      add_gaussian(d.values, noise.gaussian_sigma, rng);
    }
    tr.gradients = d.values;
    tr.gradient_valid = d.mask.valid;

    Eigen::MatrixXd joined(tr.states.rows(), 2);
    joined << tr.states, tr.gradients;
    tr.corrupted_rows = all_rows_outliers(joined, {0, 1}, noise, c);
    tr.states = joined.col(0);
    tr.gradients = joined.col(1);
    curves.push_back(std::move(tr));
  }
  return curves;
}

HeatProblem heat_benchmark_problem(const HeatXi& xi) {
  HeatProblem p;
  p.coefficients.diffusion = 0.5;
  p.x_min = 0.0;
  p.x_max = 5.0;
  const auto [xi1, xi2, xi3] = xi;
  p.initial = [xi1](double x) { return -0.5 * xi1 * x * (x - 5.0); };
  p.left = [xi2, xi3](double t) { return xi2 * std::sin(2.0 * t) - xi3 * xi3 * std::cos(t) + xi3 * xi3; };
  p.right = [xi2, xi3](double t) {
    return xi2 * xi3 * std::sin(t) - xi3 * std::sin(t + std::numbers::pi / 4.0) + xi3 * std::numbers::sqrt2 / 2.0;
  };
  return p;
}

FieldDataset gen_heat_random_ibc(const HeatDatasetConfig& config, const NoiseSpec& noise) {
  auto rng = make_stream(noise.seed, kInitial);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<HeatXi> xi(config.n_realizations);
  for (auto& x : xi) {
    x[0] = unit(rng);
    x[1] = unit(rng);
    x[2] = normal(rng);
  }
  return gen_heat_random_ibc(config, xi, noise);
}

FieldDataset gen_heat_random_ibc(const HeatDatasetConfig& config, const std::vector<HeatXi>& xi,
                                 const NoiseSpec& noise) {
  noise.validate();
  const std::size_t nx = config.nx;
  const std::size_t nt = config.nt;
  if (nx < 5 || nt < 5) throw SizeError("heat grid needs at least 5 points per axis for five-point stencils");
  const Eigen::VectorXd xs = linspace(0.0, config.x_max, nx);
  const Eigen::VectorXd ts = linspace(0.0, config.t_max, nt);
  const double dx = xs[1] - xs[0];
  const double dt = ts[1] - ts[0];

  std::vector<Eigen::MatrixXd> fields(xi.size());
  parallel_for(xi.size(), default_thread_count(), [&](std::size_t r) {
    HeatProblem p = heat_benchmark_problem(xi[r]);
    p.x_max = config.x_max;
    fields[r] = solve_heat(p, nx, ts, config.resolution);
  });

  FieldDataset ds;
  ds.xi = xi;
  ds.table.columns = {"realization", "x",     "t", "xi1", "xi2", "xi3",  "sin_x",      "cos_x",
                      "sin_t",       "cos_t", "u", "u_t", "u_x", "u_xx", "deriv_valid"};
  enum Col : Eigen::Index { kR, kX, kT, kXi1, kXi2, kXi3, kSinX, kCosX, kSinT, kCosT, kU, kUt, kUx, kUxx, kValid };
  const std::size_t per = nx * nt;
  Eigen::MatrixXd& v = ds.table.values;
  v.resize(static_cast<Eigen::Index>(per * xi.size()), 15);

  auto row_of = [&](std::size_t r, std::size_t it, std::size_t ix) {
    return static_cast<Eigen::Index>(r * per + it * nx + ix);
  };
  auto interior = [&](std::size_t it, std::size_t ix) { return it >= 2 && it + 2 < nt && ix >= 2 && ix + 2 < nx; };

  auto fill_derivatives = [&](Eigen::MatrixXd& out, std::size_t r, const Eigen::MatrixXd& u) {
    Eigen::MatrixXd ut(nt, nx), ux(nt, nx), uxx(nt, nx);
    for (std::size_t ix = 0; ix < nx; ++ix)
      ut.col(static_cast<Eigen::Index>(ix)) = central_diff_5pt({u.col(static_cast<Eigen::Index>(ix)), dt}).values;
    for (std::size_t it = 0; it < nt; ++it) {
      const Eigen::VectorXd line = u.row(static_cast<Eigen::Index>(it)).transpose();
      ux.row(static_cast<Eigen::Index>(it)) = central_diff_5pt({line, dx}).values.transpose();
      uxx.row(static_cast<Eigen::Index>(it)) = second_central_diff_5pt({line, dx}).values.transpose();
    }
    for (std::size_t it = 0; it < nt; ++it)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const auto row = row_of(r, it, ix);
        const auto a = static_cast<Eigen::Index>(it);
        const auto b = static_cast<Eigen::Index>(ix);
        const bool ok = interior(it, ix);
        out(row, kUt) = ok ? ut(a, b) : kNaN;
        out(row, kUx) = ok ? ux(a, b) : kNaN;
        out(row, kUxx) = ok ? uxx(a, b) : kNaN;
      }
  };

  for (std::size_t r = 0; r < xi.size(); ++r)
    for (std::size_t it = 0; it < nt; ++it)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        const auto row = row_of(r, it, ix);
        const double x = xs[static_cast<Eigen::Index>(ix)];
        const double t = ts[static_cast<Eigen::Index>(it)];
        v(row, kR) = static_cast<double>(r);
        v(row, kX) = x;
        v(row, kT) = t;
        v(row, kXi1) = xi[r][0];
        v(row, kXi2) = xi[r][1];
        v(row, kXi3) = xi[r][2];
        v(row, kSinX) = std::sin(x);
        v(row, kCosX) = std::cos(x);
        v(row, kSinT) = std::sin(t);
        v(row, kCosT) = std::cos(t);
        v(row, kU) = fields[r](static_cast<Eigen::Index>(it), static_cast<Eigen::Index>(ix));
        v(row, kValid) = interior(it, ix) ? 1.0 : 0.0;
      }
  for (std::size_t r = 0; r < xi.size(); ++r) fill_derivatives(v, r, fields[r]);
  ds.clean_values = v;

  auto rng = make_stream(noise.seed, kGaussian);
  if (noise.stage == NoiseStage::kBeforeDifferencing) {
    add_gaussian(v.col(kU), noise.gaussian_sigma, rng);
    for (std::size_t r = 0; r < xi.size(); ++r) {
      Eigen::MatrixXd u(nt, nx);
      for (std::size_t it = 0; it < nt; ++it)
        for (std::size_t ix = 0; ix < nx; ++ix)
          u(static_cast<Eigen::Index>(it), static_cast<Eigen::Index>(ix)) = v(row_of(r, it, ix), kU);
      fill_derivatives(v, r, u);
    }
  } else {
    add_gaussian(v.middleCols(kU, 4), noise.gaussian_sigma, rng);
  }
  inject_outliers(ds, config.outlier_columns, noise);
  return ds;
}

DataTable to_table(const Trajectory& tr) {
  DataTable t;
  t.columns.push_back("t");
  for (const auto& n : tr.state_names) t.columns.push_back(n);
  for (const auto& n : tr.gradient_names) t.columns.push_back(n);
  const Eigen::Index ns = tr.states.cols();
  const Eigen::Index ng = tr.gradients.cols();
  t.values.resize(tr.times.size(), 1 + ns + ng);
  t.values.col(0) = tr.times;
  t.values.middleCols(1, ns) = tr.states;
  t.values.middleCols(1 + ns, ng) = tr.gradients;
  return t;
}

DataTable to_table(const std::vector<Trajectory>& curves) {
  DataTable out;
  if (curves.empty()) return out;
  const DataTable first = to_table(curves.front());
  out.columns.push_back("curve");
  out.columns.insert(out.columns.end(), first.columns.begin(), first.columns.end());
  out.columns.push_back("deriv_valid");
  Eigen::Index rows = 0;
  for (const auto& c : curves) rows += c.times.size();
  out.values.resize(rows, static_cast<Eigen::Index>(out.columns.size()));
  Eigen::Index at = 0;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const DataTable t = to_table(curves[c]);
    if (t.columns != first.columns) throw SizeError("curves have different columns");
    const Eigen::Index n = t.values.rows();
    out.values.block(at, 0, n, 1).setConstant(static_cast<double>(c));
    out.values.block(at, 1, n, t.values.cols()) = t.values;
    for (Eigen::Index i = 0; i < n; ++i)
      out.values(at + i, out.values.cols() - 1) = curves[c].gradient_valid[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
    at += n;
  }
  return out;
}

double snr_db(const Eigen::VectorXd& signal, const Eigen::VectorXd& noise) {
  if (signal.size() != noise.size()) throw SizeError("signal and noise lengths differ");
  double ps = 0.0;
  double pn = 0.0;
  for (Eigen::Index i = 0; i < signal.size(); ++i) {
    if (!std::isfinite(signal[i]) || !std::isfinite(noise[i])) continue;
    ps += signal[i] * signal[i];
    pn += noise[i] * noise[i];
  }
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

std::vector<std::size_t> inject_outliers(Eigen::MatrixXd& values, const std::vector<Eigen::Index>& columns,
                                         const NoiseSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  const auto n = static_cast<std::size_t>(values.rows());
  const auto count = static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(n)));
  if (count == 0) return {};
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(count);
  std::sort(rows.begin(), rows.end());
  std::uniform_real_distribution<double> shift(spec.outlier_low, spec.outlier_high);
  for (auto r : rows)
    for (auto c : columns) {
      const double s = shift(rng);
      auto& cell = values(static_cast<Eigen::Index>(r), c);
      if (std::isfinite(cell)) cell += s;
    }
  return rows;
}

void inject_outliers(Trajectory& tr, const NoiseSpec& spec) {
  const Eigen::Index ns = tr.states.cols();
  const Eigen::Index ng = tr.gradients.cols();
  Eigen::MatrixXd joined(tr.states.rows(), ns + ng);
  joined << tr.states, tr.gradients;
  std::vector<Eigen::Index> columns(static_cast<std::size_t>(ns + ng));
  std::iota(columns.begin(), columns.end(), Eigen::Index{0});
  auto rng = make_stream(spec.seed, kOutlier);
  auto rows = inject_outliers(joined, columns, spec, rng);
  tr.states = joined.leftCols(ns);
  tr.gradients = joined.rightCols(ng);
  std::vector<std::size_t> merged;
  std::set_union(tr.corrupted_rows.begin(), tr.corrupted_rows.end(), rows.begin(), rows.end(),
                 std::back_inserter(merged));
  tr.corrupted_rows = std::move(merged);
}

void inject_outliers(FieldDataset& ds, const std::vector<std::string>& columns, const NoiseSpec& spec) {
  std::vector<Eigen::Index> idx;
  for (const auto& c : columns) idx.push_back(static_cast<Eigen::Index>(ds.table.column_index(c)));
  auto rng = make_stream(spec.seed, kOutlier);
  auto rows = inject_outliers(ds.table.values, idx, spec, rng);
  std::vector<std::size_t> merged;
  std::set_union(ds.corrupted_rows.begin(), ds.corrupted_rows.end(), rows.begin(), rows.end(),
                 std::back_inserter(merged));
  ds.corrupted_rows = std::move(merged);
}

}  // namespace eqforge
