#include "eqforge/derivatives.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "eqforge/error.hpp"

namespace eqforge {

namespace {

// Applies a stencil with offsets [-radius_left, radius_right] and scales by `scale`.
DerivativeEstimate apply_stencil(const Grid1D& grid, std::initializer_list<double> weights, int left, int right,
                                 double scale, const char* name) {
  const auto n = grid.values.size();
  const auto width = static_cast<Eigen::Index>(weights.size());
  if (!(grid.spacing > 0.0) || !std::isfinite(grid.spacing))
    throw DomainError(std::string(name) + ": grid spacing must be positive");
  if (n < width)
    throw SizeError(std::string(name) + ": needs at least " + std::to_string(width) + " points, got " +
                    std::to_string(n));
  DerivativeEstimate out;
  out.values = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN());
  out.mask.valid.assign(static_cast<std::size_t>(n), false);
  for (Eigen::Index i = left; i < n - right; ++i) {
    double acc = 0.0;
    Eigen::Index k = i - left;
    for (double w : weights) acc += w * grid.values[k++];
    out.values[i] = acc / scale;
    out.mask.valid[static_cast<std::size_t>(i)] = true;
  }
  return out;
}

}  // namespace

std::size_t InteriorMask::count() const {
  std::size_t c = 0;
  for (bool b : valid) c += b ? 1 : 0;
  return c;
}

InteriorMask InteriorMask::operator&(const InteriorMask& other) const {
  if (valid.size() != other.valid.size()) throw SizeError("mask sizes differ");
  InteriorMask out;
  out.valid.resize(valid.size());
  for (std::size_t i = 0; i < valid.size(); ++i) out.valid[i] = valid[i] && other.valid[i];
  return out;
}

DerivativeEstimate central_diff_3pt(const Grid1D& grid) {
  return apply_stencil(grid, {-1.0, 0.0, 1.0}, 1, 1, 2.0 * grid.spacing, "central_diff_3pt");
}

DerivativeEstimate central_diff_5pt(const Grid1D& grid) {
  return apply_stencil(grid, {1.0, -8.0, 0.0, 8.0, -1.0}, 2, 2, 12.0 * grid.spacing, "central_diff_5pt");
}

DerivativeEstimate second_central_diff(const Grid1D& grid) {
  return apply_stencil(grid, {1.0, -2.0, 1.0}, 1, 1, grid.spacing * grid.spacing, "second_central_diff");
}

DerivativeEstimate second_central_diff_5pt(const Grid1D& grid) {
  return apply_stencil(grid, {-1.0, 16.0, -30.0, 16.0, -1.0}, 2, 2, 12.0 * grid.spacing * grid.spacing,
                       "second_central_diff_5pt");
}

DerivativeEstimate forward_diff_2pt(const Grid1D& grid) {
  return apply_stencil(grid, {-1.0, 1.0}, 0, 1, grid.spacing, "forward_diff_2pt");
}

DerivativeEstimate first_derivative(const Grid1D& grid, Stencil stencil) {
  switch (stencil) {
    case Stencil::kCentral3:
      return central_diff_3pt(grid);
    case Stencil::kCentral5:
      return central_diff_5pt(grid);
    case Stencil::kForward2:
      return forward_diff_2pt(grid);
  }
  throw ConfigError("unknown stencil");
}

}  // namespace eqforge
