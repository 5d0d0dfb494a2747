#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace eqforge {

/// Samples on a uniform grid.
struct Grid1D {
  Eigen::VectorXd values;
  double spacing = 1.0;
};

/// Marks the points where a stencil fits inside the grid.
struct InteriorMask {
  std::vector<bool> valid;

  std::size_t count() const;
  InteriorMask operator&(const InteriorMask& other) const;
};

/// Estimated derivative; entries outside the mask are NaN.
struct DerivativeEstimate {
  Eigen::VectorXd values;
  InteriorMask mask;
};

// (v[i+1] - v[i-1]) / 2h
DerivativeEstimate central_diff_3pt(const Grid1D& grid);
// (-v[i+2] + 8v[i+1] - 8v[i-1] + v[i-2]) / 12h
DerivativeEstimate central_diff_5pt(const Grid1D& grid);
// (v[i+1] - 2v[i] + v[i-1]) / h^2
DerivativeEstimate second_central_diff(const Grid1D& grid);
// (-v[i+2] + 16v[i+1] - 30v[i] + 16v[i-1] - v[i-2]) / 12h^2
DerivativeEstimate second_central_diff_5pt(const Grid1D& grid);
// (v[i+1] - v[i]) / h, last point masked. Used for two-frame time derivatives.
DerivativeEstimate forward_diff_2pt(const Grid1D& grid);

enum class Stencil { kCentral3, kCentral5, kForward2 };

DerivativeEstimate first_derivative(const Grid1D& grid, Stencil stencil);

}  // namespace eqforge
