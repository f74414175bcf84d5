#pragma once

#include <cstddef>
#include <vector>

namespace tilelab {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;  // standard error of the slope; 0 with two points
  std::size_t points = 0;
};

// Ordinary least squares y = intercept + slope * x. Needs two distinct x values.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Fit restricted to the last ceil(n/2) points (x assumed increasing).
LineFit fit_line_top_half(const std::vector<double>& x, const std::vector<double>& y);

// Top-half fit of the running maximum of y: a limsup-style growth rate.
double running_max_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tilelab
