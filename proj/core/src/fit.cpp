#include "tilelab/fit.hpp"

#include <algorithm>
#include <cmath>

#include "tilelab/errors.hpp"

namespace tilelab {

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StructuralError("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw InsufficientData("fit_line needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw InsufficientData("fit_line needs two distinct abscissae");
  LineFit fit;
  fit.points = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (n > 2) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      ss += r * r;
    }
    fit.slope_error = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
  }
  return fit;
}

LineFit fit_line_top_half(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StructuralError("fit_line_top_half: size mismatch");
  const std::size_t n = x.size();
  const std::size_t keep = std::max<std::size_t>(2, (n + 1) / 2);
  if (n < keep) throw InsufficientData("fit_line_top_half needs at least two points");
  const auto first = static_cast<std::ptrdiff_t>(n - keep);
  return fit_line({x.begin() + first, x.end()}, {y.begin() + first, y.end()});
}

double running_max_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StructuralError("running_max_slope: size mismatch");
  std::vector<double> envelope(y.size());
  double best = -INFINITY;
  for (std::size_t i = 0; i < y.size(); ++i) {
    best = std::max(best, y[i]);
    envelope[i] = best;
  }
  return fit_line_top_half(x, envelope).slope;
}

}  // namespace tilelab
