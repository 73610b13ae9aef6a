#pragma once

// Small regression helpers shared by the experiment reports.

#include <cstddef>
#include <vector>

namespace equi {

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
};

/// Ordinary least squares y ~ a + b x. Needs at least two distinct x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of log y against log x; nonpositive entries are rejected.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);
/// Least squares y ~ X c, X given column-wise.
std::vector<double> least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y);

}  // namespace equi
