#include "equi/stats.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "equi/errors.hpp"

namespace equi {

std::vector<double> least_squares(const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
  if (columns.empty()) throw DimensionError("least_squares: no columns");
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].size() != y.size()) throw DimensionError("least_squares: column length mismatch");
    for (Eigen::Index i = 0; i < n; ++i) x(i, static_cast<Eigen::Index>(j)) = columns[j][static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd rhs = Eigen::Map<const Eigen::VectorXd>(y.data(), n);
  const auto qr = x.colPivHouseholderQr();
  if (qr.rank() < x.cols()) throw DegenerateInput("least_squares: rank-deficient design");
  const Eigen::VectorXd c = qr.solve(rhs);
  return {c.data(), c.data() + c.size()};
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DimensionError("fit_line: need two or more paired points");
  const std::vector<double> ones(x.size(), 1.0);
  const auto c = least_squares({ones, x}, y);
  double mean = 0;
  for (const double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  double ss_tot = 0, ss_res = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - c[0] - c[1] * x[i];
    ss_res += r * r;
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  return {c[1], c[0], ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0};
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw std::domain_error("fit_loglog: nonpositive value");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace equi
