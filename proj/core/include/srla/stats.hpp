#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

namespace srla {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_sum_exp(const Eigen::VectorXd& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

inline double log_sum_exp(double a, double b) {
  const double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Spearman rank correlation with average ranks on ties. NaN if either
/// side is constant.
double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Linear-interpolation quantile of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Lowest index of the maximum entry (deterministic tie-break).
int argmax_lowest(const Eigen::VectorXd& v);

}  // namespace srla
