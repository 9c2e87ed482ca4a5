#pragma once

#include <vector>

namespace slowfast {

double mean_of(const std::vector<double>& v);
// Standard error of the mean.
double se_of(const std::vector<double>& v);

// Least squares y = a + b x with coefficient of determination.
struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  int points = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Fit of log g(t) on t over t <= t_max, skipping values at or below `floor`.
LineFit fit_log_decay(const std::vector<double>& t, const std::vector<double>& g, double t_max, double floor);

}  // namespace slowfast
