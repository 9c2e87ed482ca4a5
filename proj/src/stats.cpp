#include "slowfast/stats.hpp"

#include <cmath>
#include <numeric>

#include "slowfast/errors.hpp"

namespace slowfast {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw DomainError("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw DomainError("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  f.points = static_cast<int>(x.size());
  return f;
}

LineFit fit_log_decay(const std::vector<double>& t, const std::vector<double>& g, double t_max, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < t.size() && i < g.size(); ++i) {
    if (t[i] <= t_max * (1.0 + 1e-12) && g[i] > floor) {
      xs.push_back(t[i]);
      ys.push_back(std::log(g[i]));
    }
  }
  return fit_line(xs, ys);
}

}  // namespace slowfast
