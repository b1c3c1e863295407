#include "nbw/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nbw {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
  else comp_ += (x - t) + sum_;
  sum_ = t;
}

double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

MeanStats mean_stats(std::span<const double> xs) {
  MeanStats m;
  m.n = xs.size();
  if (xs.empty()) return m;
  m.mean = compensated_sum(xs) / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum ss;
    for (double x : xs) ss.add((x - m.mean) * (x - m.mean));
    m.variance = ss.value() / static_cast<double>(xs.size() - 1);
    m.std_error = std::sqrt(m.variance / static_cast<double>(xs.size()));
  }
  return m;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  if (successes > trials) throw std::invalid_argument("successes exceed trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom;
  Interval out{std::max(0.0, center - half), std::min(1.0, center + half)};
  // Guard the containment invariant against rounding at p = 0 or 1.
  out.lo = std::min(out.lo, p);
  out.hi = std::max(out.hi, p);
  return out;
}

namespace {

double centered_r2(std::span<const double> y, const std::vector<double>& residuals) {
  const double ybar = compensated_sum(y) / static_cast<double>(y.size());
  CompensatedSum tot, res;
  for (std::size_t i = 0; i < y.size(); ++i) {
    tot.add((y[i] - ybar) * (y[i] - ybar));
    res.add(residuals[i] * residuals[i]);
  }
  if (tot.value() == 0.0) return res.value() == 0.0 ? 1.0 : 0.0;
  return 1.0 - res.value() / tot.value();
}

}  // namespace

LineFit fit_through_origin(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit needs equal, nonempty samples");
  CompensatedSum sxy, sxx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy.add(x[i] * y[i]);
    sxx.add(x[i] * x[i]);
  }
  if (sxx.value() == 0.0) throw std::invalid_argument("fit through origin needs a nonzero abscissa");
  LineFit f;
  f.slope = sxy.value() / sxx.value();
  for (std::size_t i = 0; i < x.size(); ++i) f.residuals.push_back(y[i] - f.slope * x[i]);
  f.r_squared = centered_r2(y, f.residuals);
  return f;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs at least two points");
  const double n = static_cast<double>(x.size());
  const double xbar = compensated_sum(x) / n;
  const double ybar = compensated_sum(y) / n;
  CompensatedSum sxy, sxx;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy.add((x[i] - xbar) * (y[i] - ybar));
    sxx.add((x[i] - xbar) * (x[i] - xbar));
  }
  if (sxx.value() == 0.0) throw std::invalid_argument("line fit needs distinct abscissae");
  LineFit f;
  f.slope = sxy.value() / sxx.value();
  f.intercept = ybar - f.slope * xbar;
  for (std::size_t i = 0; i < x.size(); ++i) f.residuals.push_back(y[i] - f.intercept - f.slope * x[i]);
  f.r_squared = centered_r2(y, f.residuals);
  return f;
}

}  // namespace nbw
