#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nbw {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs);

struct MeanStats {
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased sample variance
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Two-pass mean/variance with compensated sums; depends only on the values
/// in order-independent fashion up to the compensation error.
MeanStats mean_stats(std::span<const double> xs);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval at z (default 95%).
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<double> residuals;
};

/// Least squares y ≈ slope·x. R² is the centered coefficient of
/// determination 1 - SS_res/Σ(y - ȳ)², the stricter of the two conventions.
LineFit fit_through_origin(std::span<const double> x, std::span<const double> y);

/// Ordinary least squares with intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace nbw
