#pragma once

#include <cstddef>
#include <span>

namespace cmrec {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile (inverse CDF). Requires p in (0, 1).
double normal_quantile(double p);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n-1 denominator)
};

MeanSd mean_sd(std::span<const double> samples);

double mean_of(std::span<const double> samples);

}  // namespace cmrec
