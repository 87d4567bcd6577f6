#pragma once
// Small numeric helpers: normal distribution functions and summary stats.

#include <span>
#include <vector>

namespace saom {

/// Standard normal CDF.
double norm_cdf(double x);

/// Standard normal quantile (inverse CDF), p in (0,1).
double norm_quantile(double p);

double mean(std::span<const double> xs);
/// Sample variance (n-1 denominator); 0 for fewer than two values.
double variance(std::span<const double> xs);
double sd(std::span<const double> xs);
double median(std::vector<double> xs);  // by value: partially sorts a copy

/// Pearson correlation; 0 when either side is constant.
double correlation(std::span<const double> xs, std::span<const double> ys);

}  // namespace saom
