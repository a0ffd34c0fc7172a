#pragma once
// Shared statistics: Kolmogorov-Smirnov and Pearson chi-square tests with
// asymptotic p-values, least-squares line fits, Wilson score intervals,
// empirical quantiles.

#include <functional>
#include <vector>

namespace rarelaw {

struct KsResult {
  double d = 0.0;       // sup |F_n - F|
  double p = 0.0;       // asymptotic Kolmogorov p-value
  long n = 0;
  double sqrt_n_d = 0.0;
};

// samples are copied and sorted internally; cdf must be monotone.
// Throws std::invalid_argument on fewer than 8 samples or NaN input.
KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Kolmogorov asymptotic tail Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)
double kolmogorov_tail(double lambda);

struct Chi2Result {
  double stat = 0.0;
  int dof = 0;
  double p = 0.0;
  int merged_bins = 0;
};

// Pearson goodness of fit of observed counts against expected counts.
// Bins are merged from the tail until every expected count is >= 5.
// Throws std::invalid_argument if all counts are zero or sizes mismatch.
Chi2Result chi2_gof(const std::vector<long>& counts, const std::vector<double>& expected);

// upper regularized incomplete gamma Q(a, x)
double gamma_q(double a, double x);

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  long n = 0;
};

LinFit least_squares(const std::vector<double>& x, const std::vector<double>& y);

struct WilsonInterval {
  double lo = 0.0;
  double hi = 0.0;
  double half_width() const { return 0.5 * (hi - lo); }
};

WilsonInterval wilson_interval(long successes, long n, double z = 1.959963984540054);

// order-statistic quantile of a sorted sample, p in [0,1]
double quantile_sorted(const std::vector<double>& sorted, double p);

// fraction of samples <= x
double empirical_cdf(const std::vector<double>& sorted, double x);

double mean(const std::vector<double>& v);
double variance(const std::vector<double>& v);  // unbiased

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
// handled exactly once; callers keep determinism by writing to disjoint
// per-index slots.
void parallel_for(long count, int threads, const std::function<void(long)>& fn);

}  // namespace rarelaw
