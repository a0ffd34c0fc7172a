#include "rarelaw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace rarelaw {

double kolmogorov_tail(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    if (term < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 8) throw std::invalid_argument("ks_statistic: need at least 8 samples");
  for (double s : samples)
    if (std::isnan(s)) throw std::invalid_argument("ks_statistic: NaN sample");
  std::sort(samples.begin(), samples.end());
  const long n = static_cast<long>(samples.size());
  double d = 0.0;
  for (long i = 0; i < n; ++i) {
    const double f = cdf(samples[i]);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
    d = std::max(d, f - static_cast<double>(i) / n);
  }
  KsResult r;
  r.d = d;
  r.n = n;
  const double sn = std::sqrt(static_cast<double>(n));
  r.sqrt_n_d = sn * d;
  // Stephens' small-sample adjustment for the asymptotic tail
  r.p = kolmogorov_tail((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

double gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // lower series
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - gln);
    return std::clamp(1.0 - p, 0.0, 1.0);
  }
  // continued fraction (modified Lentz)
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::clamp(std::exp(-x + a * std::log(x) - gln) * h, 0.0, 1.0);
}

Chi2Result chi2_gof(const std::vector<long>& counts, const std::vector<double>& expected) {
  if (counts.size() != expected.size())
    throw std::invalid_argument("chi2_gof: counts/expected size mismatch");
  if (counts.empty()) throw std::invalid_argument("chi2_gof: empty input");
  long total = 0;
  for (long c : counts) total += c;
  if (total == 0) throw std::invalid_argument("chi2_gof: all counts zero");

  // merge from the tail until every expected bin mass is >= 5
  std::vector<double> obs, exp;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!exp.empty() && exp.back() < 5.0) {
      exp.back() += expected[i];
      obs.back() += static_cast<double>(counts[i]);
    } else {
      exp.push_back(expected[i]);
      obs.push_back(static_cast<double>(counts[i]));
    }
  }
  while (exp.size() > 1 && exp.back() < 5.0) {
    exp[exp.size() - 2] += exp.back();
    obs[obs.size() - 2] += obs.back();
    exp.pop_back();
    obs.pop_back();
  }

  Chi2Result r;
  r.merged_bins = static_cast<int>(exp.size());
  if (exp.size() < 2) throw std::invalid_argument("chi2_gof: fewer than 2 usable bins");
  double stat = 0.0;
  for (std::size_t i = 0; i < exp.size(); ++i) {
    const double diff = obs[i] - exp[i];
    stat += diff * diff / exp[i];
  }
  r.stat = stat;
  r.dof = static_cast<int>(exp.size()) - 1;
  r.p = gamma_q(0.5 * r.dof, 0.5 * stat);
  return r;
}

LinFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need >= 2 paired points");
  const long n = static_cast<long>(x.size());
  double sx = 0, sy = 0;
  for (long i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (long i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("least_squares: degenerate x values");
  LinFit f;
  f.n = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

WilsonInterval wilson_interval(long successes, long n, double z) {
  if (n <= 0 || successes < 0 || successes > n)
    throw std::invalid_argument("wilson_interval: bad counts");
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double rad = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - rad), std::min(1.0, center + rad)};
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_sorted: p outside [0,1]");
  const long n = static_cast<long>(sorted.size());
  const long k = std::clamp(static_cast<long>(std::ceil(p * n)) - 1, 0L, n - 1);
  return sorted[k];
}

double empirical_cdf(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean: empty");
  double s = 0.0;
  for (double t : v) s += t;
  return s / static_cast<double>(v.size());
}

double variance(const std::vector<double>& v) {
  if (v.size() < 2) throw std::invalid_argument("variance: need >= 2 values");
  const double m = mean(v);
  double s = 0.0;
  for (double t : v) s += (t - m) * (t - m);
  return s / static_cast<double>(v.size() - 1);
}

void parallel_for(long count, int threads, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const long chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (long i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace rarelaw
