#include "rarelaw/repp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rarelaw {

ExceedanceSeries build_exceedances(const MapSpec& map, const NoiseSpec& noise,
                                   const ObservableSpec& obs, double radius, double mass,
                                   long horizon, std::uint64_t seed, std::uint64_t stream_id) {
  if (mass <= 0.0) throw std::invalid_argument("build_exceedances: mass must be positive");
  const double v = 1.0 / mass;
  if (static_cast<double>(horizon) < 200.0 * v)
    throw std::invalid_argument("build_exceedances: horizon shorter than 200 rescaled units");
  ExceedanceSeries s;
  s.rescale_v = v;
  s.horizon = horizon;
  RandomStream rs(seed, stream_id);
  double x = obs.field.sample(rs);
  for (long j = 0; j < horizon; ++j) {
    if (j > 0) x = sample_step(map, noise, x, rs);
    if (obs.space.dist(x, obs.zeta) < radius) s.times.push_back(j);
  }
  return s;
}

std::vector<long> window_counts(const ExceedanceSeries& series, long windows) {
  if (windows < 1) throw std::invalid_argument("window_counts: windows >= 1");
  if (static_cast<double>(windows) * series.rescale_v > static_cast<double>(series.horizon))
    throw std::invalid_argument("window_counts: horizon too short for requested windows");
  std::vector<long> counts(static_cast<std::size_t>(windows), 0);
  for (long t : series.times) {
    const auto w = static_cast<long>(static_cast<double>(t) / series.rescale_v);
    if (w >= 0 && w < windows) ++counts[static_cast<std::size_t>(w)];
  }
  return counts;
}

std::vector<double> rescaled_gaps(const ExceedanceSeries& series) {
  std::vector<double> gaps;
  if (series.times.size() < 2) return gaps;
  gaps.reserve(series.times.size() - 1);
  for (std::size_t i = 1; i < series.times.size(); ++i)
    gaps.push_back(static_cast<double>(series.times[i] - series.times[i - 1]) / series.rescale_v);
  return gaps;
}

PoissonReport poisson_tests(const std::vector<long>& counts, const std::vector<double>& gaps,
                            double dispersion_lo, double dispersion_hi, double alpha) {
  if (counts.size() < 200) throw std::invalid_argument("poisson_tests: need >= 200 windows");
  if (gaps.size() < 500) throw std::invalid_argument("poisson_tests: need >= 500 gaps");
  PoissonReport r;
  r.windows = static_cast<long>(counts.size());
  r.gaps = static_cast<long>(gaps.size());

  std::vector<double> as_double(counts.begin(), counts.end());
  const double m = mean(as_double);
  if (m <= 0.0) throw std::invalid_argument("poisson_tests: no events in any window");
  r.dispersion = variance(as_double) / m;
  r.dispersion_ok = r.dispersion >= dispersion_lo && r.dispersion <= dispersion_hi;

  // histogram of counts against Poisson(1) with a merged tail
  const long max_count = *std::max_element(counts.begin(), counts.end());
  const int bins = static_cast<int>(std::max(6L, max_count + 2));
  std::vector<long> hist(static_cast<std::size_t>(bins), 0);
  for (long c : counts) ++hist[static_cast<std::size_t>(std::min<long>(c, bins - 1))];
  std::vector<double> expected(static_cast<std::size_t>(bins), 0.0);
  double pmf = std::exp(-1.0);
  double tail = 1.0;
  for (int k = 0; k < bins - 1; ++k) {
    expected[static_cast<std::size_t>(k)] = pmf * static_cast<double>(counts.size());
    tail -= pmf;
    pmf /= static_cast<double>(k + 1);
  }
  expected[static_cast<std::size_t>(bins) - 1] = std::max(0.0, tail) * static_cast<double>(counts.size());
  r.chi2 = chi2_gof(hist, expected);
  r.chi2_ok = r.chi2.p > alpha;

  r.ks = ks_statistic(gaps, [](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-t); });
  r.ks_ok = r.ks.p > alpha;

  r.pass = r.dispersion_ok && r.chi2_ok && r.ks_ok;
  return r;
}

double d3_gap(const GridKernel& K, const Eigen::VectorXd& pi, const std::vector<int>& U_cells,
              const std::vector<std::pair<long, long>>& A, long t) {
  if (t < 1) throw std::invalid_argument("d3_gap: t >= 1");
  if (A.empty()) return 0.0;
  std::set<long> base_times;
  for (const auto& [a, b] : A) {
    if (a < 0 || b <= a) throw std::invalid_argument("d3_gap: intervals must be [a,b) with 0 <= a < b");
    for (long s = a; s < b; ++s) base_times.insert(s);
  }
  std::vector<char> in_u(static_cast<std::size_t>(K.m), 0);
  double mass = 0.0;
  for (int c : U_cells) {
    in_u[static_cast<std::size_t>(c)] = 1;
    mass += pi(c);
  }

  const auto walk = [&](Eigen::VectorXd v, const std::set<long>& times) {
    long prev = 0;
    for (long s : times) {
      for (long step = prev; step < s; ++step) v = K.P.transpose() * v;
      for (int i = 0; i < K.m; ++i)
        if (in_u[i]) v(i) = 0.0;
      prev = s;
    }
    return v.sum();
  };

  std::set<long> shifted;
  for (long s : base_times) shifted.insert(s + t);
  Eigen::VectorXd v0 = Eigen::VectorXd::Zero(K.m);
  for (int c : U_cells) v0(c) = pi(c);
  const double joint = walk(v0, shifted);
  const double avoid = walk(pi, base_times);
  return std::fabs(joint - mass * avoid);
}

}  // namespace rarelaw
