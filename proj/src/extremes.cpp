#include "rarelaw/extremes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rarelaw/stats.hpp"

namespace rarelaw {

double ObservableSpec::g_of(double t) const {
  switch (g) {
    case GVariant::NegLog:
      return t <= 0.0 ? std::numeric_limits<double>::infinity() : -std::log(t);
    case GVariant::InversePower:
      return t <= 0.0 ? std::numeric_limits<double>::infinity() : std::pow(t, -1.0 / alpha);
    case GVariant::BoundedPower:
      return D - std::pow(std::max(t, 0.0), 1.0 / alpha);
  }
  throw std::invalid_argument("g_of: bad variant");
}

double ObservableSpec::radial_mass(double r) const {
  if (r <= 0.0) return 0.0;
  if (space.kind == SpaceKind::Circle) {
    if (r >= 0.5) return 1.0;
    return field.mass_between(zeta - r, zeta + r);
  }
  return field.mass_between(std::max(space.a, zeta - r), std::min(space.b, zeta + r));
}

double ObservableSpec::max_radius() const {
  if (space.kind == SpaceKind::Circle) return 0.5;
  return std::max(zeta - space.a, space.b - zeta);
}

double ObservableSpec::radius_of_mass(double mass) const {
  if (mass < 0.0 || mass > 1.0) throw std::invalid_argument("radius_of_mass: mass outside [0,1]");
  if (mass == 0.0) return 0.0;
  double lo = 0.0, hi = max_radius();
  if (radial_mass(hi) < mass) return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (radial_mass(mid) < mass)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-18 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

double ObservableSpec::value(double x) const { return g_of(radial_mass(space.dist(x, zeta))); }

ObservableSpec build_observable(double zeta, GVariant g, const GridKernel& K,
                              const StationaryDensity& sd, double alpha, double D) {
  if (!K.map.domain.contains(zeta) && zeta != K.map.domain.b)
    throw std::invalid_argument("build_observable: zeta outside domain");
  if (sd.h_floor <= 0.0)
    throw std::invalid_argument("build_observable: stationary density not strictly positive");
  ObservableSpec obs;
  obs.zeta = zeta;
  obs.g = g;
  obs.alpha = alpha;
  obs.D = D;
  obs.space = K.map.domain;
  obs.field = stationary_field(K, sd);
  return obs;
}

LevelEntry calibrate_levels(const ObservableSpec& obs, long n, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("calibrate_levels: tau must be positive");
  if (n < 10) throw std::invalid_argument("calibrate_levels: n must be >= 10");
  const double mass = tau / static_cast<double>(n);
  if (mass > 1.0) throw std::invalid_argument("calibrate_levels: tau/n exceeds total mass");
  LevelEntry e;
  e.n = n;
  e.tau = tau;
  e.mass = mass;
  e.ball_radius = obs.radius_of_mass(mass);
  e.u_n = obs.g_of(mass);
  return e;
}

LevelEntry calibrate_levels_snapped(const ObservableSpec& obs, const GridKernel& K, long n,
                                    double tau) {
  LevelEntry e = calibrate_levels(obs, n, tau);
  const double cells = e.ball_radius / K.cell_len;
  double snapped = std::max(1.0, std::round(cells)) * K.cell_len;
  e.ball_radius = snapped;
  e.mass = obs.radial_mass(snapped);
  e.u_n = obs.g_of(e.mass);
  e.tau = e.mass * static_cast<double>(n);
  return e;
}

std::vector<int> exceedance_cells(const ObservableSpec& obs, const GridKernel& K,
                                  const LevelEntry& entry) {
  std::vector<int> cells;
  for (int i = 0; i < K.m; ++i)
    if (obs.space.dist(K.cell_mid(i), obs.zeta) < entry.ball_radius) cells.push_back(i);
  return cells;
}

std::vector<EvlEstimate> evl_estimate(const MapSpec& map, const NoiseSpec& noise,
                                      const ObservableSpec& obs,
                                      const std::vector<LevelEntry>& entries, long trials,
                                      std::uint64_t seed, int threads, std::uint64_t stream_base) {
  if (entries.empty()) throw std::invalid_argument("evl_estimate: no level entries");
  if (trials < 100) throw std::invalid_argument("evl_estimate: need at least 100 trials");
  const long n = entries.front().n;
  for (const auto& e : entries)
    if (e.n != n) throw std::invalid_argument("evl_estimate: entries must share n");

  std::vector<double> min_dist(static_cast<std::size_t>(trials));
  parallel_for(trials, threads, [&](long t) {
    RandomStream rs(seed, stream_base + static_cast<std::uint64_t>(t));
    double x = obs.field.sample(rs);
    double md = obs.space.dist(x, obs.zeta);
    for (long j = 1; j < n; ++j) {
      x = sample_step(map, noise, x, rs);
      md = std::min(md, obs.space.dist(x, obs.zeta));
    }
    min_dist[static_cast<std::size_t>(t)] = md;
  });

  std::vector<EvlEstimate> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    EvlEstimate est;
    est.trials = trials;
    long below = 0;
    for (double md : min_dist)
      if (md >= e.ball_radius) ++below;  // M_n <= u_n: never entered the ball
    est.below = below;
    est.p_hat = static_cast<double>(below) / static_cast<double>(trials);
    const WilsonInterval wi = wilson_interval(below, trials);
    est.ci_lo = wi.lo;
    est.ci_hi = wi.hi;
    est.target = std::exp(-e.tau);
    out.push_back(est);
  }
  return out;
}

DPrimeResult dprime_statistic(const MapSpec& map, const NoiseSpec& noise,
                              const ObservableSpec& obs, const LevelEntry& entry, long segments,
                              std::uint64_t seed, int threads, double q_upper, double h_floor,
                              std::uint64_t stream_base) {
  if (segments < 100) throw std::invalid_argument("dprime_statistic: need >= 100 segments");
  const long n = entry.n;
  const long kn = kn_schedule(n);
  const long lags = n / kn;
  const double radius = entry.ball_radius;

  // per-segment weighted pair sums: sum_j count_j / (n - j)
  std::vector<double> seg_value(static_cast<std::size_t>(segments), 0.0);
  std::vector<double> seg_pairs(static_cast<std::size_t>(segments), 0.0);
  parallel_for(segments, threads, [&](long s) {
    RandomStream rs(seed, stream_base + static_cast<std::uint64_t>(s));
    std::vector<long> hits;  // exceedance times within this segment
    double x = obs.field.sample(rs);
    if (obs.space.dist(x, obs.zeta) < radius) hits.push_back(0);
    for (long j = 1; j < n; ++j) {
      x = sample_step(map, noise, x, rs);
      if (obs.space.dist(x, obs.zeta) < radius) hits.push_back(j);
    }
    double value = 0.0;
    double pairs = 0.0;
    for (std::size_t a = 0; a < hits.size(); ++a) {
      for (std::size_t b = a + 1; b < hits.size(); ++b) {
        const long lag = hits[b] - hits[a];
        if (lag > lags) break;
        value += 1.0 / static_cast<double>(n - lag);
        pairs += 1.0;
      }
    }
    seg_value[static_cast<std::size_t>(s)] = value;
    seg_pairs[static_cast<std::size_t>(s)] = pairs;
  });

  DPrimeResult r;
  r.n = n;
  r.k_n = kn;
  r.lags = lags;
  double total = 0.0;
  for (double v : seg_value) total += v;
  for (double c : seg_pairs) r.pair_count += c;
  r.s_hat = static_cast<double>(n) * total / static_cast<double>(segments);

  // block bootstrap over 100 consecutive-segment blocks
  const int blocks = 100;
  std::vector<double> block_sum(blocks, 0.0);
  for (long s = 0; s < segments; ++s)
    block_sum[static_cast<std::size_t>(s % blocks)] += seg_value[static_cast<std::size_t>(s)];
  RandomStream boot(seed, stream_base + stream_ids::kBootstrap);
  const int reps = 200;
  std::vector<double> stats(reps);
  for (int rep = 0; rep < reps; ++rep) {
    double sum = 0.0;
    for (int b = 0; b < blocks; ++b)
      sum += block_sum[boot.next_u64() % blocks];
    stats[static_cast<std::size_t>(rep)] =
        static_cast<double>(n) * sum / static_cast<double>(segments);
  }
  r.std_err = std::sqrt(variance(stats));

  const double n_mu = static_cast<double>(n) * entry.mass;
  r.paper_bound = (q_upper / h_floor) * n_mu * n_mu / static_cast<double>(kn);
  return r;
}

double d2_gap(const GridKernel& K, const Eigen::VectorXd& pi, const std::vector<int>& U_cells,
              int t, int ell) {
  if (t < 1) throw std::invalid_argument("d2_gap: t >= 1");
  if (ell < 0) throw std::invalid_argument("d2_gap: ell >= 0");
  if (ell == 0) return 0.0;
  std::vector<char> in_u(static_cast<std::size_t>(K.m), 0);
  double mass = 0.0;
  for (int c : U_cells) {
    in_u[static_cast<std::size_t>(c)] = 1;
    mass += pi(c);
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(K.m);
  for (int c : U_cells) v(c) = pi(c);
  for (int s = 0; s < t; ++s) v = K.P.transpose() * v;
  for (int i = 0; i < K.m; ++i)
    if (in_u[i]) v(i) = 0.0;
  for (int s = 1; s < ell; ++s) {
    v = K.P.transpose() * v;
    for (int i = 0; i < K.m; ++i)
      if (in_u[i]) v(i) = 0.0;
  }
  const double joint = v.sum();

  const TabooSurvival ts = taboo_survival(K, pi, U_cells, ell);
  return std::fabs(joint - mass * ts.no_entry[static_cast<std::size_t>(ell) - 1]);
}

}  // namespace rarelaw
