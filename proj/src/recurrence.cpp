#include "rarelaw/recurrence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rarelaw/stats.hpp"

namespace rarelaw {

std::vector<double> HittingBatch::normalized_uncensored() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    if (!s.censored) out.push_back(s.normalized_time);
  return out;
}

std::vector<double> HittingBatch::raw_uncensored() const {
  std::vector<double> out;
  out.reserve(samples.size());
  for (const auto& s : samples)
    if (!s.censored) out.push_back(static_cast<double>(s.raw_time));
  return out;
}

HittingBatch draw_hitting_samples(const MapSpec& map, const NoiseSpec& noise,
                                  const ObservableSpec& obs, double radius, double mass,
                                  long count, bool return_start, std::uint64_t seed, int threads,
                                  std::uint64_t stream_base, double cap_factor) {
  if (count < 1) throw std::invalid_argument("draw_hitting_samples: count >= 1");
  if (mass <= 0.0 || radius <= 0.0)
    throw std::invalid_argument("draw_hitting_samples: target ball must have positive mass");
  const long cap = static_cast<long>(cap_factor / mass);

  double lo = obs.zeta - radius, hi = obs.zeta + radius;
  if (obs.space.kind == SpaceKind::Interval) {
    lo = std::max(lo, obs.space.a);
    hi = std::min(hi, obs.space.b);
  }

  HittingBatch batch;
  batch.mass = mass;
  batch.samples.resize(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](long i) {
    RandomStream rs(seed, stream_base + static_cast<std::uint64_t>(i));
    double x = return_start ? obs.field.sample_between(lo, hi, rs) : obs.field.sample(rs);
    HittingSample hs;
    hs.censored = true;
    hs.raw_time = cap;
    for (long j = 1; j <= cap; ++j) {
      x = sample_step(map, noise, x, rs);
      if (obs.space.dist(x, obs.zeta) < radius) {
        hs.raw_time = j;
        hs.censored = false;
        break;
      }
    }
    hs.normalized_time = static_cast<double>(hs.raw_time) * mass;
    batch.samples[static_cast<std::size_t>(i)] = hs;
  });
  for (const auto& s : batch.samples) batch.censored += s.censored ? 1 : 0;
  return batch;
}

KsResult hts_test(const std::vector<double>& normalized_times) {
  if (normalized_times.size() < 500) throw std::invalid_argument("hts_test: need >= 500 samples");
  return ks_statistic(normalized_times,
                      [](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-t); });
}

KacReport kac_check(const std::vector<double>& raw_times, double mass) {
  if (raw_times.size() < 500) throw std::invalid_argument("kac_check: need >= 500 samples");
  KacReport r;
  r.n = static_cast<long>(raw_times.size());
  r.product = mean(raw_times) * mass;
  r.std_err = std::sqrt(variance(raw_times) / static_cast<double>(r.n)) * mass;
  return r;
}

SurvivalIntegral::SurvivalIntegral(std::vector<double> samples) : points_(std::move(samples)) {
  if (points_.empty()) throw std::invalid_argument("SurvivalIntegral: empty sample");
  std::sort(points_.begin(), points_.end());
  const double n = static_cast<double>(points_.size());
  integral_.resize(points_.size());
  double acc = points_[0];  // survival is 1 before the first sample
  integral_[0] = acc;
  for (std::size_t k = 1; k < points_.size(); ++k) {
    acc += (1.0 - static_cast<double>(k) / n) * (points_[k] - points_[k - 1]);
    integral_[k] = acc;
  }
}

double SurvivalIntegral::operator()(double t) const {
  if (t <= 0.0) return 0.0;
  const double n = static_cast<double>(points_.size());
  if (t <= points_.front()) return t;
  const auto it = std::upper_bound(points_.begin(), points_.end(), t);
  const std::size_t k = static_cast<std::size_t>(it - points_.begin());  // samples <= t
  return integral_[k - 1] + (1.0 - static_cast<double>(k) / n) * (t - points_[k - 1]);
}

double hts_from_rts_distance(const std::vector<double>& hitting_normalized,
                             const std::vector<double>& return_normalized) {
  if (hitting_normalized.size() < 8 || return_normalized.empty())
    throw std::invalid_argument("hts_from_rts_distance: not enough samples");
  const SurvivalIntegral recon(return_normalized);
  // the reconstructed d.f. is continuous monotone, so the sup against the
  // empirical hitting d.f. is attained at hitting sample points
  return ks_statistic(hitting_normalized, [&](double t) { return std::min(1.0, recon(t)); }).d;
}

}  // namespace rarelaw
