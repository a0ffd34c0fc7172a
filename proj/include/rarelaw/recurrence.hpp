#pragma once
// Hitting and return times to a small ball, Kac normalization, empirical
// HTS/RTS distributions against 1 - e^{-t}, and the integral relation
// G(t) = int_0^t (1 - Gtilde(s)) ds between them.

#include <cstdint>
#include <vector>

#include "rarelaw/extremes.hpp"
#include "rarelaw/stats.hpp"

namespace rarelaw {

struct HittingSample {
  long raw_time = 0;           // steps, >= 1
  double normalized_time = 0;  // raw_time * mass(U)
  bool censored = false;
};

struct HittingBatch {
  std::vector<HittingSample> samples;
  long censored = 0;
  double mass = 0;
  double censored_fraction() const {
    return samples.empty() ? 0.0 : static_cast<double>(censored) / samples.size();
  }
  std::vector<double> normalized_uncensored() const;
  std::vector<double> raw_uncensored() const;
};

// count samples of the first j >= 1 with dist(X_j, zeta) < radius. Hit kind
// starts from the stationary field, return kind from the field conditioned
// on the ball. Walks longer than cap_factor/mass steps are censored.
HittingBatch draw_hitting_samples(const MapSpec& map, const NoiseSpec& noise,
                                  const ObservableSpec& obs, double radius, double mass,
                                  long count, bool return_start, std::uint64_t seed, int threads,
                                  std::uint64_t stream_base, double cap_factor = 1000.0);

// KS of normalized times against the standard exponential law
KsResult hts_test(const std::vector<double>& normalized_times);

struct KacReport {
  double product = 0;  // mean raw return time * mass
  double std_err = 0;
  long n = 0;
};

KacReport kac_check(const std::vector<double>& raw_times, double mass);

// exact integral of (1 - empirical df) of a sample, as a function of t
class SurvivalIntegral {
 public:
  explicit SurvivalIntegral(std::vector<double> samples);  // sorted internally
  double operator()(double t) const;

 private:
  std::vector<double> points_;
  std::vector<double> integral_;  // value at points_[k]
};

// sup distance between the HTS d.f. reconstructed from return samples via
// the integral relation and the directly estimated hitting d.f.
double hts_from_rts_distance(const std::vector<double>& hitting_normalized,
                             const std::vector<double>& return_normalized);

}  // namespace rarelaw
