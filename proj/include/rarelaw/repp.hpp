#pragma once
// Rare Event Point Process: exceedance times of one long trajectory,
// rescaled by v = 1/mass(U); window counts against Poisson(1) and
// interarrival gaps against Exp(1), plus the exact D3 gap on the grid.

#include <cstdint>
#include <utility>
#include <vector>

#include "rarelaw/extremes.hpp"
#include "rarelaw/stats.hpp"

namespace rarelaw {

struct ExceedanceSeries {
  std::vector<long> times;  // strictly increasing, in [0, horizon)
  double rescale_v = 0;     // steps per unit time, 1/mass
  long horizon = 0;
};

// one stationary trajectory of `horizon` steps; event at j iff
// dist(X_j, zeta) < radius. Requires horizon >= 200 * v.
ExceedanceSeries build_exceedances(const MapSpec& map, const NoiseSpec& noise,
                                   const ObservableSpec& obs, double radius, double mass,
                                   long horizon, std::uint64_t seed,
                                   std::uint64_t stream_id = stream_ids::kRepp);

// counts over consecutive unit windows [w v, (w+1) v), w = 0..windows-1
std::vector<long> window_counts(const ExceedanceSeries& series, long windows);

// interarrival gaps divided by v
std::vector<double> rescaled_gaps(const ExceedanceSeries& series);

struct PoissonReport {
  double dispersion = 0;
  bool dispersion_ok = false;
  Chi2Result chi2;  // counts vs Poisson(1)
  bool chi2_ok = false;
  KsResult ks;  // gaps vs Exp(1)
  bool ks_ok = false;
  long windows = 0;
  long gaps = 0;
  bool pass = false;
};

// dispersion window [0.9, 1.1]; GOF tests at the 1% level
PoissonReport poisson_tests(const std::vector<long>& counts, const std::vector<double>& gaps,
                            double dispersion_lo = 0.9, double dispersion_hi = 1.1,
                            double alpha = 0.01);

// |P(X_0 > u, N(A + t) = 0) - P(X_0 > u) P(N(A) = 0)| computed exactly with
// taboo and free transition blocks; A is a union of step-time intervals
// [a, b) with integer endpoints >= 0, t >= 1.
double d3_gap(const GridKernel& K, const Eigen::VectorXd& pi, const std::vector<int>& U_cells,
              const std::vector<std::pair<long, long>>& A, long t);

}  // namespace rarelaw
