#pragma once
// Observable process X_n = phi(f^n x) for phi(x) = g(mass(B_dist(x,zeta)(zeta))),
// level calibration n*mass(U_n) ~ tau, Monte Carlo estimation of
// P(M_n <= u_n), and the D2 / D' dependence diagnostics.
//
// Exceedances {phi > u} of a calibrated level are exactly entries into the
// open ball of the calibrated radius around zeta, so the hot loops track
// distances instead of re-evaluating phi.

#include <cstdint>
#include <vector>

#include "rarelaw/markov_grid.hpp"

namespace rarelaw {

enum class GVariant { NegLog, InversePower, BoundedPower };

struct ObservableSpec {
  double zeta = 0.0;
  GVariant g = GVariant::NegLog;
  double alpha = 1.0;  // InversePower / BoundedPower exponent
  double D = 1.0;      // BoundedPower cap (finite upper endpoint)
  PhaseSpace space;
  StationaryField field;

  double g_of(double t) const;  // +inf at t = 0 for NegLog / InversePower
  double radial_mass(double r) const;
  double radius_of_mass(double mass) const;  // bisection on the radial mass
  double max_radius() const;
  double value(double x) const;  // phi(x)
};

ObservableSpec build_observable(double zeta, GVariant g, const GridKernel& K,
                                const StationaryDensity& sd, double alpha = 1.0, double D = 1.0);

struct LevelEntry {
  long n = 0;
  double tau = 0;
  double u_n = 0;
  double ball_radius = 0;
  double mass = 0;  // measured mass of U_n (= tau/n when interpolated)
};

LevelEntry calibrate_levels(const ObservableSpec& obs, long n, double tau);

// radius snapped to a whole number of cells so that U_n is exactly a cell
// union; tau is recomputed from the snapped mass (used against grid oracles)
LevelEntry calibrate_levels_snapped(const ObservableSpec& obs, const GridKernel& K, long n,
                                    double tau);

// cells whose midpoint lies in the open ball of the entry
std::vector<int> exceedance_cells(const ObservableSpec& obs, const GridKernel& K,
                                  const LevelEntry& entry);

struct EvlEstimate {
  double p_hat = 0;
  double ci_lo = 0, ci_hi = 0;
  long trials = 0;
  long below = 0;  // trials with M_n <= u_n
  double target = 0;
};

// All entries must share the same n; one trajectory per trial serves every
// level. Trial t uses stream (seed, stream_base + t); initial points are
// drawn from the stationary field.
std::vector<EvlEstimate> evl_estimate(const MapSpec& map, const NoiseSpec& noise,
                                      const ObservableSpec& obs,
                                      const std::vector<LevelEntry>& entries, long trials,
                                      std::uint64_t seed, int threads,
                                      std::uint64_t stream_base = stream_ids::kEvlTrials);

struct DPrimeResult {
  double s_hat = 0;
  double std_err = 0;      // block bootstrap, 100 blocks
  double paper_bound = 0;  // (q_upper/h_floor) (n mass)^2 / k_n
  long n = 0;
  long k_n = 0;
  long lags = 0;  // floor(n / k_n)
  double pair_count = 0;
};

// S_hat(n) = n * sum_{j=1..floor(n/k_n)} Phat(X_0 > u_n, X_j > u_n) with
// k_n = ceil(sqrt(n)), estimated from `segments` stationary segments of
// length n (pairs within a segment), bootstrap SE over 100 segment blocks.
DPrimeResult dprime_statistic(const MapSpec& map, const NoiseSpec& noise,
                              const ObservableSpec& obs, const LevelEntry& entry, long segments,
                              std::uint64_t seed, int threads, double q_upper, double h_floor,
                              std::uint64_t stream_base = stream_ids::kDPrime);

// |P(X_0 > u, window of length ell starting at t stays <= u)
//   - P(X_0 > u) P(M_ell <= u)|, exact on the grid
double d2_gap(const GridKernel& K, const Eigen::VectorXd& pi, const std::vector<int>& U_cells,
              int t, int ell);

inline long kn_schedule(long n) {
  long k = 1;
  while (k * k < n) ++k;
  return k;  // ceil(sqrt(n))
}

}  // namespace rarelaw
