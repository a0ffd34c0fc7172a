#pragma once
// Ulam discretization of the one-step transition kernel and the chain
// diagnostics built on it: stationary density, total-variation profile and
// geometric rate fit, Doeblin margin, Harris minorization floor,
// primitivity index, annealed correlations, and taboo (absorbing) kernels
// for exact survival / hitting-time distributions.
//
// Cell i is [a + i*L/m, a + (i+1)*L/m); rows are built by evaluating the
// transition density at the cell midpoint and integrating it in closed form
// over each target cell, so the grid chain is an exact Markov chain and all
// diagnostics are exact for it. Densities are per unit length; cell masses
// and pi are probabilities.

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "rarelaw/noise.hpp"

namespace rarelaw {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct GridKernel {
  MapSpec map;
  NoiseSpec noise;
  int m = 0;
  RowMatrix P;          // row-stochastic
  double cell_len = 0;  // length / m

  double cell_mid(int i) const { return map.domain.a + (i + 0.5) * cell_len; }
  double cell_lo(int i) const { return map.domain.a + i * cell_len; }
  int cell_of(double x) const;
};

GridKernel discretize(const MapSpec& map, const NoiseSpec& noise, int m);

struct StationaryDensity {
  Eigen::VectorXd pi;  // probabilities, sums to 1
  Eigen::VectorXd h;   // densities per unit length, pi * m / length
  double h_floor = 0;  // min h
  int iterations = 0;
  double residual = 0;
};

// power iteration from the uniform start until the L1 change drops below
// tol; throws std::runtime_error (with the last residual) past max_iter
StationaryDensity stationary(const GridKernel& K, double tol = 1e-12, int max_iter = 200000);

// d(n) = max_i 0.5 * sum_j |P^n(i,j) - pi_j| for n = 1..n_max
std::vector<double> tv_profile(const GridKernel& K, const Eigen::VectorXd& pi, int n_max);

struct GeometricFit {
  double C = 0;
  double lambda = 0;
  double r_squared = 0;
  int points_used = 0;
  bool already_converged = false;  // every profile value at or below the floor
};

// least squares of log d(n) = log C - n log lambda over points above the
// floor; requires at least 5 such points unless all are below the floor
GeometricFit fit_geometric_rate(const std::vector<double>& profile, double floor = 1e-14);

// exact worst case over cell unions: min over rows of P^k of the sum of the
// ceil(gamma*m) smallest row entries
double doeblin_margin(const GridKernel& K, double gamma, int k);

// The constructive margin obtained from the kernel bounds: sets of
// normalized measure > gamma receive one-step mass at least
// q_lower_norm * (1 - gamma), provided every rho0-ball has normalized
// measure at least 2(1 - gamma). Throws if that proviso fails.
double doeblin_constructive_delta(const PerturbationReport& rep, const PhaseSpace& space,
                                  double gamma);

// min over i in A, j in B of the one-step density P(i,j)/cell_len
double harris_minorization(const GridKernel& K, const std::vector<int>& A_cells,
                           const std::vector<int>& B_cells);

// smallest k <= k_max with P^k entrywise positive, or nullopt
std::optional<int> aperiodicity_index(const GridKernel& K, int k_max);
std::optional<int> aperiodicity_index(const RowMatrix& P, int k_max);

// normalized annealed correlation
//   |sum_i pi_i phi_i (P^n psi)_i - (pi.phi)(pi.psi)| / (||phi||_L1(pi) ||psi||_inf)
double correlation(const GridKernel& K, const Eigen::VectorXd& pi, const Eigen::VectorXd& phi,
                   const Eigen::VectorXd& psi, int n);

// the same for all n = 0..n_max with one matrix-vector pass per step
std::vector<double> correlation_profile(const GridKernel& K, const Eigen::VectorXd& pi,
                                        const Eigen::VectorXd& phi, const Eigen::VectorXd& psi,
                                        int n_max);

struct TabooSurvival {
  // no_entry[l-1] = P(X_0,...,X_{l-1} all outside U)  (= P(M_l <= u)), l = 1..L
  std::vector<double> no_entry;
  // hit_survival[l] = P(r_U > l), l = 0..L, with r_U the first j >= 1 in U
  std::vector<double> hit_survival;
  // hit_pmf[l-1] = P(r_U = l), l = 1..L
  std::vector<double> hit_pmf;
  double mass = 0;  // pi(U)
};

// exact distributions via the kernel restricted to the complement of U;
// start is pi (hitting) or pi conditioned on U (return_conditioned)
TabooSurvival taboo_survival(const GridKernel& K, const Eigen::VectorXd& pi,
                             const std::vector<int>& U_cells, int L,
                             bool return_conditioned = false);

// exact expected return time to U from the pi-conditioned start (Kac)
double expected_return_time(const GridKernel& K, const Eigen::VectorXd& pi,
                            const std::vector<int>& U_cells);

// Piecewise-linear stationary mass field: CDF at cell edges with within-cell
// uniform interpolation. On the circle the CDF extends periodically, so
// mass_between works across the seam.
struct StationaryField {
  SpaceKind kind = SpaceKind::Circle;
  double a = 0, length = 1, cell_len = 0;
  int m = 0;
  std::vector<double> edge_cdf;  // size m+1, edge_cdf[0] = 0, edge_cdf[m] = 1

  double cdf(double x) const;       // within [a, a+length]
  double cdf_ext(double x) const;   // periodic extension (circle)
  double mass_between(double lo, double hi) const;
  double inverse(double mass) const;  // mass in [0,1] -> position
  double sample(RandomStream& s) const;
  double sample_between(double lo, double hi, RandomStream& s) const;
};

StationaryField stationary_field(const GridKernel& K, const StationaryDensity& sd);

}  // namespace rarelaw
