#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rarelaw/markov_grid.hpp"
#include "rarelaw/rng.hpp"

using namespace rarelaw;

namespace {

GridKernel doubling_kernel(double eps, int m) {
  const MapSpec map = MapSpec::doubling(2);
  return discretize(map, NoiseSpec::uniform(eps, BoundaryPolicy::Wrap, map.domain), m);
}

GridKernel quadratic_kernel(double eps, int m) {
  const MapSpec map = MapSpec::quadratic(2.0);
  return discretize(map, NoiseSpec::uniform(eps, BoundaryPolicy::Reflect, map.domain), m);
}

}  // namespace

TEST_CASE("discretize rows are closed-form overlaps") {
  const GridKernel K = doubling_kernel(0.25, 16);
  // arc of length 1/2 covers exactly 8 aligned cells, each with mass 1/8
  for (int i = 0; i < 16; ++i) {
    int hits = 0;
    for (int j = 0; j < 16; ++j) {
      const double v = K.P(i, j);
      const bool zero = std::fabs(v) < 1e-15;
      const bool eighth = std::fabs(v - 0.125) < 1e-15;
      CHECK((zero || eighth));
      hits += eighth ? 1 : 0;
    }
    CHECK(hits == 8);
    CHECK(K.P.row(i).sum() == doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("full-support circle noise gives the uniform kernel") {
  const GridKernel K = doubling_kernel(0.5, 64);
  for (int i = 0; i < K.m; ++i)
    for (int j = 0; j < K.m; ++j) CHECK(K.P(i, j) == doctest::Approx(1.0 / 64).epsilon(1e-12));
}

TEST_CASE("row sums and support width for assorted kernels") {
  const MapSpec lorenz = MapSpec::lorenz(0.75);
  const GridKernel kernels[] = {
      doubling_kernel(0.25, 512), doubling_kernel(0.1, 137), quadratic_kernel(0.1, 512),
      discretize(lorenz, NoiseSpec::uniform(0.1, BoundaryPolicy::Reflect, lorenz.domain), 256)};
  for (const auto& K : kernels) {
    // within the domain the support always contains the rho0-ball around
    // f(x); reflection folds the overhang back, so the reflecting worst
    // case (f(x) at the boundary) is rho0 instead of 2 rho0
    const double rho0 = K.noise.epsilon;
    const double min_ball =
        K.map.domain.kind == SpaceKind::Circle ? 2.0 * rho0 : rho0;
    for (int i = 0; i < K.m; ++i) {
      CHECK(std::fabs(K.P.row(i).sum() - 1.0) < 1e-12);
      CHECK(K.P.row(i).minCoeff() >= 0.0);
      int support = 0;
      for (int j = 0; j < K.m; ++j) support += K.P(i, j) > 0.0 ? 1 : 0;
      CHECK(support * K.cell_len >= min_ball - 2.0 * K.cell_len);
    }
  }
}

TEST_CASE("discretize rejects tiny grids") {
  const MapSpec map = MapSpec::doubling(2);
  const NoiseSpec n = NoiseSpec::uniform(0.25, BoundaryPolicy::Wrap, map.domain);
  CHECK_THROWS_AS(discretize(map, n, 15), std::invalid_argument);
}

TEST_CASE("doubling stationary density is uniform for any epsilon") {
  for (double eps : {0.25, 0.1}) {
    const GridKernel K = doubling_kernel(eps, 512);
    const StationaryDensity sd = stationary(K);
    for (int i = 0; i < K.m; ++i) CHECK(std::fabs(sd.h(i) - 1.0) < 1e-6);
    // left fixed vector to 1e-10
    const Eigen::VectorXd err = K.P.transpose() * sd.pi - sd.pi;
    CHECK(err.lpNorm<1>() < 1e-10);
    CHECK(sd.pi.minCoeff() >= 0.0);
    CHECK(sd.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("full-support kernel reaches stationarity in one step") {
  const GridKernel K = doubling_kernel(0.5, 64);
  const StationaryDensity sd = stationary(K);
  CHECK(sd.iterations == 1);
}

TEST_CASE("quadratic stationary density approaches the arcsine law") {
  // unperturbed analytic density of a = 2 is 1/(pi sqrt(4 - x^2)); the
  // perturbed grid density converges to it as the grid resolves the noise
  const auto l1_distance = [](int m) {
    const GridKernel K = quadratic_kernel(0.01, m);
    const StationaryDensity sd = stationary(K);
    double l1 = 0.0;
    for (int i = 0; i < K.m; ++i) {
      const double x = K.cell_mid(i);
      l1 += std::fabs(sd.h(i) - 1.0 / (M_PI * std::sqrt(4.0 - x * x))) * K.cell_len;
    }
    return l1;
  };
  const double at_1024 = l1_distance(1024);
  const double at_2048 = l1_distance(2048);
  CHECK(at_1024 < 0.20);
  CHECK(at_2048 < 0.12);
  CHECK(at_2048 < at_1024);
}

TEST_CASE("stationary density is strictly positive for certified kernels") {
  for (const auto& K : {doubling_kernel(0.25, 512), quadratic_kernel(0.1, 512)}) {
    const StationaryDensity sd = stationary(K);
    CHECK(sd.h_floor > 0.0);
  }
}

TEST_CASE("covering floor bounds the stationary floor within a factor of 4") {
  // grid analog of the strict-positivity argument: after 2 k* steps every
  // state reaches every cell with density at least eta, and h >= eta
  for (const auto& K : {doubling_kernel(0.25, 512), quadratic_kernel(0.1, 512)}) {
    const StationaryDensity sd = stationary(K);
    const auto k_star = aperiodicity_index(K, 64);
    REQUIRE(k_star.has_value());
    RowMatrix T = K.P;
    for (int i = 1; i < 2 * *k_star; ++i) T = T * K.P;
    const double eta = T.minCoeff() * K.m;  // normalized-density floor
    const double h_norm = sd.h_floor * K.map.domain.length();
    CHECK(eta > 0.0);
    CHECK(h_norm >= eta - 1e-12);
    CHECK(h_norm <= 4.0 * eta);
  }
}

TEST_CASE("tv profile is monotone and vanishes for the uniform kernel") {
  const GridKernel F = doubling_kernel(0.5, 64);
  const StationaryDensity sf = stationary(F);
  const auto df = tv_profile(F, sf.pi, 5);
  CHECK(df[0] == doctest::Approx(0.0).epsilon(1e-12));

  const GridKernel K = quadratic_kernel(0.1, 256);
  const StationaryDensity sd = stationary(K);
  const auto d = tv_profile(K, sd.pi, 30);
  for (std::size_t i = 1; i < d.size(); ++i) CHECK(d[i] <= d[i - 1] + 1e-12);
  for (double v : d) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("geometric fit recovers synthetic decay exactly") {
  std::vector<double> d;
  for (int n = 1; n <= 20; ++n) d.push_back(std::pow(0.8, n));
  const auto fit = fit_geometric_rate(d);
  CHECK(fit.lambda == doctest::Approx(1.25).epsilon(1e-10));
  CHECK(fit.C == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("geometric fit flags non-geometric input") {
  std::vector<double> d;
  for (int n = 1; n <= 40; ++n) d.push_back(1.0 / n);
  const auto fit = fit_geometric_rate(d);
  CHECK(fit.r_squared < 0.99);
}

TEST_CASE("geometric fit marks an already-converged profile") {
  std::vector<double> d(10, 1e-16);
  const auto fit = fit_geometric_rate(d);
  CHECK(fit.already_converged);
  std::vector<double> three = {0.5, 0.25, 0.125};
  CHECK_THROWS_AS(fit_geometric_rate(three), std::invalid_argument);
}

TEST_CASE("tv fit passes on the decaying kernels") {
  {
    // the doubling kernel mixes so fast that d(n) reaches the rounding
    // noise of the m-term sums by n = 6; fit the live range only
    const GridKernel K = doubling_kernel(0.25, 501);
    const StationaryDensity sd = stationary(K);
    const auto fit = fit_geometric_rate(tv_profile(K, sd.pi, 6));
    CHECK(fit.r_squared >= 0.99);
    CHECK(fit.lambda > 1.0);
  }
  {
    const GridKernel K = quadratic_kernel(0.1, 512);
    const StationaryDensity sd = stationary(K);
    const auto fit = fit_geometric_rate(tv_profile(K, sd.pi, 40));
    CHECK(fit.r_squared >= 0.99);
    CHECK(fit.lambda > 1.0);
  }
}

TEST_CASE("doeblin margin of the doubling kernel") {
  const GridKernel K = doubling_kernel(0.25, 512);
  const double margin = doeblin_margin(K, 0.75, 1);
  CHECK(margin >= 0.48);
  CHECK(margin <= 0.50);
  // constructive value q_lower * (1 - gamma) with slack 2 q_upper / m
  const auto rep = verify_perturbation_conditions(K.map, K.noise, 512);
  const double constructive = doeblin_constructive_delta(rep, K.map.domain, 0.75);
  CHECK(constructive == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(margin >= constructive - 2.0 * rep.upper_q / K.m);
}

TEST_CASE("doeblin margin of the uniform kernel equals the cell fraction") {
  const GridKernel K = doubling_kernel(0.5, 64);
  for (double gamma : {0.3, 0.5, 0.75}) {
    const double expect = std::ceil(gamma * K.m) / K.m;
    CHECK(doeblin_margin(K, gamma, 1) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(doeblin_margin(K, gamma, 1) >= gamma - 1e-12);
  }
}

TEST_CASE("doeblin margin grows with gamma and with k") {
  const GridKernel K = doubling_kernel(0.25, 256);
  double prev = 0.0;
  for (double gamma : {0.55, 0.65, 0.75, 0.85}) {
    const double v = doeblin_margin(K, gamma, 1);
    CHECK(v >= prev - 1e-12);
    prev = v;
  }
  CHECK(doeblin_margin(K, 0.75, 2) >= doeblin_margin(K, 0.75, 1) - 1e-12);
  CHECK_THROWS_AS(doeblin_margin(K, 1.5, 1), std::invalid_argument);
}

TEST_CASE("constructive delta requires a large enough gamma") {
  const auto rep = verify_perturbation_conditions(MapSpec::doubling(2),
                                                  NoiseSpec::uniform(0.25, BoundaryPolicy::Wrap,
                                                                     PhaseSpace::circle()),
                                                  512);
  CHECK_THROWS_AS(doeblin_constructive_delta(rep, PhaseSpace::circle(), 0.5),
                  std::invalid_argument);
}

TEST_CASE("harris minorization floor") {
  const GridKernel K = doubling_kernel(0.25, 512);
  const int a = K.cell_of(0.3);
  const double fx = apply_map(K.map, K.cell_mid(a));
  std::vector<int> A = {a}, B, far;
  for (int j = 0; j < K.m; ++j) {
    const double dist = K.map.domain.dist(K.cell_mid(j), fx);
    if (dist < 0.125 / 2) B.push_back(j);
    if (dist > 0.3) far.push_back(j);
  }
  // B inside the rho0/2 ball around f(x): density floor is q_lower
  CHECK(harris_minorization(K, A, B) == doctest::Approx(2.0).epsilon(1e-12));
  // B outside every image support: floor 0
  CHECK(harris_minorization(K, A, far) == 0.0);
  CHECK_THROWS_AS(harris_minorization(K, {}, B), std::invalid_argument);

  const GridKernel F = doubling_kernel(0.5, 64);
  std::vector<int> all(64);
  for (int i = 0; i < 64; ++i) all[static_cast<std::size_t>(i)] = i;
  CHECK(harris_minorization(F, all, all) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("aperiodicity index") {
  CHECK(aperiodicity_index(doubling_kernel(0.5, 64), 8) == 1);
  CHECK(aperiodicity_index(doubling_kernel(0.25, 512), 8) == 2);
  // block-cyclic permutation never becomes primitive
  RowMatrix C = RowMatrix::Zero(4, 4);
  C(0, 1) = C(1, 2) = C(2, 3) = C(3, 0) = 1.0;
  CHECK_FALSE(aperiodicity_index(C, 32).has_value());
}

TEST_CASE("correlation of constants vanishes") {
  const GridKernel K = quadratic_kernel(0.1, 128);
  const StationaryDensity sd = stationary(K);
  Eigen::VectorXd phi(K.m), psi = Eigen::VectorXd::Constant(K.m, 3.0);
  for (int i = 0; i < K.m; ++i) phi(i) = K.cell_mid(i);
  for (int n : {0, 1, 5, 10}) CHECK(correlation(K, sd.pi, phi, psi, n) < 1e-13);
}

TEST_CASE("correlation at n = 0 sees the variance of a centered indicator") {
  const GridKernel K = quadratic_kernel(0.1, 128);
  const StationaryDensity sd = stationary(K);
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(K.m);
  for (int i = 0; i < K.m / 2; ++i) ind(i) = 1.0;
  CHECK(correlation(K, sd.pi, ind, ind, 0) > 0.0);
}

TEST_CASE("correlation norms reject degenerate observables") {
  const GridKernel K = quadratic_kernel(0.1, 128);
  const StationaryDensity sd = stationary(K);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(K.m);
  Eigen::VectorXd ok = Eigen::VectorXd::Ones(K.m);
  CHECK_THROWS_AS(correlation(K, sd.pi, zero, ok, 1), std::invalid_argument);
  CHECK_THROWS_AS(correlation(K, sd.pi, ok, zero, 1), std::invalid_argument);
}

TEST_CASE("total variation dominates the normalized correlation") {
  const GridKernel K = quadratic_kernel(0.1, 256);
  const StationaryDensity sd = stationary(K);
  const auto d = tv_profile(K, sd.pi, 20);
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(K.m), psi = Eigen::VectorXd::Zero(K.m);
  for (int i = 0; i < K.m; ++i) {
    if (K.cell_mid(i) < -1.0) phi(i) = 1.0;
    if (K.cell_mid(i) > 0.5) psi(i) = 1.0;
  }
  const auto cor = correlation_profile(K, sd.pi, phi, psi, 20);
  for (int n = 1; n <= 20; ++n)
    CHECK(cor[static_cast<std::size_t>(n)] <=
          2.0 * d[static_cast<std::size_t>(n) - 1] * (1.0 + 1e-9) + 1e-15);
}

TEST_CASE("taboo survival of the full space and monotonicity") {
  const GridKernel K = doubling_kernel(0.25, 64);
  const StationaryDensity sd = stationary(K);
  std::vector<int> all(64);
  for (int i = 0; i < 64; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto ts = taboo_survival(K, sd.pi, all, 5);
  CHECK(ts.hit_pmf[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (double v : ts.no_entry) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<int> small = {10, 11};
  const auto t2 = taboo_survival(K, sd.pi, small, 100);
  for (std::size_t i = 1; i < t2.no_entry.size(); ++i) {
    CHECK(t2.no_entry[i] <= t2.no_entry[i - 1] + 1e-15);
    CHECK(t2.no_entry[i] >= 0.0);
    CHECK(t2.no_entry[i] <= 1.0);
  }
  CHECK_THROWS_AS(taboo_survival(K, sd.pi, {}, 5), std::invalid_argument);
}

TEST_CASE("taboo survival matches the exponential law at Kac scale") {
  const GridKernel K = doubling_kernel(0.25, 512);
  const StationaryDensity sd = stationary(K);
  std::vector<int> U;
  const int c0 = K.cell_of(0.3);
  for (int i = c0 - 2; i < c0 + 2; ++i) U.push_back(i);  // mass 4/512 = 2^-7
  const auto ts = taboo_survival(K, sd.pi, U, 260);
  CHECK(ts.mass == doctest::Approx(std::pow(2.0, -7)).epsilon(1e-12));
  for (double t : {0.5, 1.0, 2.0}) {
    const int l = static_cast<int>(t / ts.mass);
    CHECK(std::fabs(ts.no_entry[static_cast<std::size_t>(l) - 1] - std::exp(-t)) < 0.02);
  }
}

TEST_CASE("kac identity holds exactly on the grid") {
  const GridKernel K = doubling_kernel(0.25, 512);
  const StationaryDensity sd = stationary(K);
  std::vector<int> U;
  const int c0 = K.cell_of(0.3);
  for (int i = c0 - 2; i < c0 + 2; ++i) U.push_back(i);
  CHECK(expected_return_time(K, sd.pi, U) * (4.0 / 512.0) == doctest::Approx(1.0).epsilon(1e-6));
  // whole space: return time is identically 1 and mass is 1
  std::vector<int> all(K.m);
  for (int i = 0; i < K.m; ++i) all[static_cast<std::size_t>(i)] = i;
  CHECK(expected_return_time(K, sd.pi, all) == 1.0);
}

TEST_CASE("return-conditioned taboo distribution normalizes") {
  const GridKernel K = quadratic_kernel(0.1, 256);
  const StationaryDensity sd = stationary(K);
  std::vector<int> U = {100, 101, 102};
  const auto ts = taboo_survival(K, sd.pi, U, 4000, true);
  double total = 0.0;
  for (double p : ts.hit_pmf) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  double kac = 0.0;
  for (std::size_t l = 0; l < ts.hit_pmf.size(); ++l)
    kac += static_cast<double>(l + 1) * ts.hit_pmf[l];
  CHECK(kac * ts.mass == doctest::Approx(1.0).epsilon(1e-3));  // truncated tail
}

TEST_CASE("gauss kernel converges to the gauss measure density") {
  const MapSpec g = MapSpec::gauss();
  const auto l1 = [&](int m) {
    const GridKernel K = discretize(g, NoiseSpec::uniform(0.02, BoundaryPolicy::Reflect, g.domain), m);
    const StationaryDensity sd = stationary(K);
    double acc = 0.0;
    for (int i = 0; i < K.m; ++i) {
      const double x = K.cell_mid(i);
      acc += std::fabs(sd.h(i) - 1.0 / ((1.0 + x) * std::log(2.0))) * K.cell_len;
    }
    return acc;
  };
  const double coarse = l1(512), fine = l1(1024);
  CHECK(coarse < 0.25);
  CHECK(fine < 0.10);
  CHECK(fine < coarse);
}

TEST_CASE("lorenz kernel is certified and uniformly ergodic") {
  const MapSpec lo = MapSpec::lorenz(0.75);
  const NoiseSpec n = NoiseSpec::uniform(0.1, BoundaryPolicy::Reflect, lo.domain);
  const auto rep = verify_perturbation_conditions(lo, n, 256);
  CHECK(rep.holds);
  CHECK(rep.lower_q == doctest::Approx(5.0));
  const GridKernel K = discretize(lo, n, 256);
  const StationaryDensity sd = stationary(K);
  CHECK(sd.h_floor > 0.0);
  const auto fit = fit_geometric_rate(tv_profile(K, sd.pi, 40));
  CHECK(fit.lambda > 1.0);
  CHECK(fit.r_squared >= 0.99);
}

TEST_CASE("stationary field cdf, inverse and conditional sampling") {
  const GridKernel K = quadratic_kernel(0.1, 256);
  const StationaryDensity sd = stationary(K);
  const StationaryField f = stationary_field(K, sd);
  CHECK(f.cdf(-2.0) == 0.0);
  CHECK(f.cdf(2.0) == 1.0);
  for (double mass : {0.1, 0.33, 0.5, 0.9}) {
    const double x = f.inverse(mass);
    CHECK(f.cdf(x) == doctest::Approx(mass).epsilon(1e-9));
  }
  RandomStream rs(31, 0);
  for (int i = 0; i < 2000; ++i) {
    const double x = f.sample_between(-0.5, -0.3, rs);
    CHECK(x >= -0.5);
    CHECK(x <= -0.3);
  }
  // circle field wraps across the seam
  const GridKernel C = doubling_kernel(0.25, 256);
  const StationaryDensity sc = stationary(C);
  const StationaryField fc = stationary_field(C, sc);
  CHECK(fc.mass_between(-0.1, 0.1) == doctest::Approx(0.2).epsilon(1e-9));
  for (int i = 0; i < 2000; ++i) {
    const double x = fc.sample_between(-0.05, 0.05, rs);
    const bool near_seam = x >= 0.95 || x <= 0.05;
    CHECK(near_seam);
  }
}
