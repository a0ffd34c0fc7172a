#include "rarelaw/markov_grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rarelaw/stats.hpp"

namespace rarelaw {

int GridKernel::cell_of(double x) const {
  auto c = static_cast<long>((x - map.domain.a) / cell_len);
  if (c < 0) c = 0;
  if (c >= m) c = m - 1;
  return static_cast<int>(c);
}

GridKernel discretize(const MapSpec& map, const NoiseSpec& noise, int m) {
  if (m < 16) throw std::invalid_argument("discretize: need m >= 16");
  GridKernel K;
  K.map = map;
  K.noise = noise;
  K.m = m;
  K.cell_len = map.domain.length() / m;
  K.P = RowMatrix::Zero(m, m);

  const double a = map.domain.a;
  for (int i = 0; i < m; ++i) {
    const double xi = K.cell_mid(i);
    if (noise.epsilon <= 0.0) {
      K.P(i, K.cell_of(apply_map(map, xi))) = 1.0;
      continue;
    }
    const double w = 1.0 / (2.0 * noise.epsilon);
    for (const auto& piece : support_pieces(map, noise, xi)) {
      int j0 = static_cast<int>(std::floor((piece.lo - a) / K.cell_len));
      int j1 = static_cast<int>(std::floor((piece.hi - a) / K.cell_len));
      j0 = std::clamp(j0, 0, m - 1);
      j1 = std::clamp(j1, 0, m - 1);
      for (int j = j0; j <= j1; ++j) {
        const double lo = std::max(piece.lo, K.cell_lo(j));
        const double hi = std::min(piece.hi, K.cell_lo(j) + K.cell_len);
        if (hi > lo) K.P(i, j) += (hi - lo) * w;
      }
    }
  }
  return K;
}

StationaryDensity stationary(const GridKernel& K, double tol, int max_iter) {
  if (tol <= 0.0) throw std::invalid_argument("stationary: tol must be positive");
  const int m = K.m;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(m, 1.0 / m);
  Eigen::VectorXd next(m);
  double resid = 0.0;
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    next.noalias() = K.P.transpose() * pi;
    next /= next.sum();
    resid = (next - pi).lpNorm<1>();
    pi.swap(next);
    if (resid < tol) break;
  }
  if (resid >= tol)
    throw std::runtime_error("stationary: no convergence after " + std::to_string(max_iter) +
                             " iterations, last L1 residual " + std::to_string(resid));
  StationaryDensity sd;
  sd.pi = pi;
  sd.h = pi * (static_cast<double>(m) / K.map.domain.length());
  sd.h_floor = sd.h.minCoeff();
  sd.iterations = it;
  sd.residual = resid;
  return sd;
}

std::vector<double> tv_profile(const GridKernel& K, const Eigen::VectorXd& pi, int n_max) {
  if (n_max < 2) throw std::invalid_argument("tv_profile: need n_max >= 2");
  std::vector<double> d;
  d.reserve(n_max);
  RowMatrix A = K.P;
  for (int n = 1; n <= n_max; ++n) {
    if (n > 1) A = A * K.P;
    double worst = 0.0;
    for (int i = 0; i < K.m; ++i) {
      double s = 0.0;
      for (int j = 0; j < K.m; ++j) s += std::fabs(A(i, j) - pi(j));
      worst = std::max(worst, 0.5 * s);
    }
    d.push_back(worst);
  }
  return d;
}

GeometricFit fit_geometric_rate(const std::vector<double>& profile, double floor) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] > floor) {
      xs.push_back(static_cast<double>(i + 1));
      ys.push_back(std::log(profile[i]));
    }
  }
  GeometricFit fit;
  if (xs.empty()) {
    fit.already_converged = true;
    return fit;
  }
  if (xs.size() < 5)
    throw std::invalid_argument("fit_geometric_rate: need at least 5 points above the floor");
  const LinFit lf = least_squares(xs, ys);
  fit.C = std::exp(lf.intercept);
  fit.lambda = std::exp(-lf.slope);
  fit.r_squared = lf.r_squared;
  fit.points_used = static_cast<int>(xs.size());
  return fit;
}

double doeblin_margin(const GridKernel& K, double gamma, int k) {
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("doeblin_margin: gamma in (0,1)");
  if (k < 1) throw std::invalid_argument("doeblin_margin: k >= 1");
  RowMatrix T = K.P;
  for (int i = 1; i < k; ++i) T = T * K.P;
  const int take = static_cast<int>(std::ceil(gamma * K.m));
  double delta = std::numeric_limits<double>::infinity();
  std::vector<double> row(K.m);
  for (int i = 0; i < K.m; ++i) {
    for (int j = 0; j < K.m; ++j) row[j] = T(i, j);
    std::nth_element(row.begin(), row.begin() + take - 1, row.end());
    const double s = std::accumulate(row.begin(), row.begin() + take, 0.0);
    delta = std::min(delta, s);
  }
  return delta;
}

double doeblin_constructive_delta(const PerturbationReport& rep, const PhaseSpace& space,
                                  double gamma) {
  if (!rep.holds) throw std::invalid_argument("doeblin_constructive_delta: kernel not certified");
  const double len = space.length();
  const double min_ball =
      space.kind == SpaceKind::Circle ? std::min(2.0 * rep.rho0 / len, 1.0) : rep.rho0 / len;
  const double needed = 2.0 * (1.0 - gamma);
  if (needed > min_ball + 1e-12)
    throw std::invalid_argument(
        "doeblin_constructive_delta: gamma too small for the covering radius");
  return rep.lower_q * len * (1.0 - gamma);
}

double harris_minorization(const GridKernel& K, const std::vector<int>& A_cells,
                           const std::vector<int>& B_cells) {
  if (A_cells.empty() || B_cells.empty())
    throw std::invalid_argument("harris_minorization: empty cell set");
  double xi = std::numeric_limits<double>::infinity();
  for (int i : A_cells)
    for (int j : B_cells) xi = std::min(xi, K.P(i, j) / K.cell_len);
  return xi;
}

namespace {

// boolean matrix as bitset rows
struct BoolMatrix {
  int m = 0;
  int words = 0;
  std::vector<std::uint64_t> bits;

  explicit BoolMatrix(int m_) : m(m_), words((m_ + 63) / 64), bits(static_cast<std::size_t>(m_) * words, 0) {}
  void set(int i, int j) { bits[static_cast<std::size_t>(i) * words + j / 64] |= 1ULL << (j % 64); }
  bool all_set() const {
    for (int i = 0; i < m; ++i) {
      const std::uint64_t* row = &bits[static_cast<std::size_t>(i) * words];
      for (int w = 0; w < words; ++w) {
        std::uint64_t expect = ~0ULL;
        if (w == words - 1 && m % 64 != 0) expect = (1ULL << (m % 64)) - 1;
        if (row[w] != expect) return false;
      }
    }
    return true;
  }
};

BoolMatrix bool_product(const BoolMatrix& A, const BoolMatrix& B) {
  BoolMatrix C(A.m);
  for (int i = 0; i < A.m; ++i) {
    std::uint64_t* out = &C.bits[static_cast<std::size_t>(i) * C.words];
    for (int j = 0; j < A.m; ++j) {
      if (A.bits[static_cast<std::size_t>(i) * A.words + j / 64] & (1ULL << (j % 64))) {
        const std::uint64_t* row = &B.bits[static_cast<std::size_t>(j) * B.words];
        for (int w = 0; w < B.words; ++w) out[w] |= row[w];
      }
    }
  }
  return C;
}

}  // namespace

std::optional<int> aperiodicity_index(const RowMatrix& P, int k_max) {
  if (k_max < 1) throw std::invalid_argument("aperiodicity_index: k_max >= 1");
  const int m = static_cast<int>(P.rows());
  BoolMatrix S(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (P(i, j) > 0.0) S.set(i, j);
  BoolMatrix power = S;
  for (int k = 1; k <= k_max; ++k) {
    if (k > 1) power = bool_product(power, S);
    if (power.all_set()) return k;
  }
  return std::nullopt;
}

std::optional<int> aperiodicity_index(const GridKernel& K, int k_max) {
  return aperiodicity_index(K.P, k_max);
}

double correlation(const GridKernel& K, const Eigen::VectorXd& pi, const Eigen::VectorXd& phi,
                   const Eigen::VectorXd& psi, int n) {
  if (n < 0) throw std::invalid_argument("correlation: n >= 0");
  const auto prof = correlation_profile(K, pi, phi, psi, n);
  return prof.back();
}

std::vector<double> correlation_profile(const GridKernel& K, const Eigen::VectorXd& pi,
                                        const Eigen::VectorXd& phi, const Eigen::VectorXd& psi,
                                        int n_max) {
  const double phi_l1 = pi.cwiseProduct(phi.cwiseAbs()).sum();
  const double psi_inf = psi.cwiseAbs().maxCoeff();
  if (phi_l1 <= 0.0) throw std::invalid_argument("correlation: phi is pi-a.e. zero");
  if (psi_inf <= 0.0) throw std::invalid_argument("correlation: psi is identically zero");
  const double mean_phi = pi.dot(phi);
  const double mean_psi = pi.dot(psi);
  const double norm = phi_l1 * psi_inf;
  std::vector<double> out;
  out.reserve(n_max + 1);
  Eigen::VectorXd w = psi;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) w = K.P * w;
    const double cov = pi.cwiseProduct(phi).dot(w) - mean_phi * mean_psi;
    out.push_back(std::fabs(cov) / norm);
  }
  return out;
}

TabooSurvival taboo_survival(const GridKernel& K, const Eigen::VectorXd& pi,
                             const std::vector<int>& U_cells, int L, bool return_conditioned) {
  if (U_cells.empty()) throw std::invalid_argument("taboo_survival: U must be non-empty");
  if (L < 1) throw std::invalid_argument("taboo_survival: L >= 1");
  std::vector<char> in_u(static_cast<std::size_t>(K.m), 0);
  for (int c : U_cells) {
    if (c < 0 || c >= K.m) throw std::invalid_argument("taboo_survival: cell out of range");
    in_u[static_cast<std::size_t>(c)] = 1;
  }
  TabooSurvival ts;
  for (int i = 0; i < K.m; ++i)
    if (in_u[i]) ts.mass += pi(i);

  // block-maximum survival: start from pi restricted to the complement
  Eigen::VectorXd v = pi;
  for (int i = 0; i < K.m; ++i)
    if (in_u[i]) v(i) = 0.0;
  ts.no_entry.reserve(L);
  ts.no_entry.push_back(v.sum());
  for (int l = 2; l <= L; ++l) {
    v = K.P.transpose() * v;
    for (int i = 0; i < K.m; ++i)
      if (in_u[i]) v(i) = 0.0;
    ts.no_entry.push_back(v.sum());
  }

  // hitting/return time: r >= 1, absorb on entry
  Eigen::VectorXd w = pi;
  if (return_conditioned) {
    for (int i = 0; i < K.m; ++i)
      if (!in_u[i]) w(i) = 0.0;
    if (ts.mass <= 0.0) throw std::invalid_argument("taboo_survival: U has zero mass");
    w /= ts.mass;
  }
  ts.hit_survival.reserve(L + 1);
  ts.hit_survival.push_back(w.sum());
  ts.hit_pmf.reserve(L);
  for (int l = 1; l <= L; ++l) {
    w = K.P.transpose() * w;
    double hit = 0.0;
    for (int i = 0; i < K.m; ++i)
      if (in_u[i]) {
        hit += w(i);
        w(i) = 0.0;
      }
    ts.hit_pmf.push_back(hit);
    ts.hit_survival.push_back(w.sum());
  }
  return ts;
}

double expected_return_time(const GridKernel& K, const Eigen::VectorXd& pi,
                            const std::vector<int>& U_cells) {
  if (U_cells.empty()) throw std::invalid_argument("expected_return_time: U must be non-empty");
  std::vector<char> in_u(static_cast<std::size_t>(K.m), 0);
  for (int c : U_cells) in_u[static_cast<std::size_t>(c)] = 1;
  std::vector<int> comp;
  for (int i = 0; i < K.m; ++i)
    if (!in_u[i]) comp.push_back(i);
  double mass = 0.0;
  for (int c : U_cells) mass += pi(c);
  if (mass <= 0.0) throw std::invalid_argument("expected_return_time: U has zero mass");
  if (comp.empty()) return 1.0;

  const int q = static_cast<int>(comp.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(q, q);
  for (int r = 0; r < q; ++r)
    for (int c = 0; c < q; ++c) A(r, c) -= K.P(comp[r], comp[c]);
  // w = expected steps to reach U from each complement state
  const Eigen::VectorXd w = A.partialPivLu().solve(Eigen::VectorXd::Ones(q));

  double expect = 0.0;
  for (int c : U_cells) {
    double row = 1.0;
    for (int r = 0; r < q; ++r) row += K.P(c, comp[r]) * w(r);
    expect += pi(c) / mass * row;
  }
  return expect;
}

double StationaryField::cdf(double x) const {
  if (x <= a) return 0.0;
  if (x >= a + length) return 1.0;
  const double t = (x - a) / cell_len;
  auto i = static_cast<long>(t);
  if (i >= m) i = m - 1;
  const double frac = t - static_cast<double>(i);
  return edge_cdf[i] + frac * (edge_cdf[i + 1] - edge_cdf[i]);
}

double StationaryField::cdf_ext(double x) const {
  if (kind == SpaceKind::Interval) return cdf(std::clamp(x, a, a + length));
  const double period = std::floor((x - a) / length);
  return period + cdf(x - period * length);
}

double StationaryField::mass_between(double lo, double hi) const {
  if (hi <= lo) return 0.0;
  return cdf_ext(hi) - cdf_ext(lo);
}

double StationaryField::inverse(double mass) const {
  if (mass <= 0.0) return a;
  if (mass >= 1.0) return a + length;
  const auto it = std::upper_bound(edge_cdf.begin(), edge_cdf.end(), mass);
  auto i = static_cast<long>(it - edge_cdf.begin()) - 1;
  if (i < 0) i = 0;
  if (i >= m) i = m - 1;
  const double span = edge_cdf[i + 1] - edge_cdf[i];
  const double frac = span > 0.0 ? (mass - edge_cdf[i]) / span : 0.0;
  return a + (static_cast<double>(i) + frac) * cell_len;
}

double StationaryField::sample(RandomStream& s) const { return inverse(s.uniform01()); }

double StationaryField::sample_between(double lo, double hi, RandomStream& s) const {
  const double mlo = cdf_ext(lo);
  const double mhi = cdf_ext(hi);
  if (mhi <= mlo) throw std::invalid_argument("sample_between: zero-mass window");
  const double u = mlo + (mhi - mlo) * s.uniform01();
  // unwrap the periodic extension back into the space
  double mass = u - std::floor(u);
  double x = inverse(mass);
  if (kind == SpaceKind::Circle && x >= a + length) x -= length;
  return x;
}

StationaryField stationary_field(const GridKernel& K, const StationaryDensity& sd) {
  StationaryField f;
  f.kind = K.map.domain.kind;
  f.a = K.map.domain.a;
  f.length = K.map.domain.length();
  f.cell_len = K.cell_len;
  f.m = K.m;
  f.edge_cdf.resize(static_cast<std::size_t>(K.m) + 1);
  f.edge_cdf[0] = 0.0;
  double acc = 0.0;
  for (int i = 0; i < K.m; ++i) {
    acc += sd.pi(i);
    f.edge_cdf[static_cast<std::size_t>(i) + 1] = acc;
  }
  f.edge_cdf[static_cast<std::size_t>(K.m)] = 1.0;
  return f;
}

}  // namespace rarelaw
