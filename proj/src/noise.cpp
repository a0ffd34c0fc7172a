#include "rarelaw/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace rarelaw {

NoiseSpec NoiseSpec::uniform(double epsilon, BoundaryPolicy boundary, const PhaseSpace& space) {
  if (epsilon < 0.0) throw std::invalid_argument("noise: epsilon must be >= 0");
  if (epsilon > 0.5 * space.length())
    throw std::invalid_argument("noise: epsilon must be at most half the domain length");
  if (space.kind == SpaceKind::Circle && boundary != BoundaryPolicy::Wrap)
    throw std::invalid_argument("noise: circle domains use wrap");
  if (space.kind == SpaceKind::Interval && boundary != BoundaryPolicy::Reflect)
    throw std::invalid_argument("noise: interval domains use reflect");
  NoiseSpec n;
  n.epsilon = epsilon;
  n.boundary = boundary;
  return n;
}

NoiseSpec NoiseSpec::parse(const std::string& id, const PhaseSpace& space) {
  // uniform:epsilon=E:boundary=wrap|reflect
  if (id.rfind("uniform:", 0) != 0) throw std::invalid_argument("unknown noise id: " + id);
  double eps = -1.0;
  BoundaryPolicy bp = space.kind == SpaceKind::Circle ? BoundaryPolicy::Wrap : BoundaryPolicy::Reflect;
  bool saw_boundary = false;
  std::size_t pos = 8;
  while (pos < id.size()) {
    std::size_t next = id.find(':', pos);
    if (next == std::string::npos) next = id.size();
    const std::string field = id.substr(pos, next - pos);
    if (field.rfind("epsilon=", 0) == 0) {
      eps = std::stod(field.substr(8));
    } else if (field.rfind("boundary=", 0) == 0) {
      const std::string val = field.substr(9);
      if (val == "wrap")
        bp = BoundaryPolicy::Wrap;
      else if (val == "reflect")
        bp = BoundaryPolicy::Reflect;
      else
        throw std::invalid_argument("noise: boundary must be wrap or reflect");
      saw_boundary = true;
    } else {
      throw std::invalid_argument("noise: unknown field " + field);
    }
    pos = next + 1;
  }
  if (eps < 0.0) throw std::invalid_argument("noise: epsilon missing in " + id);
  (void)saw_boundary;
  return uniform(eps, bp, space);
}

std::string NoiseSpec::id() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "uniform:epsilon=%g:boundary=%s", epsilon,
                boundary == BoundaryPolicy::Wrap ? "wrap" : "reflect");
  return buf;
}

std::vector<SupportPiece> support_pieces(const MapSpec& map, const NoiseSpec& noise, double x) {
  if (noise.epsilon <= 0.0)
    throw std::invalid_argument("support_pieces: degenerate noise has no density");
  const double eps = noise.epsilon;
  const double fx = apply_map(map, x);
  std::vector<SupportPiece> pieces;
  if (noise.boundary == BoundaryPolicy::Wrap) {
    if (eps >= 0.5) {
      pieces.push_back({0.0, 1.0});
      return pieces;
    }
    const double lo = map.domain.wrap(fx - eps);
    const double hi = map.domain.wrap(fx + eps);
    if (lo < hi) {
      pieces.push_back({lo, hi});
    } else {
      pieces.push_back({lo, 1.0});
      pieces.push_back({0.0, hi});
    }
    return pieces;
  }
  const double a = map.domain.a, b = map.domain.b;
  pieces.push_back({std::max(a, fx - eps), std::min(b, fx + eps)});
  if (fx - eps < a) pieces.push_back({a, 2.0 * a - (fx - eps)});
  if (fx + eps > b) pieces.push_back({2.0 * b - (fx + eps), b});
  return pieces;
}

double transition_density(const MapSpec& map, const NoiseSpec& noise, double x, double y) {
  if (!map.domain.contains(y) && !(map.domain.kind == SpaceKind::Interval && y == map.domain.b))
    throw std::invalid_argument("transition_density: y outside domain");
  if (noise.epsilon <= 0.0)
    throw std::invalid_argument("transition_density: degenerate noise has no density");
  const double eps = noise.epsilon;
  const double fx = apply_map(map, x);
  if (noise.boundary == BoundaryPolicy::Wrap)
    return map.domain.dist(y, fx) < eps ? 1.0 / (2.0 * eps) : 0.0;
  // reflecting kernel: fold count over the mirror images of y at the two
  // boundaries (at most one image per boundary can be in range)
  const double a = map.domain.a, b = map.domain.b;
  int folds = 0;
  if (std::fabs(y - fx) < eps) ++folds;
  if (std::fabs(2.0 * a - y - fx) < eps) ++folds;
  if (std::fabs(2.0 * b - y - fx) < eps) ++folds;
  return folds / (2.0 * eps);
}

double transition_mass(const MapSpec& map, const NoiseSpec& noise, double x, double lo, double hi) {
  if (hi <= lo) return 0.0;
  double overlap = 0.0;
  for (const auto& p : support_pieces(map, noise, x))
    overlap += std::max(0.0, std::min(hi, p.hi) - std::max(lo, p.lo));
  return overlap / (2.0 * noise.epsilon);
}

double sample_step(const MapSpec& map, const NoiseSpec& noise, double x, RandomStream& stream) {
  const double w = stream.symmetric(noise.epsilon);
  const double t = apply_map(map, x) + w;
  if (noise.boundary == BoundaryPolicy::Wrap) return map.domain.wrap(t);
  double y = map.domain.reflect(t);
  if (map.variant == MapVariant::Gauss && y <= 0.0) y = 1e-12;
  return y;
}

std::vector<double> simulate_trajectory(const MapSpec& map, const NoiseSpec& noise, double x0,
                                        long n, RandomStream& stream) {
  if (n < 0) throw std::invalid_argument("simulate_trajectory: n must be >= 0");
  std::vector<double> traj;
  traj.reserve(static_cast<std::size_t>(n) + 1);
  traj.push_back(x0);
  double x = x0;
  for (long i = 0; i < n; ++i) {
    x = sample_step(map, noise, x, stream);
    traj.push_back(x);
  }
  return traj;
}

PerturbationReport verify_perturbation_conditions(const MapSpec& map, const NoiseSpec& noise,
                                                  int probes) {
  if (probes < 64) throw std::invalid_argument("verify_perturbation_conditions: need >= 64 probes");
  PerturbationReport rep;
  const double len = map.domain.length();
  const double res = len / probes;
  rep.probe_resolution = res;
  if (noise.epsilon <= 0.0) return rep;  // degenerate: holds stays false

  const bool circle = map.domain.kind == SpaceKind::Circle;
  const int j_max = circle ? probes / 2 : probes;

  double rho0 = len;  // shrunk below
  double lo_q = std::numeric_limits<double>::infinity();
  double hi_q = 0.0;

  for (int i = 0; i < probes; ++i) {
    const double xi = map.domain.a + (i + 0.5) * res;
    if (map.variant == MapVariant::Gauss && xi <= 0.0) continue;
    const double fx = apply_map(map, xi);
    double r = j_max * res;
    for (int j = 1; j <= j_max; ++j) {
      bool dead = false;
      for (int side = -1; side <= 1; side += 2) {
        double y = fx + side * j * res;
        if (circle) {
          y = map.domain.wrap(y);
        } else if (y < map.domain.a || y > map.domain.b) {
          continue;  // outside the space: no constraint on the intrinsic ball
        }
        if (transition_density(map, noise, xi, y) == 0.0) dead = true;
      }
      if (dead) {
        r = j * res;
        break;
      }
    }
    rho0 = std::min(rho0, r);
    for (int j = 0; j < probes; ++j) {
      const double y = map.domain.a + (j + 0.5) * res;
      const double q = transition_density(map, noise, xi, y);
      if (q > 0.0) {
        lo_q = std::min(lo_q, q);
        hi_q = std::max(hi_q, q);
      }
    }
  }

  rep.rho0 = rho0;
  rep.lower_q = std::isfinite(lo_q) ? lo_q : 0.0;
  rep.upper_q = hi_q;
  rep.holds = rep.rho0 > 0.0 && rep.lower_q > 0.0;
  return rep;
}

}  // namespace rarelaw
