#include "rarelaw/dynamics.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace rarelaw {

namespace {

constexpr double kGaussFloor = 1e-12;

double parse_number(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(what);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad numeric parameter for ") + what + ": " + s);
  }
}

}  // namespace

bool PhaseSpace::contains(double x) const {
  if (kind == SpaceKind::Circle) return x >= 0.0 && x < 1.0;
  return x >= a && x <= b;
}

double PhaseSpace::dist(double x, double y) const {
  if (kind == SpaceKind::Circle) {
    double d = std::fabs(x - y);
    d -= std::floor(d);  // guard inputs slightly outside [0,1)
    return std::min(d, 1.0 - d);
  }
  return std::fabs(x - y);
}

double PhaseSpace::wrap(double t) const {
  double r = t - std::floor(t);
  if (r >= 1.0) r = 0.0;  // floor rounding at the seam
  return r;
}

double PhaseSpace::reflect(double t) const {
  if (t >= a && t <= b) return t;  // exact: no fold, no rounding
  const double len = length();
  // fold onto the period-2L triangle wave
  double u = std::fmod(t - a, 2.0 * len);
  if (u < 0.0) u += 2.0 * len;
  if (u > len) u = 2.0 * len - u;
  return a + u;
}

MapSpec MapSpec::doubling(int k) {
  if (k < 2) throw std::invalid_argument("doubling: k must be >= 2");
  MapSpec s;
  s.variant = MapVariant::Doubling;
  s.domain = PhaseSpace::circle();
  s.k = k;
  return s;
}

MapSpec MapSpec::lorenz(double beta, double slope) {
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("lorenz: beta must be in (0,1)");
  if (slope <= 0.0) throw std::invalid_argument("lorenz: slope must be positive");
  MapSpec s;
  s.variant = MapVariant::Lorenz;
  s.domain = PhaseSpace::interval(-1.0, 1.0);
  s.beta = beta;
  s.slope = slope;
  return s;
}

MapSpec MapSpec::quadratic(double a) {
  MapSpec s;
  s.variant = MapVariant::Quadratic;
  s.domain = PhaseSpace::interval(-2.0, 2.0);
  s.a = a;
  return s;
}

MapSpec MapSpec::gauss() {
  MapSpec s;
  s.variant = MapVariant::Gauss;
  s.domain = PhaseSpace::interval(0.0, 1.0);
  return s;
}

MapSpec MapSpec::parse(const std::string& id) {
  const auto colon = id.find(':');
  const std::string name = id.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : id.substr(colon + 1);
  if (name == "doubling") {
    const double k = arg.empty() ? 2.0 : parse_number(arg, "doubling:k");
    if (k != std::floor(k)) throw std::invalid_argument("doubling: k must be an integer");
    return doubling(static_cast<int>(k));
  }
  if (name == "lorenz") return lorenz(arg.empty() ? 0.75 : parse_number(arg, "lorenz:beta"));
  if (name == "quadratic") return quadratic(arg.empty() ? 2.0 : parse_number(arg, "quadratic:a"));
  if (name == "gauss") return gauss();
  throw std::invalid_argument("unknown map id: " + id);
}

std::string MapSpec::id() const {
  char buf[64];
  switch (variant) {
    case MapVariant::Doubling:
      std::snprintf(buf, sizeof buf, "doubling:%d", k);
      return buf;
    case MapVariant::Lorenz:
      std::snprintf(buf, sizeof buf, "lorenz:%g", beta);
      return buf;
    case MapVariant::Quadratic:
      std::snprintf(buf, sizeof buf, "quadratic:%g", a);
      return buf;
    case MapVariant::Gauss:
      return "gauss";
  }
  return "?";
}

double apply_map(const MapSpec& spec, double x) {
  switch (spec.variant) {
    case MapVariant::Doubling: {
      if (!spec.domain.contains(x)) throw std::invalid_argument("apply_map: x outside circle");
      return spec.domain.wrap(static_cast<double>(spec.k) * x);
    }
    case MapVariant::Lorenz: {
      if (!spec.domain.contains(x)) throw std::invalid_argument("apply_map: x outside [-1,1]");
      // the discontinuity at 0 takes the right-limit value
      const double sgn = x >= 0.0 ? 1.0 : -1.0;
      const double y = sgn * (spec.slope * std::pow(std::fabs(x), spec.beta) - 1.0);
      return std::fmax(-1.0, std::fmin(1.0, y));
    }
    case MapVariant::Quadratic: {
      if (!spec.domain.contains(x)) throw std::invalid_argument("apply_map: x outside [-2,2]");
      return spec.a - x * x;
    }
    case MapVariant::Gauss: {
      if (x <= 0.0 || x > 1.0) throw std::invalid_argument("apply_map: gauss needs x in (0,1]");
      const double inv = 1.0 / x;
      double y = inv - std::floor(inv);
      if (y < kGaussFloor) y = kGaussFloor;  // keep orbits away from the 0 singularity
      return y;
    }
  }
  throw std::invalid_argument("apply_map: bad variant");
}

double dense_orbit_probe(const MapSpec& spec, double x0, std::int64_t n, double eta) {
  if (n < 1) throw std::invalid_argument("dense_orbit_probe: n must be >= 1");
  if (eta <= 0.0) throw std::invalid_argument("dense_orbit_probe: eta must be positive");
  const double len = spec.domain.length();
  const std::int64_t cells = static_cast<std::int64_t>(std::ceil(len / eta));
  std::vector<bool> visited(static_cast<std::size_t>(cells), false);
  const auto mark = [&](double x) {
    auto c = static_cast<std::int64_t>((x - spec.domain.a) / len * static_cast<double>(cells));
    if (c < 0) c = 0;
    if (c >= cells) c = cells - 1;
    visited[static_cast<std::size_t>(c)] = true;
  };

  if (spec.variant == MapVariant::Doubling) {
    // kx mod 1 in binary floating point shifts mantissa bits out and the
    // orbit collapses to 0 within ~53 steps; iterate the rational orbit
    // p/q with q = 10^10 exactly instead.
    const std::uint64_t q = 10000000000ULL;
    auto p = static_cast<std::uint64_t>(std::llround(x0 * static_cast<double>(q)));
    p %= q;
    for (std::int64_t i = 0; i < n; ++i) {
      mark(static_cast<double>(p) / static_cast<double>(q));
      p = (static_cast<unsigned __int128>(p) * static_cast<std::uint64_t>(spec.k)) % q;
    }
  } else {
    double x = x0;
    for (std::int64_t i = 0; i < n; ++i) {
      mark(x);
      x = apply_map(spec, x);
    }
  }

  std::int64_t seen = 0;
  for (bool v : visited) seen += v ? 1 : 0;
  return static_cast<double>(seen) / static_cast<double>(cells);
}

}  // namespace rarelaw
