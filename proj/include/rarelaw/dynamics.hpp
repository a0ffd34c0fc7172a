#pragma once
// Phase spaces and the deterministic map catalog: circle doubling x -> kx,
// the one-dimensional Lorenz family sign(x)(c|x|^b - 1) on [-1,1], the
// quadratic family a - x^2 on [-2,2], and the Gauss map 1/x mod 1.

#include <cstdint>
#include <string>

namespace rarelaw {

enum class SpaceKind { Circle, Interval };

struct PhaseSpace {
  SpaceKind kind = SpaceKind::Circle;
  double a = 0.0;  // interval endpoints; the circle is [0,1) with period 1
  double b = 1.0;

  double length() const { return b - a; }
  bool contains(double x) const;
  // shortest-arc distance on the circle, |x - y| on the interval
  double dist(double x, double y) const;
  double wrap(double t) const;     // circle reduction mod 1
  double reflect(double t) const;  // fold into [a, b]

  static PhaseSpace circle() { return {SpaceKind::Circle, 0.0, 1.0}; }
  static PhaseSpace interval(double a, double b) { return {SpaceKind::Interval, a, b}; }
};

enum class MapVariant { Doubling, Lorenz, Quadratic, Gauss };

struct MapSpec {
  MapVariant variant = MapVariant::Doubling;
  PhaseSpace domain = PhaseSpace::circle();
  int k = 2;           // doubling factor
  double beta = 0.75;  // lorenz exponent in (0,1)
  double slope = 2.0;  // lorenz prefactor c
  double a = 2.0;      // quadratic parameter

  static MapSpec doubling(int k);
  static MapSpec lorenz(double beta, double slope = 2.0);
  static MapSpec quadratic(double a);
  static MapSpec gauss();

  // string form used in configs: "doubling:2", "lorenz:0.75", "quadratic:2", "gauss"
  static MapSpec parse(const std::string& id);
  std::string id() const;
};

// evaluate the map; throws std::invalid_argument outside the domain
double apply_map(const MapSpec& spec, double x);

// Fraction of eta-cells of the domain visited by the orbit points
// f^0(x0), ..., f^{n-1}(x0).
double dense_orbit_probe(const MapSpec& spec, double x0, std::int64_t n, double eta);

}  // namespace rarelaw
