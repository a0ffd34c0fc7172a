#pragma once
// Uniformly continuous random perturbation of a catalog map: one randomized
// step is f(x) + w with w uniform on (-eps, eps), pushed back into the phase
// space by wrapping (circle) or reflecting (interval). The transition density
// q_x and its certified bounds (lower_q, upper_q, covering radius rho0) are
// available in closed form because the kernel is piecewise uniform.

#include <string>
#include <vector>

#include "rarelaw/dynamics.hpp"
#include "rarelaw/rng.hpp"

namespace rarelaw {

enum class BoundaryPolicy { Wrap, Reflect };

struct NoiseSpec {
  double epsilon = 0.0;
  BoundaryPolicy boundary = BoundaryPolicy::Wrap;

  // epsilon == 0 is the disabled-noise limit: steps are deterministic and no
  // transition density exists. Construction rejects epsilon outside
  // [0, length/2] for the given space and a boundary policy that does not
  // match the space kind.
  static NoiseSpec uniform(double epsilon, BoundaryPolicy boundary, const PhaseSpace& space);

  // "uniform:epsilon=E:boundary=wrap|reflect"
  static NoiseSpec parse(const std::string& id, const PhaseSpace& space);
  std::string id() const;
};

// one support piece of q_x; the density on a piece is 1/(2 eps) and pieces
// may overlap (reflection folds)
struct SupportPiece {
  double lo;
  double hi;
};

std::vector<SupportPiece> support_pieces(const MapSpec& map, const NoiseSpec& noise, double x);

// pointwise density q_x(y), per unit length
double transition_density(const MapSpec& map, const NoiseSpec& noise, double x, double y);

// closed-form integral of q_x over [lo, hi] (callers clip to the domain)
double transition_mass(const MapSpec& map, const NoiseSpec& noise, double x, double lo, double hi);

// f(x) + w, wrapped or reflected; always consumes exactly one draw
double sample_step(const MapSpec& map, const NoiseSpec& noise, double x, RandomStream& stream);

// n+1 points starting at x0; consumes exactly n draws
std::vector<double> simulate_trajectory(const MapSpec& map, const NoiseSpec& noise, double x0,
                                        long n, RandomStream& stream);

struct PerturbationReport {
  double rho0 = 0.0;
  double lower_q = 0.0;
  double upper_q = 0.0;
  double probe_resolution = 0.0;
  bool holds = false;
};

// Grid certification of the perturbation conditions on m probe points:
// rho0 is the largest radius (at probe resolution) such that the density is
// positive on the rho0-ball around f(x) for every probe x; lower_q/upper_q
// are the extreme positive density values seen. Degenerate noise reports
// holds = false instead of failing.
PerturbationReport verify_perturbation_conditions(const MapSpec& map, const NoiseSpec& noise,
                                                  int probes);

}  // namespace rarelaw
