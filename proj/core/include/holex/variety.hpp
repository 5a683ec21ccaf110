#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "holex/geometry.hpp"
#include "holex/polynomial.hpp"
#include "holex/types.hpp"

namespace holex {

enum class Regime { NearSing, Far, NoVariety };

struct BranchRoot {
  Complex t;               // offset along w_p from the slice base
  double residual = 0.0;   // |restriction(t)| after polishing
  int multiplicity = 1;    // confluent cluster size
  bool close = false;      // |t| <= 2 sqrt(c |rho(p)|)
};

/// Roots of f restricted to the disc {base + t w_p : |t| < R}, i.e. the
/// branches of X met by the slice through `base` in the distinguished
/// tangent direction at p.
struct BranchSet {
  CPoint base;
  CVector dir;
  double disc_radius = 0.0;
  double close_threshold = 0.0;
  std::vector<BranchRoot> roots;

  int close_count() const;
  bool empty() const { return roots.empty(); }
};

/// Singular locus description supplied by a scenario: an explicit finite
/// point list, an explicit "smooth" assertion, or a Newton search request.
struct SingularLocus {
  enum class Kind { Points, Smooth, NewtonSearch } kind = Kind::NewtonSearch;
  std::vector<CPoint> points;

  static SingularLocus smooth() { return {Kind::Smooth, {}}; }
  static SingularLocus at(std::vector<CPoint> pts) {
    return {Kind::Points, std::move(pts)};
  }
  static SingularLocus newton() { return {Kind::NewtonSearch, {}}; }
};

/// Change to the slice coordinates at p: basis (e_1,...,e_{n-1}, w_p).
CMatrix slice_basis(const Frame& f);

BranchSet branch_roots(const MultiPoly& f, const DefiningFunction& df,
                       const CPoint& p, const CPoint& base, double radius,
                       double c, double confluence_tol = 1e-8);

/// Euclidean distance from p to Sing(X); +infinity for smooth varieties.
double sing_distance(const MultiPoly& f, const CPoint& p,
                     const SingularLocus& locus);

/// Order of vanishing at t=0 of the line restriction along dir.
int multiplicity_at(const MultiPoly& f, const CPoint& p_sing,
                    const CVector& dir);

struct Classification {
  Regime regime = Regime::NoVariety;
  int j_count = 0;        // #J_p, the number of close branches
  double sing_dist = 0.0;
  BranchSet primary;      // slice through p (or the richest probe slice)
};

struct ClassifyParams {
  double c = 0.1;
  double metric_C = 4.0;        // the covering constant C
  double near_sing_factor = 10.0;
  double probe_radius_factor = 2.0;  // radius = factor * C^2 sqrt(c|rho|)
  int probe_lambda_rings = 2;   // probe slice bases over the normal disc
  int probe_lambda_phases = 4;
};

Classification classify_point(const MultiPoly& f, const DefiningFunction& df,
                              const CPoint& p, const ClassifyParams& params,
                              const SingularLocus& locus);

/// Walk along X from an on-variety point until it hits bD (|rho| <= tol).
CPoint track_to_boundary(const MultiPoly& f, const DefiningFunction& df,
                         CPoint on_x, double tol = 1e-10);

struct TransversalitySample {
  CPoint p;
  double min_singular_value = 0.0;
  bool pass = false;
};

struct TransversalityReport {
  std::vector<TransversalitySample> samples;
  double tolerance = 0.0;
  bool pass = false;
};

/// At each boundary sample of X, stack a basis of the complex tangent space
/// of bD with numerically estimated tangent-cone directions and test that the
/// smallest singular value stays above `tol`.
TransversalityReport transversality_check(const MultiPoly& f,
                                          const DefiningFunction& df,
                                          const std::vector<CPoint>& samples,
                                          double tol = 0.05);

/// Seeded sampler of points of X with rho in [rho_lo, rho_hi).
std::vector<CPoint> sample_variety_points(const MultiPoly& f,
                                          const DefiningFunction& df,
                                          double rho_lo, double rho_hi,
                                          int count, std::uint64_t seed,
                                          int max_attempts = 100000);

}  // namespace holex
