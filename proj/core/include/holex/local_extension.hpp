#pragma once

#include <functional>
#include <vector>

#include "holex/geometry.hpp"
#include "holex/polynomial.hpp"
#include "holex/variety.hpp"

namespace holex {

/// Newton coefficients of the interpolating polynomial through
/// (nodes[i], values[i]) via the triangular divided-difference recursion.
/// Nodes must be pairwise distinct.
std::vector<Complex> divided_differences(const std::vector<Complex>& nodes,
                                         const std::vector<Complex>& values);

/// Top divided difference over the node multiset via the Cauchy contour
/// integral (trapezoidal rule on |t| = radius). Handles confluent nodes.
Complex divided_diff_contour(const std::function<Complex(Complex)>& sampler,
                             const std::vector<Complex>& nodes, double radius,
                             int quad_points = 256);

/// Data h carried on the branches: any ambient function whose restriction to
/// X is h. Polynomial restrictions and named closed forms both fit.
using BranchValueFn = std::function<Complex(const CPoint&)>;

/// Per-ball interpolation extension H_p across the close branches.
class LocalExtension {
 public:
  LocalExtension(MultiPoly f, const DefiningFunction& df, const CPoint& p,
                 const Classification& cls, BranchValueFn h, double c,
                 double disc_radius_factor = 8.0);

  const CPoint& center() const { return p_; }
  const Frame& frame() const { return frame_; }
  Regime regime() const { return regime_; }
  int j_count() const { return j_count_; }
  double ball_radius() const { return ball_radius_; }
  double disc_radius() const { return disc_radius_; }

  /// Slice-level view: Newton data for the complex line base + t w_p. All
  /// points of one slice share it.
  struct Slice {
    CPoint base;
    std::vector<Complex> nodes;   // close-branch offsets, multiplicity-expanded
    std::vector<Complex> coeffs;  // Newton coefficients
  };

  Slice prepare_slice(const CPoint& base) const;

  /// Newton continuation from a nearby slice's roots; falls back to the full
  /// eigensolve when the polish fails. Fast path for quadrature sweeps.
  Slice prepare_slice(const CPoint& base, const Slice* hint) const;

  Complex eval_slice(const Slice& s, Complex t) const;

  /// H_p at zeta: Newton evaluation at t = 0 on the slice through zeta.
  Complex eval(const CPoint& zeta) const;

 private:
  void fill_coefficients(Slice& s, bool confluent) const;

  MultiPoly f_;
  CPoint p_;
  Frame frame_;
  Regime regime_;
  int j_count_;
  double c_;
  double ball_radius_;
  double close_threshold_;
  double disc_radius_;
  BranchValueFn h_;
};

/// Max |H_p| over seeded Koranyi-ball samples.
double local_sup_bound(const LocalExtension& ext, int sample_budget,
                       std::uint64_t seed);

}  // namespace holex
