#pragma once

#include <functional>
#include <unordered_map>
#include <vector>

#include "holex/geometry.hpp"
#include "holex/local_extension.hpp"
#include "holex/smoothstep.hpp"

namespace holex {

/// Anisotropic bump on a Koranyi ball: a C^K polynomial-spline profile
/// composed with the ball coordinate q = (|lambda| + |tau|^2) / r.
/// Identically 1 on the half-radius ball, supported inside the full ball.
class Bump {
 public:
  Bump(Frame frame, double radius, int smoothness_order);

  double radius() const { return radius_; }
  const Frame& frame() const { return frame_; }
  int order() const { return profile_.order(); }

  double eval(const CPoint& zeta) const;

  /// Mixed derivative in the frame directions at the center: alpha counts
  /// holomorphic, beta anti-holomorphic powers per direction. Chain rule via
  /// truncated Taylor arithmetic on the analytic coordinate maps.
  Complex eval_derivative(const CPoint& zeta, const std::vector<int>& alpha,
                          const std::vector<int>& beta) const;

 private:
  Frame frame_;
  double radius_;
  SmoothStep profile_;
};

/// Ramp in rho covering the interior: 0 near the shell, 1 on D_{-full}.
class InteriorBump {
 public:
  InteriorBump(const DefiningFunction* df, double start, double full, int order)
      : df_(df), start_(start), full_(full), profile_(order) {}
  double eval(const CPoint& zeta) const {
    const double rho = df_->rho(zeta);
    if (rho >= 0.0) return 0.0;  // the partition lives on D
    return profile_.eval((-rho - start_) / (full_ - start_));
  }

 private:
  const DefiningFunction* df_;
  double start_, full_;
  SmoothStep profile_;
};

struct GlueParams {
  int bump_order = 4;       // C^K smoothness of every cutoff
  double fd_theta = 1e-3;   // anisotropic finite-difference step factor
  double interior_start = 0.0;  // defaults to eps0 (1 - c) when 0
  double interior_full = 0.0;   // defaults to eps0 (1 + c) when 0
};

/// One covering ball with its holomorphic piece: the divided-difference
/// interpolation H_p when the ball meets X, or the ambient data h itself on
/// variety-free balls.
struct BallPiece {
  Frame frame;
  double radius = 0.0;
  Regime regime = Regime::NoVariety;
  int j_count = 0;
  std::optional<LocalExtension> interp;
  BranchValueFn fallback;

  const CPoint& center() const { return frame.p; }
  Complex eval(const CPoint& zeta) const {
    return interp ? interp->eval(zeta) : fallback(zeta);
  }
};

/// The glued smooth extension tilde_h = sum psi_j h_j + psi_0 h_0.
class GlobalExtension {
 public:
  GlobalExtension(const DefiningFunction& df, double c, double eps0,
                  std::vector<BallPiece> pieces, BranchValueFn interior,
                  const GlueParams& params);

  const DefiningFunction& domain() const { return *df_; }
  const std::vector<BallPiece>& pieces() const { return pieces_; }
  const Bump& bump(std::size_t j) const { return bumps_[j]; }
  const InteriorBump& interior_bump() const { return interior_bump_; }
  const BranchValueFn& interior_data() const { return interior_; }
  const GlueParams& params() const { return params_; }

  /// Normalized weights at zeta: index 0 is the interior weight, then one
  /// weight per ball. Throws on uncovered points.
  std::vector<double> partition_weights(const CPoint& zeta) const;

  /// Sparse form: (piece index, weight) pairs of the nonzero normalized
  /// weights; index 0 is the interior, ball j maps to j+1. Returns false on
  /// uncovered points. Candidate balls come from a spatial hash, so the cost
  /// is the local overlap count, not the covering size.
  bool sparse_weights(const CPoint& zeta,
                      std::vector<std::pair<int, double>>& w) const;

  /// Dense wrapper over sparse_weights.
  bool try_partition_weights(const CPoint& zeta, std::vector<double>& w) const;

  /// Indices of balls whose euclidean reach contains zeta.
  void candidate_balls(const CPoint& zeta, std::vector<int>& out) const;

  Complex eval(const CPoint& zeta) const;

  /// Anti-holomorphic derivative in the frame directions at zeta, by nested
  /// central differences with steps theta*|rho| (normal) and
  /// theta*sqrt(|rho|) (tangential).
  Complex dbar_frame(const CPoint& zeta, const std::vector<int>& alpha_bar) const;

  /// True when zeta and the finite-difference stencil of an order-`order`
  /// dbar derivative stay inside the covered region.
  bool fd_stencil_covered(const CPoint& zeta, int order) const;

  /// All coordinate derivatives d tilde_h / d conj(zeta_s), s = 1..n,
  /// assembled from the frame derivatives.
  CVector dbar_coordinates(const CPoint& zeta) const;

 private:
  double raw_weight(std::size_t j, const CPoint& zeta) const;
  std::uint64_t hash_key(const CPoint& zeta, int dx0, int dx1, int dx2,
                         int dx3) const;

  const DefiningFunction* df_;
  std::vector<BallPiece> pieces_;
  std::vector<Bump> bumps_;
  std::vector<double> reach_;  // euclidean prune radius per ball
  InteriorBump interior_bump_;
  BranchValueFn interior_;
  GlueParams params_;
  double hash_cell_ = 1.0;
  std::unordered_map<std::uint64_t, std::vector<int>> hash_;
};

}  // namespace holex
