#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "holex/glue.hpp"
#include "holex/kernels.hpp"
#include "holex/polynomial.hpp"

namespace holex {

/// Compactly supported test density (the coefficient of an (n,n)-form
/// against Lebesgue measure).
struct TestForm {
  std::function<Complex(const CPoint&)> density;
  CPoint support_center;
  double support_radius = 0.0;  // euclidean
  int smoothness = 3;
};

/// Radial C^K bump supported in the euclidean ball B(center, radius).
TestForm euclid_bump_form(const CPoint& center, double radius, int order,
                          Complex amplitude = 1.0);

/// Midpoint quadrature of a test form over its support box; serves as the
/// independent oracle for the fT = 1 identity.
Complex integrate_form(const DefiningFunction& df, const TestForm& form,
                       int grid_per_dim = 24);

struct CurrentParams {
  int normal_pts = 4;       // ball quadrature: grid per real normal coord
  int tangential_pts = 14;  // ball quadrature: grid per real tangential coord
  int interior_pts = 16;    // interior quadrature: grid per real coord
  double fd_theta = 0.02;   // generic-path FD step factor (tangential scale)
  int refine_levels = 1;    // generic-path subdivision near branch roots
  double prune_eta = 1e-4;  // per-z relative ball pruning (0 disables)
  double interior_pad = 1.05;
  double rho_floor = 0.02;  // extension evaluation floor
};

/// The glued residue current T with fT = 1 and the extension operator
/// E_N(h)(z) = C1 * T[dbar(tilde_h b(.,z) ^ P^{N,n-1}(.,z))].
///
/// Pieces: one per covering ball (orders #J_p, slice direction w_p; J = 0
/// degenerates to plain 1/f integration) plus one interior piece (Weierstrass
/// direction e_n, order = the z_n-degree of f).
class ResidueCurrent {
 public:
  ResidueCurrent(const MultiPoly& f, const HeferForm& hefer, int weight_power,
                 const GlobalExtension& ext, const CurrentParams& params);

  std::size_t piece_count() const { return pieces_.size(); }
  std::size_t interior_piece() const { return pieces_.size() - 1; }
  int piece_order(std::size_t i) const { return pieces_[i].order; }

  /// T applied to a smooth density; sums every piece (generic path).
  Complex apply(const std::function<Complex(const CPoint&)>& density) const;

  /// T applied to a compactly supported test form, with a support coverage
  /// check against the partition.
  Complex apply_form(const TestForm& form) const;

  /// Single piece of T; `weighted` = false drops the partition cutoff
  /// (the bare local current of the ball). A support descriptor focuses the
  /// quadrature: cells meeting the support are subdivided and the interior
  /// grid shrinks to the support box.
  Complex apply_piece(std::size_t piece,
                      const std::function<Complex(const CPoint&)>& density,
                      bool weighted = true,
                      const TestForm* support = nullptr) const;

  /// Batched extension operator: evaluates C1 * T[dbar(tilde_h b ^ P)] at
  /// every z. Quadrature tables are z-independent, so one pass over the
  /// pieces serves all requested points.
  std::vector<Complex> extension_eval(const std::vector<CPoint>& zs);

  /// Raw batched values before the C1 factor. E_N is linear in C1, so
  /// callers can fold calibration probes into the same pass. When
  /// `prune_groups` is given, the ball pruning of zs[i] follows
  /// zs[prune_groups[i]] — finite-difference stencils in z must share the
  /// representative of their grid point or pruning jumps would pollute them.
  /// `abs_mass`, when given, receives per z the sum of absolute node
  /// contributions: the conditioning scale of the quadrature sum, which sets
  /// the roundoff floor of derived quantities.
  std::vector<Complex> extension_raw_batch(
      const std::vector<CPoint>& zs, const std::vector<int>& prune_groups = {},
      std::vector<double>* abs_mass = nullptr);

  /// Calibrates C1 so the extension reproduces h(probe) at the probe.
  Complex calibrate_c1(const CPoint& probe, Complex h_probe);

  Complex c1() const { return c1_; }
  void set_c1(Complex c) { c1_ = c; }

  const CurrentParams& params() const { return params_; }

 private:
  struct Piece {
    bool interior = false;
    int ball = -1;  // index into ext.pieces() for ball pieces
    CVector dir;    // derivative direction: w_p, or e_n for the interior
    int order = 0;  // #J_p, or the Weierstrass degree l
    double radius = 0.0;
    double disc_radius = 0.0;
  };

  struct SliceRoots {
    std::vector<Complex> all;  // every root of the slice restriction
    std::vector<char> close;   // flags: root belongs to the #J_p close set
    Complex leading;           // leading coefficient of the restriction
  };

  SliceRoots slice_roots(const Piece& piece, const CPoint& base) const;
  Complex b_factor(const Piece& piece, const SliceRoots& roots,
                   Complex t) const;

  const MultiPoly* f_;
  const HeferForm* hefer_;
  int weight_power_;
  const GlobalExtension* ext_;
  CurrentParams params_;
  std::vector<Piece> pieces_;
  double wdeg_leading_scale_ = 1.0;
  Complex c1_ = 1.0;
};

/// Max over coordinates of the finite-difference Wirtinger dbar magnitude of
/// a sampler at z; the holomorphy diagnostic.
double cr_residual(const std::function<Complex(const CPoint&)>& sampler,
                   const CPoint& z, double step);

}  // namespace holex
