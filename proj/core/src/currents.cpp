#include "holex/currents.hpp"

#include <cmath>
#include <map>

#include "holex/smoothstep.hpp"

namespace holex {

namespace {

std::vector<std::pair<int, double>> central_1d(int order) {
  switch (order) {
    case 0:
      return {{0, 1.0}};
    case 1:
      return {{-1, -0.5}, {1, 0.5}};
    case 2:
      return {{-1, 1.0}, {0, -2.0}, {1, 1.0}};
    case 3:
      return {{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
  }
  throw HolexError("current: derivative order beyond 3 is unsupported");
}

struct StencilTerm {
  int dx, dy;
  Complex coef;
};

/// Grid stencil of dbar^m = (1/2 (d/dx + i d/dy))^m with spacing h.
std::vector<StencilTerm> dbar_stencil(int m, double h) {
  std::map<std::pair<int, int>, Complex> acc;
  auto binom = [](int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
  };
  for (int i = 0; i <= m; ++i) {
    const Complex phase =
        std::pow(Complex(0, 1), m - i) * binom(m, i) * std::pow(0.5, m);
    for (auto [ox, cx] : central_1d(i))
      for (auto [oy, cy] : central_1d(m - i))
        acc[{ox, oy}] += phase * cx * cy;
  }
  std::vector<StencilTerm> out;
  const double hm = std::pow(h, m);
  for (const auto& [k, v] : acc)
    if (v != Complex(0.0)) out.push_back({k.first, k.second, v / hm});
  return out;
}

/// Recursive central-difference dbar^m along a complex direction (generic
/// path; the FD step is independent of any grid).
Complex dbar_fd(const std::function<Complex(const CPoint&)>& fn,
                const CPoint& at, const CVector& dir, int m, double h) {
  if (m == 0) return fn(at);
  const Complex gx = (dbar_fd(fn, at + Complex(h, 0) * dir, dir, m - 1, h) -
                      dbar_fd(fn, at - Complex(h, 0) * dir, dir, m - 1, h)) /
                     (2.0 * h);
  const Complex gy = (dbar_fd(fn, at + Complex(0, h) * dir, dir, m - 1, h) -
                      dbar_fd(fn, at - Complex(0, h) * dir, dir, m - 1, h)) /
                     (2.0 * h);
  return 0.5 * (gx + Complex(0, 1) * gy);
}

double factorial(int m) {
  double f = 1.0;
  for (int i = 2; i <= m; ++i) f *= i;
  return f;
}

/// tilde_h evaluator with per-ball slice continuation, for quadrature sweeps.
class FastTilde {
 public:
  explicit FastTilde(const GlobalExtension& ext) : ext_(ext) {}

  Complex eval(const CPoint& zeta) {
    if (!ext_.sparse_weights(zeta, w_))
      throw HolexError("tilde_h: point not covered by the partition");
    Complex acc = 0.0;
    for (const auto& [idx, x] : w_) {
      if (idx == 0) {
        acc += x * ext_.interior_data()(zeta);
        continue;
      }
      const BallPiece& bp = ext_.pieces()[idx - 1];
      if (!bp.interp) {
        acc += x * bp.fallback(zeta);
        continue;
      }
      auto it = hints_.find(idx - 1);
      LocalExtension::Slice s = bp.interp->prepare_slice(
          zeta, it == hints_.end() ? nullptr : &it->second);
      acc += x * bp.interp->eval_slice(s, Complex(0.0));
      hints_[idx - 1] = std::move(s);
    }
    return acc;
  }

  /// Coordinate dbar vector assembled from anisotropic frame differences.
  CVector dbar_coordinates(const CPoint& zeta) {
    const DefiningFunction& df = ext_.domain();
    const int n = df.dim();
    const Frame fr = frame_at(df, zeta);
    const double arho = std::abs(df.rho(zeta));
    const double theta = ext_.params().fd_theta;
    CVector frame_d(n);
    for (int a = 0; a < n; ++a) {
      const double h = theta * (a == 0 ? arho : std::sqrt(arho));
      if (h < 1e-12) throw HolexError("tilde_h dbar: step underflow near bD");
      const CVector& e = fr.eps[a];
      const Complex gx =
          (eval(zeta + Complex(h, 0) * e) - eval(zeta - Complex(h, 0) * e)) /
          (2.0 * h);
      const Complex gy =
          (eval(zeta + Complex(0, h) * e) - eval(zeta - Complex(0, h) * e)) /
          (2.0 * h);
      frame_d[a] = 0.5 * (gx + Complex(0, 1) * gy);
    }
    CVector out(n);
    for (int s = 0; s < n; ++s) {
      Complex acc = 0.0;
      for (int a = 0; a < n; ++a) acc += std::conj(fr.eps[a][s]) * frame_d[a];
      out[s] = acc;
    }
    return out;
  }

 private:
  const GlobalExtension& ext_;
  std::vector<std::pair<int, double>> w_;
  std::unordered_map<int, LocalExtension::Slice> hints_;
};

}  // namespace

TestForm euclid_bump_form(const CPoint& center, double radius, int order,
                          Complex amplitude) {
  SmoothStep profile(order);
  TestForm form;
  form.support_center = center;
  form.support_radius = radius;
  form.smoothness = order;
  form.density = [center, radius, profile, amplitude](const CPoint& z) {
    const double u = (z - center).squaredNorm() / (radius * radius);
    return amplitude * (1.0 - profile.eval(u));
  };
  return form;
}

Complex integrate_form(const DefiningFunction& df, const TestForm& form,
                       int grid_per_dim) {
  if (df.dim() != 2) throw HolexError("integrate_form: implemented for n = 2");
  const double R = form.support_radius;
  const double h = 2.0 * R / grid_per_dim;
  const double cell = h * h * h * h;
  Complex acc = 0.0;
  CPoint z(2);
  for (int i0 = 0; i0 < grid_per_dim; ++i0)
    for (int i1 = 0; i1 < grid_per_dim; ++i1)
      for (int i2 = 0; i2 < grid_per_dim; ++i2)
        for (int i3 = 0; i3 < grid_per_dim; ++i3) {
          z[0] = form.support_center[0] +
                 Complex(-R + (i0 + 0.5) * h, -R + (i1 + 0.5) * h);
          z[1] = form.support_center[1] +
                 Complex(-R + (i2 + 0.5) * h, -R + (i3 + 0.5) * h);
          if (df.rho(z) >= 0.0) continue;
          acc += form.density(z) * cell;
        }
  return acc;
}

ResidueCurrent::ResidueCurrent(const MultiPoly& f, const HeferForm& hefer,
                               int weight_power, const GlobalExtension& ext,
                               const CurrentParams& params)
    : f_(&f),
      hefer_(&hefer),
      weight_power_(weight_power),
      ext_(&ext),
      params_(params) {
  const int n = f.dim();
  if (n != 2) throw HolexError("current: implemented for n = 2");
  for (std::size_t b = 0; b < ext.pieces().size(); ++b) {
    const BallPiece& bp = ext.pieces()[b];
    Piece pc;
    pc.interior = false;
    pc.ball = static_cast<int>(b);
    pc.dir = bp.frame.w;
    pc.order = bp.j_count;
    pc.radius = bp.radius;
    pc.disc_radius =
        bp.interp ? bp.interp->disc_radius() : 8.0 * std::sqrt(bp.radius);
    pieces_.push_back(std::move(pc));
  }
  // Interior piece: Weierstrass direction e_n. The leading
  // zeta_n-coefficient of f must be constant so that f factors as
  // (unit) * (monic in zeta_n) globally.
  int l = 0;
  for (const auto& [e, c] : f.terms()) l = std::max(l, e[n - 1]);
  if (l == 0)
    throw HolexError(
        "current: f does not depend on zeta_n; supply adapted coordinates");
  for (const auto& [e, c] : f.terms()) {
    if (e[n - 1] != l) continue;
    for (int j = 0; j < n - 1; ++j)
      if (e[j] != 0)
        throw HolexError("current: leading zeta_n-coefficient of f is not "
                         "constant; supply adapted coordinates");
  }
  Piece pin;
  pin.interior = true;
  pin.ball = -1;
  pin.dir = CVector::Zero(n);
  pin.dir[n - 1] = 1.0;
  pin.order = l;
  pin.radius = ext.domain().bounding_radius() * params.interior_pad;
  pin.disc_radius = 0.0;
  pieces_.push_back(std::move(pin));
}

ResidueCurrent::SliceRoots ResidueCurrent::slice_roots(
    const Piece& piece, const CPoint& base) const {
  SliceRoots out;
  const UniPoly rest = f_->restrict_line(base, piece.dir);
  const int deg = rest.degree(1e-13);
  if (deg < 0)
    throw HolexError("current: slice restriction vanished identically");
  out.leading = rest.coeffs()[deg];
  if (deg == 0) return out;
  out.all = poly_roots(rest);
  out.close.assign(out.all.size(), 0);
  if (piece.interior) {
    out.close.assign(out.all.size(), 1);
    return out;
  }
  if (piece.order == 0) return out;

  // Cluster the in-disc roots and keep the #J_p nearest whole clusters.
  struct Cluster {
    double dist;
    std::vector<int> members;
  };
  std::vector<Cluster> clusters;
  std::vector<char> used(out.all.size(), 0);
  const double ctol = 1e-8 * std::max(piece.disc_radius, 1e-12);
  for (std::size_t i = 0; i < out.all.size(); ++i) {
    if (used[i] || std::abs(out.all[i]) >= piece.disc_radius) continue;
    Cluster c;
    c.members.push_back(static_cast<int>(i));
    used[i] = 1;
    for (std::size_t j = i + 1; j < out.all.size(); ++j)
      if (!used[j] && std::abs(out.all[j] - out.all[i]) < ctol) {
        c.members.push_back(static_cast<int>(j));
        used[j] = 1;
      }
    c.dist = std::abs(out.all[i]);
    clusters.push_back(std::move(c));
  }
  std::sort(clusters.begin(), clusters.end(),
            [](const Cluster& a, const Cluster& b) { return a.dist < b.dist; });
  int taken = 0;
  for (const Cluster& c : clusters) {
    if (taken >= piece.order) break;
    for (int i : c.members) out.close[i] = 1;
    taken += static_cast<int>(c.members.size());
  }
  return out;
}

Complex ResidueCurrent::b_factor(const Piece& piece, const SliceRoots& roots,
                                 Complex t) const {
  (void)piece;
  // B = conj(prod_close (r_j - t)) / f
  //   = prod_close[-conj(d)/d] / (leading * prod_far (t - r_i)),  d = r_j - t.
  Complex acc = 1.0 / roots.leading;
  for (std::size_t i = 0; i < roots.all.size(); ++i) {
    if (roots.close[i]) {
      const Complex d = roots.all[i] - t;
      if (std::abs(d) < 1e-280)
        acc *= -1.0;  // exactly on X: measure-zero phase clamp
      else
        acc *= -std::conj(d) / d;
    } else {
      acc /= (t - roots.all[i]);
    }
  }
  return acc;
}

Complex ResidueCurrent::apply_piece(
    std::size_t piece_idx,
    const std::function<Complex(const CPoint&)>& density, bool weighted,
    const TestForm* support) const {
  const Piece& pc = pieces_[piece_idx];
  const int partition_idx = pc.interior ? 0 : pc.ball + 1;
  const DefiningFunction& df = ext_->domain();

  std::vector<std::pair<int, double>> wbuf;
  auto weighted_density = [&](const CPoint& zeta) -> Complex {
    double w = 1.0;
    if (weighted) {
      w = 0.0;
      if (ext_->sparse_weights(zeta, wbuf))
        for (const auto& [idx, x] : wbuf)
          if (idx == partition_idx) {
            w = x;
            break;
          }
    } else if (!pc.interior) {
      const BallPiece& bp = ext_->pieces()[pc.ball];
      if (pseudo_distance(bp.frame, zeta) >= bp.radius) w = 0.0;
    }
    return w == 0.0 ? Complex(0.0) : w * density(zeta);
  };

  Complex acc = 0.0;
  if (!pc.interior) {
    const BallPiece& bp = ext_->pieces()[pc.ball];
    const double r = pc.radius;
    const double T = std::sqrt(r);
    const int mn = params_.normal_pts, mt = params_.tangential_pts;
    const double hn = 2.0 * r / mn, ht = 2.0 * T / mt;
    const double fd_h = params_.fd_theta * T;
    for (int o0 = 0; o0 < mn; ++o0)
      for (int o1 = 0; o1 < mn; ++o1) {
        const Complex lam(-r + (o0 + 0.5) * hn, -r + (o1 + 0.5) * hn);
        const CPoint origin = bp.frame.p + lam * bp.frame.eta;
        const SliceRoots roots = slice_roots(pc, origin);
        auto cell_rec = [&](auto&& self, Complex tc, double half,
                            int level) -> void {
          bool split = false;
          if (level < params_.refine_levels) {
            double nearest = 1e300;
            for (std::size_t i = 0; i < roots.all.size(); ++i)
              if (roots.close[i])
                nearest = std::min(nearest, std::abs(roots.all[i] - tc));
            split = nearest < 4.0 * half;
          }
          if (support) {
            const CPoint cell_center = origin + tc * bp.frame.w;
            const double dist = norm2(cell_center - support->support_center);
            // outside the support plus the dbar stencil reach the integrand
            // vanishes identically
            if (dist > support->support_radius + 1.5 * half +
                           (pc.order + 1) * fd_h)
              return;
            if (!split && level < params_.refine_levels + 6 &&
                2.0 * half > 0.15 * support->support_radius)
              split = dist < support->support_radius + 1.5 * half;
          }
          if (split) {
            const double q = 0.5 * half;
            for (double sx : {-q, q})
              for (double sy : {-q, q})
                self(self, tc + Complex(sx, sy), q, level + 1);
            return;
          }
          const CPoint node = origin + tc * bp.frame.w;
          const Complex d =
              dbar_fd(weighted_density, node, bp.frame.w, pc.order, fd_h);
          if (d != Complex(0.0))
            acc += hn * hn * (2.0 * half) * (2.0 * half) * d *
                   b_factor(pc, roots, tc) / factorial(pc.order);
        };
        for (int i2 = 0; i2 < mt; ++i2)
          for (int i3 = 0; i3 < mt; ++i3)
            cell_rec(cell_rec,
                     Complex(-T + (i2 + 0.5) * ht, -T + (i3 + 0.5) * ht),
                     0.5 * ht, 0);
      }
    return acc;
  }

  // Interior piece: ambient grid, derivative along e_n. A support descriptor
  // shrinks the integration box to the support (plus cutoff/stencil padding).
  const int mi = params_.interior_pts;
  const double fd_h = params_.fd_theta;
  double lo[4], hi[4];
  for (int d = 0; d < 4; ++d) {
    lo[d] = -pc.radius;
    hi[d] = pc.radius;
  }
  if (support) {
    const double pad =
        0.3 * support->support_radius + (pc.order + 1) * fd_h + 0.02;
    for (int d = 0; d < 4; ++d) {
      const double c = d % 2 == 0 ? support->support_center[d / 2].real()
                                  : support->support_center[d / 2].imag();
      lo[d] = std::max(lo[d], c - support->support_radius - pad);
      hi[d] = std::min(hi[d], c + support->support_radius + pad);
    }
  }
  const double h0 = (hi[0] - lo[0]) / mi, h1 = (hi[1] - lo[1]) / mi;
  const double h2 = (hi[2] - lo[2]) / mi, h3 = (hi[3] - lo[3]) / mi;
  const double cell = h0 * h1 * h2 * h3;
  if (cell <= 0.0) return acc;
  for (int o0 = 0; o0 < mi; ++o0)
    for (int o1 = 0; o1 < mi; ++o1) {
      CPoint origin(2);
      origin[0] = Complex(lo[0] + (o0 + 0.5) * h0, lo[1] + (o1 + 0.5) * h1);
      origin[1] = 0.0;
      std::optional<SliceRoots> roots;
      for (int i2 = 0; i2 < mi; ++i2)
        for (int i3 = 0; i3 < mi; ++i3) {
          const Complex tc(lo[2] + (i2 + 0.5) * h2, lo[3] + (i3 + 0.5) * h3);
          CPoint node = origin;
          node[1] = tc;
          if (df.rho(node) >= 0.0) continue;
          if (support &&
              norm2(node - support->support_center) >
                  support->support_radius + (pc.order + 1) * fd_h)
            continue;
          const Complex d = dbar_fd(weighted_density, node, pc.dir, pc.order,
                                    fd_h);
          if (d == Complex(0.0)) continue;
          if (!roots) roots = slice_roots(pc, origin);
          acc += cell * d * b_factor(pc, *roots, tc) / factorial(pc.order);
        }
    }
  return acc;
}

Complex ResidueCurrent::apply(
    const std::function<Complex(const CPoint&)>& density) const {
  Complex acc = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i)
    acc += apply_piece(i, density, true);
  return acc;
}

Complex ResidueCurrent::apply_form(const TestForm& form) const {
  // The current represents 1/f only where the partition sums to one.
  std::vector<double> w;
  std::vector<CPoint> probes{form.support_center};
  for (int j = 0; j < 8; ++j) {
    CPoint p = form.support_center;
    const double th = 2.0 * kPi * j / 8.0;
    p[j % 2] += 0.7 * form.support_radius * Complex(std::cos(th), std::sin(th));
    probes.push_back(p);
  }
  for (const CPoint& p : probes)
    if (ext_->domain().rho(p) < 0.0 && !ext_->try_partition_weights(p, w))
      throw HolexError("current: test form support not covered");

  Complex acc = 0.0;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const Piece& pc = pieces_[i];
    if (!pc.interior) {
      const BallPiece& bp = ext_->pieces()[pc.ball];
      const double reach = pc.radius + std::sqrt(pc.radius);
      if (norm2(bp.center() - form.support_center) >
          reach + form.support_radius + 0.05)
        continue;
    }
    acc += apply_piece(i, form.density, true, &form);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Extension operator: batched evaluation over z with z-independent tables.

namespace {

/// Per-piece quadrature table. The stored quantities do not depend on z, so
/// one construction serves every requested evaluation point.
struct PieceTable {
  int on0 = 0, on1 = 0, tn0 = 0, tn1 = 0;  // outer grid and padded t grid
  int margin = 0;
  double cellw = 0.0;  // integration cell volume
  double th = 0.0;     // t spacing (FD step of the stencil)
  std::vector<double> px, py, tx, ty;  // cell center coordinates (real axes)
  // flattened per-point data, index ((o0*on1+o1)*tn0+it0)*tn1+it1
  std::vector<char> active;    // partition weight > 0 here
  std::vector<double> weight;  // this piece's normalized cutoff
  std::vector<double> rho;
  std::vector<Complex> grad;   // 2 entries per point
  std::vector<Complex> tilde, db1, db2;
  std::vector<Complex> bfac;   // only meaningful on integration nodes
  std::vector<std::vector<HeferForm::ZPoly>> hz;  // collapsed Hefer per point
  CVector dir;
  Frame frame;     // ball frame; interior: unused except dir
  bool interior = false;
  int order = 0;
};

}  // namespace

std::vector<Complex> ResidueCurrent::extension_raw_batch(
    const std::vector<CPoint>& zs, const std::vector<int>& prune_groups,
    std::vector<double>* abs_mass) {
  const DefiningFunction& df = ext_->domain();
  const int n = df.dim();
  std::vector<Complex> res(zs.size(), Complex(0.0));
  if (abs_mass) abs_mass->assign(zs.size(), 0.0);
  if (zs.empty()) return res;
  if (!prune_groups.empty() && prune_groups.size() != zs.size())
    throw HolexError("extension: prune group arity mismatch");

  // Per-z active set of ball pieces (kernel-decay pruning).
  const int nballs = static_cast<int>(pieces_.size()) - 1;
  std::vector<std::vector<char>> active_z(zs.size(),
                                          std::vector<char>(nballs, 1));
  if (params_.prune_eta > 0.0) {
    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
      const CPoint& zrep =
          prune_groups.empty() ? zs[zi] : zs[prune_groups[zi]];
      std::vector<double> bound(nballs);
      double best = 0.0;
      for (int b = 0; b < nballs; ++b) {
        const BallPiece& bp = ext_->pieces()[b];
        const double rho_p = std::abs(df.rho(bp.center()));
        const double del = pseudo_distance(bp.frame, zrep);
        const double ratio = rho_p / (rho_p + del);
        bound[b] = std::pow(ratio, weight_power_ + 1) *
                   std::pow(rho_p, -(n + 0.5 + 0.5 * pieces_[b].order)) *
                   std::pow(pieces_[b].radius, 3);
        best = std::max(best, bound[b]);
      }
      for (int b = 0; b < nballs; ++b)
        active_z[zi][b] = bound[b] >= params_.prune_eta * best ? 1 : 0;
    }
  }

  const RhoJet jet0 = df.rho_jet(CPoint::Zero(n), 2);  // constant Hessians
  const CMatrix& mixed = jet0.mixed;
  const CMatrix& pure = jet0.pure;

  for (std::size_t pi = 0; pi < pieces_.size(); ++pi) {
    const Piece& pc = pieces_[pi];
    bool needed = pc.interior;
    for (std::size_t zi = 0; zi < zs.size() && !needed; ++zi)
      needed = active_z[zi][pc.ball];
    if (!needed) continue;

    // ---- Phase A: z-independent table ----
    PieceTable tab;
    tab.interior = pc.interior;
    tab.order = pc.order;
    tab.dir = pc.interior ? pc.dir : ext_->pieces()[pc.ball].frame.w;
    tab.margin = 2;
    double t_half, o_half;
    CPoint o_center(n);
    if (!pc.interior) {
      tab.frame = ext_->pieces()[pc.ball].frame;
      tab.on0 = tab.on1 = params_.normal_pts;
      const int mt = params_.tangential_pts;
      tab.tn0 = tab.tn1 = mt + 2 * tab.margin;
      o_half = pc.radius;
      t_half = std::sqrt(pc.radius);
      tab.th = 2.0 * t_half / mt;
      tab.cellw = (2.0 * o_half / tab.on0) * (2.0 * o_half / tab.on1) * tab.th *
                  tab.th;
    } else {
      tab.on0 = tab.on1 = params_.interior_pts;
      const int mt = params_.interior_pts;
      tab.tn0 = tab.tn1 = mt + 2 * tab.margin;
      o_half = pc.radius;
      t_half = pc.radius;
      tab.th = 2.0 * t_half / mt;
      tab.cellw = (2.0 * o_half / tab.on0) * (2.0 * o_half / tab.on1) * tab.th *
                  tab.th;
    }
    const std::size_t npts = static_cast<std::size_t>(tab.on0) * tab.on1 *
                             tab.tn0 * tab.tn1;
    tab.active.assign(npts, 0);
    tab.weight.assign(npts, 0.0);
    tab.rho.assign(npts, 0.0);
    tab.grad.assign(2 * npts, Complex(0.0));
    tab.tilde.assign(npts, Complex(0.0));
    tab.db1.assign(npts, Complex(0.0));
    tab.db2.assign(npts, Complex(0.0));
    tab.bfac.assign(npts, Complex(0.0));
    tab.hz.resize(npts);

    FastTilde ft(*ext_);
    std::vector<std::pair<int, double>> wbuf;
    const int partition_idx = pc.interior ? 0 : pc.ball + 1;
    const auto stencil = dbar_stencil(pc.order, tab.th);

    for (int o0 = 0; o0 < tab.on0; ++o0)
      for (int o1 = 0; o1 < tab.on1; ++o1) {
        CPoint origin(n);
        const double ox = -o_half + (o0 + 0.5) * (2.0 * o_half / tab.on0);
        const double oy = -o_half + (o1 + 0.5) * (2.0 * o_half / tab.on1);
        if (!pc.interior)
          origin = tab.frame.p + Complex(ox, oy) * tab.frame.eta;
        else {
          origin = CPoint::Zero(n);
          origin[0] = Complex(ox, oy);
        }
        std::optional<SliceRoots> roots;
        for (int it0 = 0; it0 < tab.tn0; ++it0)
          for (int it1 = 0; it1 < tab.tn1; ++it1) {
            const Complex tc(-t_half + (it0 - tab.margin + 0.5) * tab.th,
                             -t_half + (it1 - tab.margin + 0.5) * tab.th);
            const CPoint zeta = origin + tc * tab.dir;
            const std::size_t idx =
                ((static_cast<std::size_t>(o0) * tab.on1 + o1) * tab.tn0 +
                 it0) *
                    tab.tn1 +
                it1;
            tab.rho[idx] = df.rho(zeta);
            if (tab.rho[idx] >= 0.0) continue;
            const bool node = it0 >= tab.margin && it0 < tab.tn0 - tab.margin &&
                              it1 >= tab.margin && it1 < tab.tn1 - tab.margin;
            double w = 0.0;
            if (ext_->sparse_weights(zeta, wbuf))
              for (const auto& [widx, x] : wbuf)
                if (widx == partition_idx) {
                  w = x;
                  break;
                }
            if (node && (w > 0.0 || pc.order > 0)) {
              if (!roots) roots = slice_roots(pc, origin);
              tab.bfac[idx] = b_factor(pc, *roots, tc);
            }
            if (w <= 0.0) continue;
            tab.active[idx] = 1;
            tab.weight[idx] = w;
            const CVector g = df.grad(zeta);
            tab.grad[2 * idx] = g[0];
            tab.grad[2 * idx + 1] = g[1];
            tab.tilde[idx] = ft.eval(zeta);
            const CVector db = ft.dbar_coordinates(zeta);
            tab.db1[idx] = db[0];
            tab.db2[idx] = db[1];
            tab.hz[idx] = hefer_->collapse_z(zeta);
          }
      }

    // ---- Phase B/C: per z assembly and stencil reduction ----
    std::vector<Complex> buf(npts);
    const double inv_fact = 1.0 / factorial(pc.order);
    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
      if (!pc.interior && !active_z[zi][pc.ball]) continue;
      const CPoint& z = zs[zi];
      std::fill(buf.begin(), buf.end(), Complex(0.0));
      for (std::size_t idx = 0; idx < npts; ++idx) {
        if (!tab.active[idx]) continue;
        // zeta of this point
        const std::size_t it1 = idx % tab.tn1;
        const std::size_t it0 = (idx / tab.tn1) % tab.tn0;
        const std::size_t o1 = (idx / (static_cast<std::size_t>(tab.tn1) *
                                       tab.tn0)) %
                               tab.on1;
        const std::size_t o0 = idx / (static_cast<std::size_t>(tab.tn1) *
                                      tab.tn0 * tab.on1);
        CPoint zeta(n);
        const double ox = -o_half + (o0 + 0.5) * (2.0 * o_half / tab.on0);
        const double oy = -o_half + (o1 + 0.5) * (2.0 * o_half / tab.on1);
        if (!pc.interior)
          zeta = tab.frame.p + Complex(ox, oy) * tab.frame.eta;
        else {
          zeta = CPoint::Zero(n);
          zeta[0] = Complex(ox, oy);
        }
        zeta += Complex(-t_half + (it0 - static_cast<double>(tab.margin) +
                                   0.5) *
                                      tab.th,
                        -t_half + (it1 - static_cast<double>(tab.margin) +
                                   0.5) *
                                      tab.th) *
                tab.dir;

        const double rho = tab.rho[idx];
        const Complex g0 = tab.grad[2 * idx], g1 = tab.grad[2 * idx + 1];
        const Complex d0 = z[0] - zeta[0], d1 = z[1] - zeta[1];
        // support function and Hefer pieces of the kernel
        const Complex ga =
            0.5 * (g0 - 0.5 * (pure(0, 0) * d0 + pure(0, 1) * d1));
        const Complex gb =
            0.5 * (g1 - 0.5 * (pure(1, 0) * d0 + pure(1, 1) * d1));
        const Complex g = ga * d0 + gb * d1;
        const Complex den = g + rho;
        if (std::abs(den) < 1e-12) continue;  // floor breach: withheld
        const Complex ratio = rho / den;
        Complex m00 = 0.5 * mixed(0, 0) / rho - ga * std::conj(g0) / (rho * rho);
        Complex m01 = 0.5 * mixed(0, 1) / rho - ga * std::conj(g1) / (rho * rho);
        Complex m10 = 0.5 * mixed(1, 0) / rho - gb * std::conj(g0) / (rho * rho);
        Complex m11 = 0.5 * mixed(1, 1) / rho - gb * std::conj(g1) / (rho * rho);
        // dbar_s of g, ratio, M
        const Complex dbg[2] = {0.5 * (mixed(0, 0) * d0 + mixed(1, 0) * d1),
                                0.5 * (mixed(0, 1) * d0 + mixed(1, 1) * d1)};
        const Complex rb[2] = {std::conj(g0), std::conj(g1)};
        const Complex gc[2] = {ga, gb};
        Complex dratio[2], dm[2][2][2];
        for (int s = 0; s < 2; ++s) {
          dratio[s] = (rb[s] * g - rho * dbg[s]) / (den * den);
          for (int a = 0; a < 2; ++a)
            for (int e = 0; e < 2; ++e) {
              dm[s][a][e] = -0.5 * mixed(a, e) * rb[s] / (rho * rho) -
                            (0.5 * mixed(a, s) * rb[e] +
                             gc[a] * std::conj(pure(e, s))) /
                                (rho * rho) +
                            2.0 * gc[a] * rb[e] * rb[s] / (rho * rho * rho);
            }
        }
        const CVector b = HeferForm::eval_collapsed(tab.hz[idx], z);
        // W = ratio^{N+1}
        Complex ratio_n = 1.0;
        for (int i = 0; i < weight_power_; ++i) ratio_n *= ratio;
        const Complex W = ratio_n * ratio;
        const Complex dW[2] = {
            static_cast<double>(weight_power_ + 1) * ratio_n * dratio[0],
            static_cast<double>(weight_power_ + 1) * ratio_n * dratio[1]};
        const Complex M[2][2] = {{m00, m01}, {m10, m11}};
        Complex K[2], dK[2][2];
        for (int e = 0; e < 2; ++e) {
          const Complex kappa = b[1] * M[0][e] - b[0] * M[1][e];
          K[e] = W * kappa;
          for (int s = 0; s < 2; ++s)
            dK[s][e] = dW[s] * kappa +
                       W * (b[1] * dm[s][0][e] - b[0] * dm[s][1][e]);
        }
        const Complex gamma =
            -4.0 * ((tab.db2[idx] * K[0] + tab.tilde[idx] * dK[1][0]) -
                    (tab.db1[idx] * K[1] + tab.tilde[idx] * dK[0][1]));
        buf[idx] = tab.weight[idx] * gamma;
      }
      // stencil reduction over integration nodes
      Complex acc = 0.0;
      double mass = 0.0;
      for (int o0 = 0; o0 < tab.on0; ++o0)
        for (int o1 = 0; o1 < tab.on1; ++o1)
          for (int it0 = tab.margin; it0 < tab.tn0 - tab.margin; ++it0)
            for (int it1 = tab.margin; it1 < tab.tn1 - tab.margin; ++it1) {
              const std::size_t idx =
                  ((static_cast<std::size_t>(o0) * tab.on1 + o1) * tab.tn0 +
                   it0) *
                      tab.tn1 +
                  it1;
              if (tab.bfac[idx] == Complex(0.0)) continue;
              Complex dsum = 0.0;
              for (const StencilTerm& st : stencil)
                dsum += st.coef *
                        buf[idx + static_cast<std::size_t>(st.dx) * tab.tn1 +
                            st.dy];
              acc += dsum * tab.bfac[idx];
              mass += std::abs(dsum * tab.bfac[idx]);
            }
      res[zi] += acc * tab.cellw * inv_fact;
      if (abs_mass) (*abs_mass)[zi] += mass * tab.cellw * inv_fact;
    }
  }
  return res;
}

std::vector<Complex> ResidueCurrent::extension_eval(
    const std::vector<CPoint>& zs) {
  for (const CPoint& z : zs)
    if (std::abs(ext_->domain().rho(z)) < params_.rho_floor)
      throw HolexError("extension_eval: z below the rho floor");
  std::vector<Complex> out = extension_raw_batch(zs);
  for (Complex& v : out) v *= c1_;
  return out;
}

Complex ResidueCurrent::calibrate_c1(const CPoint& probe, Complex h_probe) {
  const std::vector<Complex> raw = extension_raw_batch({probe});
  if (std::abs(raw[0]) < 1e-300)
    throw HolexError("calibrate_c1: raw extension vanished at the probe");
  c1_ = h_probe / raw[0];
  return c1_;
}

double cr_residual(const std::function<Complex(const CPoint&)>& sampler,
                   const CPoint& z, double step) {
  if (step < 1e-12) throw HolexError("cr_residual: step underflow");
  const int n = static_cast<int>(z.size());
  double worst = 0.0;
  for (int s = 0; s < n; ++s) {
    CVector e = CVector::Zero(n);
    e[s] = 1.0;
    const Complex gx = (sampler(z + Complex(step, 0) * e) -
                        sampler(z - Complex(step, 0) * e)) /
                       (2.0 * step);
    const Complex gy = (sampler(z + Complex(0, step) * e) -
                        sampler(z - Complex(0, step) * e)) /
                       (2.0 * step);
    worst = std::max(worst, std::abs(0.5 * (gx + Complex(0, 1) * gy)));
  }
  return worst;
}

}  // namespace holex
