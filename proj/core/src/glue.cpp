#include "holex/glue.hpp"

#include <cmath>

#include "holex/jet.hpp"

namespace holex {

Bump::Bump(Frame frame, double radius, int smoothness_order)
    : frame_(std::move(frame)), radius_(radius), profile_(smoothness_order) {
  if (radius <= 0.0) throw HolexError("bump: radius must be positive");
}

double Bump::eval(const CPoint& zeta) const {
  const double q = pseudo_distance(frame_, zeta) / radius_;
  return 1.0 - profile_.eval(2.0 * q - 1.0);
}

Complex Bump::eval_derivative(const CPoint& zeta,
                              const std::vector<int>& alpha,
                              const std::vector<int>& beta) const {
  const int n = static_cast<int>(frame_.p.size());
  if (static_cast<int>(alpha.size()) != n ||
      static_cast<int>(beta.size()) != n)
    throw HolexError("bump: derivative multi-index arity mismatch");
  int order = 0;
  for (int a : alpha) order += a;
  for (int b : beta) order += b;
  if (order > profile_.order())
    throw HolexError("bump: derivative order beyond profile smoothness");
  if (order == 0) return eval(zeta);

  const KoranyiDecomp dec = koranyi_decompose(frame_, zeta);
  const double q0 =
      (std::abs(dec.lambda) + dec.tau.squaredNorm()) / radius_;
  const double u0 = 2.0 * q0 - 1.0;
  if (u0 <= 0.0 || u0 >= 1.0) return 0.0;  // profile locally constant
  if (std::abs(dec.lambda) < 1e-14 * radius_)
    throw HolexError("bump: derivative undefined on the |lambda| = 0 set");

  // Taylor arithmetic in the 2n real coordinates of the frame directions:
  // zeta(x, y) = zeta + sum_a (x_a + i y_a) eps_a.
  const JetSpace space(2 * n, order);
  std::vector<Jet> xi(n, Jet(space));  // zeta(x,y) - center
  const CVector off = zeta - frame_.p;
  for (int j = 0; j < n; ++j) {
    Jet z(space, off[j]);
    for (int a = 0; a < n; ++a) {
      z += Jet::variable(space, 2 * a, 0.0) * frame_.eps[a][j];
      z += Jet::variable(space, 2 * a + 1, 0.0) * (Complex(0, 1) * frame_.eps[a][j]);
    }
    xi[j] = z;
  }
  Jet lambda(space, 0.0), e(space, 0.0);
  for (int j = 0; j < n; ++j) {
    lambda += xi[j] * std::conj(frame_.eta[j]);
    e += xi[j] * xi[j].conjugate();
  }
  const Jet m = lambda * lambda.conjugate();
  const Jet s = m.sqrt_real();
  Jet q = (s + e - m) * Complex(1.0 / radius_);
  // psi = 1 - profile(2 q - 1)
  Jet u = q * Complex(2.0);
  u -= Complex(1.0);
  std::vector<Complex> outer(order + 1);
  for (int d = 0; d <= order; ++d) outer[d] = -profile_.eval(u0, d);
  outer[0] += 1.0;
  const Jet psi = u.compose(outer);

  // Assemble the Wirtinger mixed derivative from real partials:
  // D_a = (dx - i dy)/2, Dbar_a = (dx + i dy)/2 per direction.
  Complex acc = 0.0;
  std::vector<int> real_idx(2 * n, 0);
  auto expand = [&](auto&& self, int dir, int da, int db, Complex coef) -> void {
    if (dir == n) {
      acc += coef * psi.derivative(real_idx);
      return;
    }
    (void)da;
    (void)db;
    const int A = alpha[dir], B = beta[dir];
    auto binom = [](int nn, int kk) {
      double r = 1.0;
      for (int i = 1; i <= kk; ++i) r = r * (nn - kk + i) / i;
      return r;
    };
    for (int i = 0; i <= A; ++i)
      for (int j = 0; j <= B; ++j) {
        // (dx)^{i+j} (dy)^{A-i+B-j} with phases (-i)^{A-i} (+i)^{B-j}
        Complex phase = std::pow(Complex(0, -1), A - i) *
                        std::pow(Complex(0, 1), B - j) * binom(A, i) *
                        binom(B, j) * std::pow(0.5, A + B);
        real_idx[2 * dir] = i + j;
        real_idx[2 * dir + 1] = (A - i) + (B - j);
        self(self, dir + 1, 0, 0, coef * phase);
      }
    real_idx[2 * dir] = 0;
    real_idx[2 * dir + 1] = 0;
  };
  expand(expand, 0, 0, 0, Complex(1.0));
  return acc;
}

GlobalExtension::GlobalExtension(const DefiningFunction& df, double c,
                                 double eps0, std::vector<BallPiece> pieces,
                                 BranchValueFn interior,
                                 const GlueParams& params)
    : df_(&df),
      pieces_(std::move(pieces)),
      interior_bump_(&df,
                     params.interior_start > 0.0 ? params.interior_start
                                                 : eps0 * (1.0 - c),
                     params.interior_full > 0.0 ? params.interior_full
                                                : eps0 * (1.0 + c),
                     params.bump_order),
      interior_(std::move(interior)),
      params_(params) {
  bumps_.reserve(pieces_.size());
  double max_reach = 1e-3;
  for (const BallPiece& p : pieces_) {
    bumps_.emplace_back(p.frame, p.radius, params.bump_order);
    reach_.push_back(p.radius + std::sqrt(p.radius));
    max_reach = std::max(max_reach, reach_.back());
  }
  hash_cell_ = max_reach;
  for (std::size_t b = 0; b < pieces_.size(); ++b)
    hash_[hash_key(pieces_[b].center(), 0, 0, 0, 0)].push_back(
        static_cast<int>(b));
}

std::uint64_t GlobalExtension::hash_key(const CPoint& zeta, int dx0, int dx1,
                                        int dx2, int dx3) const {
  const int off[4] = {dx0, dx1, dx2, dx3};
  std::uint64_t key = 0;
  int d = 0;
  for (Eigen::Index j = 0; j < zeta.size() && d < 4; ++j) {
    for (double x : {zeta[j].real(), zeta[j].imag()}) {
      if (d >= 4) break;
      const auto cell = static_cast<std::int64_t>(
                            std::floor(x / hash_cell_)) +
                        off[d] + 32768;
      key = key * 65599u + static_cast<std::uint64_t>(cell & 0xffff);
      ++d;
    }
  }
  return key;
}

void GlobalExtension::candidate_balls(const CPoint& zeta,
                                      std::vector<int>& out) const {
  out.clear();
  for (int d0 = -1; d0 <= 1; ++d0)
    for (int d1 = -1; d1 <= 1; ++d1)
      for (int d2 = -1; d2 <= 1; ++d2)
        for (int d3 = -1; d3 <= 1; ++d3) {
          auto it = hash_.find(hash_key(zeta, d0, d1, d2, d3));
          if (it == hash_.end()) continue;
          for (int b : it->second)
            if (norm2(zeta - pieces_[b].center()) <= reach_[b])
              out.push_back(b);
        }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

double GlobalExtension::raw_weight(std::size_t j, const CPoint& zeta) const {
  if (j == 0) return interior_bump_.eval(zeta);
  const std::size_t b = j - 1;
  if (norm2(zeta - pieces_[b].center()) > reach_[b]) return 0.0;
  return bumps_[b].eval(zeta);
}

bool GlobalExtension::sparse_weights(
    const CPoint& zeta, std::vector<std::pair<int, double>>& w) const {
  w.clear();
  double total = 0.0;
  const double wi = interior_bump_.eval(zeta);
  if (wi > 0.0) {
    w.emplace_back(0, wi);
    total += wi;
  }
  std::vector<int> cand;
  candidate_balls(zeta, cand);
  for (int b : cand) {
    const double wb = bumps_[b].eval(zeta);
    if (wb > 0.0) {
      w.emplace_back(b + 1, wb);
      total += wb;
    }
  }
  if (total <= 0.0) return false;
  for (auto& [idx, x] : w) x /= total;
  return true;
}

bool GlobalExtension::try_partition_weights(const CPoint& zeta,
                                            std::vector<double>& w) const {
  std::vector<std::pair<int, double>> sw;
  if (!sparse_weights(zeta, sw)) {
    w.assign(pieces_.size() + 1, 0.0);
    return false;
  }
  w.assign(pieces_.size() + 1, 0.0);
  for (const auto& [idx, x] : sw) w[idx] = x;
  return true;
}

std::vector<double> GlobalExtension::partition_weights(const CPoint& zeta) const {
  std::vector<double> w;
  if (!try_partition_weights(zeta, w))
    throw HolexError("partition_weights: point not covered by the partition");
  return w;
}

Complex GlobalExtension::eval(const CPoint& zeta) const {
  std::vector<std::pair<int, double>> sw;
  if (!sparse_weights(zeta, sw))
    throw HolexError("tilde_h: point not covered by the partition");
  Complex acc = 0.0;
  for (const auto& [idx, x] : sw)
    acc += x * (idx == 0 ? interior_(zeta) : pieces_[idx - 1].eval(zeta));
  return acc;
}

Complex GlobalExtension::dbar_frame(const CPoint& zeta,
                                    const std::vector<int>& alpha_bar) const {
  const int n = df_->dim();
  if (static_cast<int>(alpha_bar.size()) != n)
    throw HolexError("dbar_frame: multi-index arity mismatch");
  const Frame fr = frame_at(*df_, zeta);
  const double arho = std::abs(df_->rho(zeta));
  std::vector<double> step(n);
  step[0] = params_.fd_theta * arho;
  for (int a = 1; a < n; ++a) step[a] = params_.fd_theta * std::sqrt(arho);
  for (double h : step)
    if (h < 1e-12)
      throw HolexError("dbar_frame: finite-difference step underflow near bD");

  // Nested central differences; Dbar_a = (d/dx + i d/dy)/2 along eps_a.
  std::function<Complex(const CPoint&, std::vector<int>)> rec =
      [&](const CPoint& at, std::vector<int> idx) -> Complex {
    int dir = -1;
    for (int a = 0; a < n; ++a)
      if (idx[a] > 0) {
        dir = a;
        break;
      }
    if (dir < 0) return eval(at);
    idx[dir] -= 1;
    const double h = step[dir];
    const CVector e = fr.eps[dir];
    const Complex gx = (rec(at + Complex(h, 0) * e, idx) -
                        rec(at - Complex(h, 0) * e, idx)) /
                       (2.0 * h);
    const Complex gy = (rec(at + Complex(0, h) * e, idx) -
                        rec(at - Complex(0, h) * e, idx)) /
                       (2.0 * h);
    return 0.5 * (gx + Complex(0, 1) * gy);
  };
  return rec(zeta, alpha_bar);
}

bool GlobalExtension::fd_stencil_covered(const CPoint& zeta, int order) const {
  std::vector<double> w;
  if (!try_partition_weights(zeta, w)) return false;
  const int n = df_->dim();
  const double arho = std::abs(df_->rho(zeta));
  Frame fr;
  try {
    fr = frame_at(*df_, zeta);
  } catch (const HolexError&) {
    return false;
  }
  for (int a = 0; a < n; ++a) {
    const double h =
        params_.fd_theta * (a == 0 ? arho : std::sqrt(arho)) * order;
    if (h < 1e-12) return false;
    for (Complex off : {Complex(h, 0), Complex(-h, 0), Complex(0, h),
                        Complex(0, -h)}) {
      if (!try_partition_weights(zeta + off * fr.eps[a], w)) return false;
      if (!try_partition_weights(zeta + 0.5 * off * fr.eps[a], w))
        return false;
    }
  }
  return true;
}

CVector GlobalExtension::dbar_coordinates(const CPoint& zeta) const {
  const int n = df_->dim();
  const Frame fr = frame_at(*df_, zeta);
  CVector frame_d(n);
  for (int a = 0; a < n; ++a) {
    std::vector<int> idx(n, 0);
    idx[a] = 1;
    frame_d[a] = dbar_frame(zeta, idx);
  }
  CVector out(n);
  for (int s = 0; s < n; ++s) {
    CVector es = CVector::Zero(n);
    es[s] = 1.0;
    Complex acc = 0.0;
    for (int a = 0; a < n; ++a) acc += std::conj(hdot(es, fr.eps[a])) * frame_d[a];
    out[s] = acc;
  }
  return out;
}

}  // namespace holex
