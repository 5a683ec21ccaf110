#include "holex/covering.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <functional>

#include "holex/rng.hpp"

namespace holex {

void CoverParams::validate(int n) const {
  if (!(c > 0.0 && c < 0.25)) throw HolexError("cover: need 0 < c < 1/4");
  if (!(kappa > 0.0)) throw HolexError("cover: need kappa > 0");
  if (!(c * kappa < 1.0)) throw HolexError("cover: need c*kappa < 1");
  if (!(eps0 > 0.0)) throw HolexError("cover: need eps0 > 0");
  if (candidate_budget < 1) throw HolexError("cover: empty candidate budget");
  if (level_floor <= 0.0) throw HolexError("cover: need level_floor > 0");
  if (box_min.size() != static_cast<std::size_t>(2 * n) ||
      box_max.size() != box_min.size())
    throw HolexError("cover: region box has wrong arity");
  for (std::size_t i = 0; i < box_min.size(); ++i)
    if (!(box_min[i] < box_max[i])) throw HolexError("cover: empty region box");
}

bool CoverParams::in_box(const CPoint& z) const {
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double re = z[j].real(), im = z[j].imag();
    if (re < box_min[2 * j] || re > box_max[2 * j]) return false;
    if (im < box_min[2 * j + 1] || im > box_max[2 * j + 1]) return false;
  }
  return true;
}

double Covering::layer_level(int k) const {
  return std::pow(1.0 - params.c * params.kappa, k) * params.eps0;
}

double Covering::layer_separation(int k) const {
  return params.c * params.kappa * layer_level(k);
}

namespace {

/// Newton projection of z onto {rho = t} along the real gradient direction.
bool project_to_level(const DefiningFunction& df, double t, CPoint& z,
                      double tol) {
  for (int it = 0; it < 60; ++it) {
    const double r = df.rho(z);
    if (std::abs(r - t) <= tol) return true;
    const CVector g = df.grad(z);
    const double gn = norm2(g);
    if (gn < 1e-9) return false;
    // d/ds rho(z + s u) = 2|grad| for u = conj(grad)/|grad|.
    z += ((t - r) / (2.0 * gn)) * (g.conjugate() / gn);
  }
  return false;
}

CPoint sample_box(const CoverParams& p, int n, Rng& rng) {
  CPoint z(n);
  for (int j = 0; j < n; ++j)
    z[j] = Complex(rng.uniform(p.box_min[2 * j], p.box_max[2 * j]),
                   rng.uniform(p.box_min[2 * j + 1], p.box_max[2 * j + 1]));
  return z;
}

}  // namespace

Covering build_covering(const DefiningFunction& df, const CoverParams& params) {
  const int n = df.dim();
  params.validate(n);

  Covering cov;
  cov.dim = n;
  cov.params = params;

  Rng rng(params.seed);
  int projection_failures = 0, projection_attempts = 0;

  for (int k = 0; k < params.max_layers; ++k) {
    const double level = cov.layer_level(k);
    if (level < params.level_floor) break;
    const double t = -level;
    const double sep = cov.layer_separation(k);

    // Candidate set for this layer, in seeded deterministic order.
    std::vector<CPoint> candidates;
    std::vector<Frame> frames;
    for (int i = 0; i < params.candidate_budget; ++i) {
      CPoint z = sample_box(params, n, rng);
      ++projection_attempts;
      if (!project_to_level(df, t, z, params.level_tol)) {
        ++projection_failures;
        continue;
      }
      if (!params.in_box(z)) continue;
      candidates.push_back(std::move(z));
    }
    frames.reserve(candidates.size());
    for (const CPoint& z : candidates) frames.push_back(frame_at(df, z));

    // Greedy selection; accepted centers are bucketed on a euclidean grid so
    // each candidate only checks its neighborhood (delta >= sep forces
    // euclidean distance >= sep / 2, and delta < sep implies euclidean
    // distance < sep + sqrt(sep)).
    const double cell = sep + std::sqrt(sep);
    auto cell_key = [&](const CPoint& z, int d0, int d1, int d2, int d3) {
      const int off[4] = {d0, d1, d2, d3};
      std::uint64_t key = 0;
      int d = 0;
      for (Eigen::Index j = 0; j < z.size() && d < 4; ++j)
        for (double x : {z[j].real(), z[j].imag()}) {
          if (d >= 4) break;
          const auto c =
              static_cast<std::int64_t>(std::floor(x / cell)) + off[d] + 32768;
          key = key * 65599u + static_cast<std::uint64_t>(c & 0xffff);
          ++d;
        }
      return key;
    };
    std::unordered_map<std::uint64_t, std::vector<int>> buckets;
    std::vector<int> chosen;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      bool ok = true;
      for (int d0 = -1; d0 <= 1 && ok; ++d0)
        for (int d1 = -1; d1 <= 1 && ok; ++d1)
          for (int d2 = -1; d2 <= 1 && ok; ++d2)
            for (int d3 = -1; d3 <= 1 && ok; ++d3) {
              auto it = buckets.find(cell_key(candidates[i], d0, d1, d2, d3));
              if (it == buckets.end()) continue;
              for (int j : it->second)
                if (pseudo_distance(frames[i], candidates[j]) < sep ||
                    pseudo_distance(frames[j], candidates[i]) < sep) {
                  ok = false;
                  break;
                }
            }
      if (ok) {
        buckets[cell_key(candidates[i], 0, 0, 0, 0)].push_back(
            static_cast<int>(i));
        chosen.push_back(static_cast<int>(i));
      }
    }
    for (int i : chosen) {
      CoverEntry e;
      e.center = candidates[i];
      e.layer = k;
      e.level = t;
      e.radius = params.c * std::abs(df.rho(candidates[i]));
      cov.entries.push_back(std::move(e));
    }
  }

  if (cov.entries.empty()) {
    if (projection_attempts > 0 && projection_failures == projection_attempts)
      throw HolexError("build_covering: level-set projection failed for every candidate");
    throw HolexError("build_covering: region does not meet the shell");
  }
  return cov;
}

namespace {

/// Streams the deterministic boundary mesh of P_r(center) into `fn`; stops
/// early when fn returns true.
bool ball_boundary_mesh(const Frame& f, double r, int phases,
                        const std::function<bool(const CPoint&)>& fn) {
  const int n = static_cast<int>(f.eps.size());
  CPoint z(f.p.size());
  for (double a : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const double b = 1.0 - a;
    for (int ip = 0; ip < phases; ++ip) {
      const double th = 2.0 * kPi * ip / phases;
      const Complex ln = a * r * Complex(std::cos(th), std::sin(th));
      for (int d = 1; d < n; ++d) {
        for (int jp = 0; jp < phases; ++jp) {
          const double ph = 2.0 * kPi * jp / phases;
          z = f.p + ln * f.eta;
          if (b > 0.0)
            z += std::sqrt(b * r) * Complex(std::cos(ph), std::sin(ph)) *
                 f.eps[d];
          if (fn(z)) return true;
          if (b == 0.0) break;
        }
        if (b == 0.0) break;
      }
      if (a == 0.0) break;  // the normal phase is redundant at lambda = 0
    }
  }
  return false;
}

}  // namespace

CoveringIndex::CoveringIndex(const DefiningFunction& df, const Covering& cov,
                             double inflate_cap)
    : cov_(&cov), df_(&df) {
  frames_.reserve(cov.entries.size());
  double max_reach = 1e-6;
  for (const CoverEntry& e : cov.entries) {
    frames_.push_back(frame_at(df, e.center));
    const double r = inflate_cap * e.radius;
    reach_.push_back(r + std::sqrt(r));
    max_reach = std::max(max_reach, reach_.back());
  }
  cell_ = max_reach;
  for (std::size_t i = 0; i < cov.entries.size(); ++i)
    buckets_[key(cov.entries[i].center, 0, 0, 0, 0)].push_back(
        static_cast<int>(i));
}

std::uint64_t CoveringIndex::key(const CPoint& z, int d0, int d1, int d2,
                                 int d3) const {
  const int off[4] = {d0, d1, d2, d3};
  std::uint64_t k = 0;
  int d = 0;
  for (Eigen::Index j = 0; j < z.size() && d < 4; ++j)
    for (double x : {z[j].real(), z[j].imag()}) {
      if (d >= 4) break;
      const auto c =
          static_cast<std::int64_t>(std::floor(x / cell_)) + off[d] + 32768;
      k = k * 65599u + static_cast<std::uint64_t>(c & 0xffff);
      ++d;
    }
  return k;
}

void CoveringIndex::candidates(const CPoint& z, double inflate,
                               std::vector<int>& out) const {
  out.clear();
  for (int d0 = -1; d0 <= 1; ++d0)
    for (int d1 = -1; d1 <= 1; ++d1)
      for (int d2 = -1; d2 <= 1; ++d2)
        for (int d3 = -1; d3 <= 1; ++d3) {
          auto it = buckets_.find(key(z, d0, d1, d2, d3));
          if (it == buckets_.end()) continue;
          for (int b : it->second) {
            const double r = inflate * cov_->entries[b].radius;
            if (norm2(z - cov_->entries[b].center) <= r + std::sqrt(r))
              out.push_back(b);
          }
        }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

bool CoveringIndex::covers(const CPoint& z, double inflate) const {
  std::vector<int> cand;
  candidates(z, inflate, cand);
  for (int b : cand)
    if (pseudo_distance(frames_[b], z) < inflate * cov_->entries[b].radius)
      return true;
  return false;
}

int overlap_count(const CoveringIndex& index, const CPoint& z,
                  double inflation, int mesh_phases) {
  const Covering& cov = index.covering();
  if (cov.entries.empty()) return 0;
  const DefiningFunction& df = index.domain();
  const Frame fz = frame_at(df, z);
  const double rz = inflation * std::abs(df.rho(z));
  const double z_reach = rz + std::sqrt(rz);

  int count = 0;
  for (std::size_t b = 0; b < cov.entries.size(); ++b) {
    const CoverEntry& e = cov.entries[b];
    const double rj = inflation * std::abs(df.rho(e.center));
    if (norm2(e.center - z) > z_reach + rj + std::sqrt(rj)) continue;
    const Frame& fj = index.frame(b);
    bool meet =
        pseudo_distance(fz, e.center) < rz || pseudo_distance(fj, z) < rj;
    if (!meet)
      meet = ball_boundary_mesh(fz, rz, mesh_phases, [&](const CPoint& m) {
        return pseudo_distance(fj, m) < rj;
      });
    if (!meet)
      meet = ball_boundary_mesh(fj, rj, mesh_phases, [&](const CPoint& m) {
        return pseudo_distance(fz, m) < rz;
      });
    count += meet;
  }
  return count;
}

int overlap_count(const DefiningFunction& df, const Covering& cov,
                  const CPoint& z, double inflation, int mesh_phases) {
  const CoveringIndex index(df, cov, inflation);
  return overlap_count(index, z, inflation, mesh_phases);
}

RenumberGroups renumber_around(const DefiningFunction& df, const Covering& cov,
                               const CPoint& z) {
  RenumberGroups out;
  const double q = 1.0 - cov.params.c * cov.params.kappa;
  const double rho_z = std::abs(df.rho(z));
  // j0 with q^{j0} eps0 >= |rho(z)| > q^{j0+1} eps0.
  out.j0 = static_cast<int>(std::floor(std::log(rho_z / cov.params.eps0) /
                                       std::log(q)));
  const Frame fz = frame_at(df, z);
  for (std::size_t m = 0; m < cov.entries.size(); ++m) {
    const CoverEntry& e = cov.entries[m];
    const double d = pseudo_distance(df, e.center, z);
    if (d > cov.params.eps0) continue;
    const double width = cov.params.c * cov.layer_level(e.layer);
    const int i = static_cast<int>(std::floor(d / width));
    out.groups[{i, e.layer + out.j0}].push_back(static_cast<int>(m));
  }
  return out;
}

void write_covering(std::ostream& out, const Covering& cov) {
  char buf[512];
  out << "covering 1\n";
  out << "dim " << cov.dim << "\n";
  std::snprintf(buf, sizeof buf, "c %.17g\nkappa %.17g\neps0 %.17g\n",
                cov.params.c, cov.params.kappa, cov.params.eps0);
  out << buf << "seed " << cov.params.seed << "\n";
  out << "entries " << cov.entries.size() << "\n";
  for (const CoverEntry& e : cov.entries) {
    std::snprintf(buf, sizeof buf, "entry %d %.17g %.17g", e.layer, e.level,
                  e.radius);
    out << buf;
    for (Eigen::Index j = 0; j < e.center.size(); ++j) {
      std::snprintf(buf, sizeof buf, " %.17g %.17g", e.center[j].real(),
                    e.center[j].imag());
      out << buf;
    }
    out << "\n";
  }
}

Covering read_covering(std::istream& in) {
  Covering cov;
  std::string line, tag;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    if (!(ls >> tag)) continue;
    if (tag == "covering") {
      int v;
      if (!(ls >> v) || v != 1) throw HolexError("covering file: bad version");
    } else if (tag == "dim") {
      ls >> cov.dim;
    } else if (tag == "c") {
      ls >> cov.params.c;
    } else if (tag == "kappa") {
      ls >> cov.params.kappa;
    } else if (tag == "eps0") {
      ls >> cov.params.eps0;
    } else if (tag == "seed") {
      ls >> cov.params.seed;
    } else if (tag == "entries") {
      ls >> expected;
    } else if (tag == "entry") {
      CoverEntry e;
      if (!(ls >> e.layer >> e.level >> e.radius))
        throw HolexError("covering file: bad entry line");
      e.center = CPoint(cov.dim);
      for (int j = 0; j < cov.dim; ++j) {
        double re, im;
        if (!(ls >> re >> im)) throw HolexError("covering file: short entry");
        e.center[j] = Complex(re, im);
      }
      cov.entries.push_back(std::move(e));
    } else {
      throw HolexError("covering file: unknown tag '" + tag + "'");
    }
  }
  if (cov.dim < 2) throw HolexError("covering file: missing dim");
  if (cov.entries.size() != expected)
    throw HolexError("covering file: entry count mismatch");
  return cov;
}

}  // namespace holex
