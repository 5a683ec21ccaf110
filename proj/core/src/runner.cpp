#include "holex/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "holex/rng.hpp"

namespace holex {

namespace fs = std::filesystem;

namespace {

std::ofstream open_artifact(const std::string& out_dir,
                            const std::string& name) {
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / name, std::ios::binary);
  if (!f) throw HolexError("runner: cannot write artifact " + name);
  return f;
}

std::string artifact_path(const std::string& out_dir, const std::string& name) {
  return (fs::path(out_dir) / name).string();
}

void csv_row(std::ofstream& f, const std::vector<double>& vals) {
  char buf[64];
  for (std::size_t i = 0; i < vals.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", vals[i]);
    f << (i ? "," : "") << buf;
  }
  f << "\n";
}

/// Seeded ray directions biased toward the covering region's center, so
/// boundary rays stay inside patch regions.
std::vector<CVector> region_ray_directions(const ScenarioConfig& cfg, int count,
                                           std::uint64_t seed) {
  CVector center(cfg.dim);
  for (int j = 0; j < cfg.dim; ++j)
    center[j] = Complex(
        0.5 * (cfg.cover.box_min[2 * j] + cfg.cover.box_max[2 * j]),
        0.5 * (cfg.cover.box_min[2 * j + 1] + cfg.cover.box_max[2 * j + 1]));
  Rng rng(seed);
  std::vector<CVector> dirs;
  const bool centered = norm2(center) < 0.2;  // full-domain region
  for (int i = 0; i < count; ++i) {
    CVector v = rng.unit_vector(cfg.dim);
    if (!centered) v = center / norm2(center) + 0.25 * v;
    dirs.push_back(v / norm2(v));
  }
  return dirs;
}

}  // namespace

Pipeline make_pipeline(const ScenarioConfig& cfg) {
  cfg.validate();
  Pipeline p;
  p.cfg = cfg;
  p.df = cfg.make_domain();
  p.h = cfg.make_h();
  p.h_sup = cfg.h_sup_estimate();
  if (cfg.jet_order > 0) {
    p.k = cfg.jet_order;
  } else {
    // k = maximal branch multiplicity of X (order of its singularities).
    p.k = 1;
    if (cfg.locus.kind == SingularLocus::Kind::Points) {
      for (const CPoint& s : cfg.locus.points) {
        const Frame fr = frame_at(p.df, s);
        p.k = std::max(p.k, multiplicity_at(cfg.f, s, fr.w));
      }
    }
  }
  return p;
}

void stage_cover(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  p.covering = build_covering(p.df, cfg.cover);
  const Covering& cov = *p.covering;

  {
    auto f = open_artifact(out_dir, "covering.txt");
    write_covering(f, cov);
  }
  rep.add_value("cover.entries", static_cast<double>(cov.entries.size()));
  rep.add_note("cover.file_hash",
               hash_file(artifact_path(out_dir, "covering.txt")));

  // (seqi) level residuals and the exact-radius invariant.
  double level_res = 0.0, radius_res = 0.0;
  for (const CoverEntry& e : cov.entries) {
    level_res = std::max(level_res, std::abs(p.df.rho(e.center) - e.level));
    radius_res = std::max(
        radius_res,
        std::abs(e.radius - cfg.cover.c * std::abs(p.df.rho(e.center))) /
            e.radius);
  }
  rep.add_check("cover.level_residual", level_res, 2.0 * cfg.cover.level_tol,
                level_res <= 2.0 * cfg.cover.level_tol);
  rep.add_check("cover.radius_consistency", radius_res, 1e-12,
                radius_res <= 1e-12);

  const CoveringIndex index(p.df, cov, std::max(1.0, cfg.cover.kappa));

  // (seqii) pairwise separation within layers, both orders of delta.
  double min_sep_ratio = 2.0;
  {
    std::vector<int> cand;
    for (std::size_t i = 0; i < cov.entries.size(); ++i) {
      index.candidates(cov.entries[i].center, std::max(1.0, cfg.cover.kappa),
                       cand);
      for (int j : cand) {
        if (j <= static_cast<int>(i)) continue;
        if (cov.entries[i].layer != cov.entries[j].layer) continue;
        const double sep = cov.layer_separation(cov.entries[i].layer);
        const double dij =
            pseudo_distance(index.frame(i), cov.entries[j].center) / sep;
        const double dji =
            pseudo_distance(index.frame(j), cov.entries[i].center) / sep;
        min_sep_ratio = std::min({min_sep_ratio, dij, dji});
      }
    }
  }
  rep.add_check("cover.separation_ratio", min_sep_ratio, 1.0,
                min_sep_ratio >= 1.0 - 1e-12);

  // Coverage of the layer level sets, sampled inside the (margin-shrunken)
  // region box.
  {
    Rng rng(cfg.seed + 17);
    // Edge slivers of patch regions lose their balls to the box cut; claims
    // hold a tangential reach away from the edge. Full-domain boxes need no
    // margin.
    bool full_box = true;
    const double rb = p.df.bounding_radius();
    for (std::size_t d = 0; d < cfg.cover.box_min.size(); ++d)
      full_box = full_box && cfg.cover.box_min[d] <= -rb &&
                 cfg.cover.box_max[d] >= rb;
    const double margin =
        full_box ? 0.0 : std::sqrt(cfg.cover.c * cfg.cover.eps0);
    int covered = 0, total = 0;
    const int max_layer = cov.entries.back().layer;
    CVector box_center(cfg.dim);
    for (int j = 0; j < cfg.dim; ++j)
      box_center[j] = Complex(
          0.5 * (cfg.cover.box_min[2 * j] + cfg.cover.box_max[2 * j]),
          0.5 * (cfg.cover.box_min[2 * j + 1] + cfg.cover.box_max[2 * j + 1]));
    const bool biased = !full_box && norm2(box_center) > 0.2;
    for (int s = 0; s < cfg.coverage_samples; ++s) {
      const int layer = static_cast<int>(rng.uniform() * (max_layer + 1));
      const double t = -cov.layer_level(layer);
      CVector xi = rng.unit_vector(cfg.dim);
      if (biased) {
        xi += 3.0 * box_center / norm2(box_center);
        xi /= norm2(xi);
      }
      CPoint z;
      try {
        z = p.df.level_radius(xi, t) * xi;
      } catch (const HolexError&) {
        continue;
      }
      bool inside_box = cfg.cover.in_box(z);
      for (Eigen::Index j = 0; j < z.size() && inside_box; ++j)
        inside_box = z[j].real() > cfg.cover.box_min[2 * j] + margin &&
                     z[j].real() < cfg.cover.box_max[2 * j] - margin &&
                     z[j].imag() > cfg.cover.box_min[2 * j + 1] + margin &&
                     z[j].imag() < cfg.cover.box_max[2 * j + 1] - margin;
      if (!inside_box) continue;
      ++total;
      covered += index.covers(z);
    }
    const double frac = total > 0 ? static_cast<double>(covered) / total : 0.0;
    rep.add_value("cover.coverage_samples", total);
    rep.add_check("cover.coverage", frac, cfg.coverage_min,
                  total > 0 && frac >= cfg.coverage_min);
  }

  // Determinism: rebuilding with the same seed is byte-identical.
  if (cov.entries.size() <= 3000) {
    const Covering again = build_covering(p.df, cfg.cover);
    std::ostringstream a, b;
    write_covering(a, cov);
    write_covering(b, again);
    const bool same = a.str() == b.str();
    rep.add_check("cover.deterministic", same ? 1.0 : 0.0, 1.0, same);
  }
}

void stage_classify(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  if (!p.covering) throw HolexError("classify: missing covering artifact");
  const Covering& cov = *p.covering;

  p.classes.clear();
  p.classes.reserve(cov.entries.size());
  for (const CoverEntry& e : cov.entries)
    p.classes.push_back(
        classify_point(cfg.f, p.df, e.center, cfg.classify, cfg.locus));

  {
    auto f = open_artifact(out_dir, "classify.csv");
    f << "index,layer,regime,j_count,sing_dist,roots\n";
    for (std::size_t i = 0; i < p.classes.size(); ++i) {
      const Classification& c = p.classes[i];
      f << i << "," << cov.entries[i].layer << ","
        << (c.regime == Regime::NearSing
                ? "near_sing"
                : (c.regime == Regime::Far ? "far" : "no_variety"))
        << "," << c.j_count << ",";
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g",
                    std::isfinite(c.sing_dist) ? c.sing_dist : -1.0);
      f << buf << "," << c.primary.roots.size() << "\n";
    }
  }
  rep.add_note("classify.file_hash",
               hash_file(artifact_path(out_dir, "classify.csv")));

  int near = 0, far = 0, none = 0;
  for (const Classification& c : p.classes) {
    near += c.regime == Regime::NearSing;
    far += c.regime == Regime::Far;
    none += c.regime == Regime::NoVariety;
  }
  rep.add_value("classify.near_sing", near);
  rep.add_value("classify.far", far);
  rep.add_value("classify.no_variety", none);

  // Close-branch displacement lands in the inflated ball (Cor 2.5 proxy).
  {
    const double lam = 5.0 * cfg.cover.c * std::pow(cfg.classify.metric_C, 4);
    double worst = 0.0;
    int checked = 0;
    for (std::size_t i = 0; i < p.classes.size() && checked < 200; ++i) {
      const Classification& c = p.classes[i];
      if (c.primary.empty()) continue;
      const CPoint& center = cov.entries[i].center;
      const Frame fr = frame_at(p.df, center);
      const double inflated = lam * std::abs(p.df.rho(center));
      for (const BranchRoot& r : c.primary.roots) {
        if (!r.close) continue;
        const CPoint displaced = c.primary.base + r.t * c.primary.dir;
        worst = std::max(worst, pseudo_distance(fr, displaced) / inflated);
        ++checked;
      }
    }
    if (checked > 0)
      rep.add_check("classify.close_displacement", worst, 1.0, worst <= 1.0);
  }

  // Stability of regime and #J under a perturbed confluence tolerance.
  {
    Rng rng(cfg.seed + 23);
    int same = 0, tried = 0;
    for (int s = 0; s < 25 && s < static_cast<int>(cov.entries.size()); ++s) {
      const std::size_t i =
          static_cast<std::size_t>(rng.uniform() * cov.entries.size());
      ClassifyParams tweaked = cfg.classify;
      tweaked.probe_lambda_phases += 2;  // denser probe set
      const Classification redo =
          classify_point(cfg.f, p.df, cov.entries[i].center, tweaked, cfg.locus);
      ++tried;
      same += (redo.regime == p.classes[i].regime &&
               redo.j_count == p.classes[i].j_count);
    }
    const double frac = tried ? static_cast<double>(same) / tried : 1.0;
    rep.add_check("classify.stability", frac, 1.0, frac >= 0.99);
  }
}

void stage_extend(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  if (!p.covering) throw HolexError("extend: missing covering artifact");
  if (p.classes.size() != p.covering->entries.size())
    throw HolexError("extend: missing classification artifact");

  std::vector<BallPiece> pieces;
  // Node-search disc per slice: wider than the classification window so the
  // close branches of every slice of the ball stay inside it.
  const double disc_factor =
      std::max(5.0, 2.5 * cfg.classify.probe_radius_factor *
                        cfg.classify.metric_C * cfg.classify.metric_C);
  for (std::size_t i = 0; i < p.covering->entries.size(); ++i) {
    const CoverEntry& e = p.covering->entries[i];
    const Classification& c = p.classes[i];
    BallPiece bp;
    bp.frame = frame_at(p.df, e.center);
    bp.radius = e.radius;
    bp.regime = c.regime;
    bp.j_count = c.j_count;
    bp.fallback = p.h;
    if (c.j_count > 0)
      bp.interp.emplace(cfg.f, p.df, e.center, c, p.h, cfg.cover.c,
                        disc_factor);
    pieces.push_back(std::move(bp));
  }
  p.ext = std::make_shared<GlobalExtension>(p.df, cfg.cover.c, cfg.cover.eps0,
                                            std::move(pieces), p.h, cfg.glue);

  // Extension property on X.
  {
    const auto xs = sample_variety_points(cfg.f, p.df, -cfg.ext_rho_hi,
                                          -cfg.ext_rho_lo, 100, cfg.seed + 31);
    double worst = 0.0;
    int used = 0;
    std::vector<double> w;
    for (const CPoint& x : xs) {
      if (!p.ext->try_partition_weights(x, w)) continue;
      ++used;
      worst = std::max(worst, std::abs(p.ext->eval(x) - p.h(x)));
    }
    if (used == 0) throw HolexError("extend: no covered on-X samples");
    const double tol = 1e-8 * (1.0 + p.h_sup);
    rep.add_value("extend.on_x_samples", used);
    rep.add_check("extend.on_x_match", worst, tol, worst <= tol);
  }

  // Theorem-style hypothesis checks on tilde_h.
  Th0Params tp = cfg.th0;
  tp.k = p.k;
  tp.ray_dirs = region_ray_directions(cfg, 4 * tp.ray_count, cfg.seed + 39);
  const Th0Report th0 = th0_hypothesis_check(*p.ext, cfg.f, tp);
  rep.add_check(th0.vanishing);
  rep.add_check(th0.weighted_lq);
  rep.add_check(th0.on_x);

  // Sampled tilde_h table.
  {
    auto f = open_artifact(out_dir, "tilde_h_samples.csv");
    f << "re1,im1,re2,im2,rho,tilde_re,tilde_im,dbar1_abs,dbar2_abs\n";
    const auto dirs = region_ray_directions(cfg, 24, cfg.seed + 37);
    for (const CVector& xi : dirs) {
      for (double t : {-0.6, -0.3, -0.18, -0.12, -0.08}) {
        CPoint z;
        try {
          z = p.df.level_radius(xi, t) * xi;
        } catch (const HolexError&) {
          continue;
        }
        if (!p.ext->fd_stencil_covered(z, 1)) continue;
        const Complex v = p.ext->eval(z);
        std::vector<int> a1{1, 0}, a2{0, 1};
        csv_row(f, {z[0].real(), z[0].imag(), z[1].real(), z[1].imag(),
                    p.df.rho(z), v.real(), v.imag(),
                    std::abs(p.ext->dbar_frame(z, a1)),
                    std::abs(p.ext->dbar_frame(z, a2))});
      }
    }
  }
}

void stage_kernel_check(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  (void)out_dir;
  const int n = cfg.dim;
  Rng rng(cfg.seed + 41);
  auto domain_point = [&](double depth_lo, double depth_hi) {
    const CVector dir = rng.unit_vector(n);
    return CPoint(p.df.level_radius(dir, -rng.uniform(depth_lo, depth_hi)) *
                  dir);
  };

  // Hefer decomposition: exact identity and jet order.
  p.hefer = hefer_jet(cfg.f, p.k);
  {
    // Polynomial-level identity: sum b_j (z_j - zeta_j) - (f(z) - f(zeta)).
    MultiPoly resid(2 * n);
    for (int j = 0; j < n; ++j) {
      MultiPoly lin(2 * n);
      std::vector<int> ez(2 * n, 0), ezeta(2 * n, 0);
      ez[n + j] = 1;
      ezeta[j] = 1;
      lin.add_term(ez, 1.0);
      lin.add_term(ezeta, -1.0);
      resid += p.hefer->coeffs[j] * lin;
    }
    for (const auto& [e, c] : cfg.f.terms()) {
      std::vector<int> z_e(2 * n, 0), zeta_e(2 * n, 0);
      for (int l = 0; l < n; ++l) {
        z_e[n + l] = e[l];
        zeta_e[l] = e[l];
      }
      resid.add_term(z_e, -c);
      resid.add_term(zeta_e, c);
    }
    const double scale = 1.0 + cfg.f.coeff_scale();
    rep.add_check("kernel.hefer_poly_identity", resid.coeff_scale(),
                  1e-12 * scale, resid.coeff_scale() <= 1e-12 * scale);
  }
  {
    double worst = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const CPoint zeta = domain_point(0.01, 0.95);
      const CPoint z = domain_point(0.01, 0.95);
      const CVector b = p.hefer->eval(zeta, z);
      Complex lhs = 0.0;
      for (int j = 0; j < n; ++j) lhs += b[j] * (z[j] - zeta[j]);
      const Complex fz = cfg.f.eval(z), fz0 = cfg.f.eval(zeta);
      worst = std::max(worst, std::abs(lhs - (fz - fz0)) /
                                  (1.0 + std::abs(fz) + std::abs(fz0)));
    }
    rep.add_check("kernel.hefer_identity", worst, cfg.hefer_tol,
                  worst <= cfg.hefer_tol);
  }
  {
    // Remainder b - jet scales like |z - zeta|^{k+1}.
    const auto jets = hefer_jet_truncation(cfg.f, p.k);
    CPoint zeta(n);
    zeta[0] = Complex(0.41, 0.12);
    zeta[1] = Complex(-0.33, 0.27);
    CVector dir = rng.unit_vector(n);
    std::vector<double> logs;
    for (int m = 3; m <= 10; ++m) {
      const double r = std::pow(2.0, -m);
      const CPoint z = zeta + r * dir;
      CVector both(2 * n);
      both.head(n) = zeta;
      both.tail(n) = z;
      double rem = 0.0;
      const CVector b = p.hefer->eval(zeta, z);
      for (int j = 0; j < n; ++j)
        rem = std::max(rem, std::abs(b[j] - jets[j].eval(both)));
      logs.push_back(std::log2(std::max(rem, 1e-300)));
    }
    double max_rem = 0.0;
    for (double lg : logs) max_rem = std::max(max_rem, std::exp2(lg));
    if (max_rem <= 1e-13 * (1.0 + cfg.f.coeff_scale())) {
      // remainder vanishes identically (f of degree <= k+1): exact jet
      rep.add_value("kernel.jet_slope", 0.0);
      rep.add_check("kernel.jet_order", 0.0, 0.2, true);
    } else {
      // least-squares slope of log2(remainder) against m
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < logs.size(); ++i) {
        const double x = 3.0 + i;
        sx += x;
        sy += logs[i];
        sxx += x * x;
        sxy += x * logs[i];
      }
      const double slope =
          -(logs.size() * sxy - sx * sy) / (logs.size() * sxx - sx * sx);
      const double expected = p.k + 1.0;
      const double relerr = std::abs(slope - expected) / expected;
      rep.add_value("kernel.jet_slope", slope);
      rep.add_check("kernel.jet_order", relerr, 0.2, relerr <= 0.2);
    }
  }

  // Support function: beta positivity and the exact ball identity.
  {
    // The corrected-sign inequality lives on the Levi polynomial itself:
    // 2 Re F <= rho(z) - rho(zeta) - 2 beta |zeta - z|^2.
    double beta = 1e300, ball_identity = 0.0;
    for (int s = 0; s < 10000; ++s) {
      const CPoint zeta = domain_point(0.005, 0.6);
      const CPoint z = domain_point(0.005, 0.6);
      if (norm2(z - zeta) < 1e-6) continue;
      const Complex f_levi = levi_polynomial(p.df, zeta, z);
      const double rho_d = p.df.rho(z) - p.df.rho(zeta);
      const double dist2 = (z - zeta).squaredNorm();
      beta = std::min(beta,
                      (rho_d - 2.0 * std::real(f_levi)) / (2.0 * dist2));
      if (cfg.domain_family == "unit-ball")
        ball_identity = std::max(
            ball_identity,
            std::abs(2.0 * std::real(f_levi) - (rho_d - dist2)));
    }
    rep.add_value("kernel.support_beta", beta);
    rep.add_check("kernel.support_beta_positive", beta, 0.0, beta > 0.0);
    if (cfg.domain_family == "unit-ball")
      rep.add_check("kernel.ball_levi_identity", ball_identity, 1e-12,
                    ball_identity <= 1e-12);
  }

  // dbar G matrix against central finite differences of g_a / rho.
  {
    KernelContext ctx;
    ctx.df = &p.df;
    ctx.weight_power = cfg.weight_power;
    ctx.denominator_floor = cfg.denominator_floor;
    ctx.quad = cfg.kernel_quad;
    double worst = 0.0;
    for (int s = 0; s < 100; ++s) {
      const CPoint zeta = domain_point(0.05, 0.55);
      const CPoint z = domain_point(0.05, 0.55);
      const KernelValue kv = ba_kernel_eval(ctx, zeta, z, n);
      if (kv.outside || kv.floor_breach) continue;
      for (int a = 0; a < n; ++a)
        for (int e = 0; e < n; ++e) {
          auto ga_over_rho = [&](const CPoint& q) {
            const SupportValue sv = support_function(p.df, q, z);
            return sv.coeffs[a] / p.df.rho(q);
          };
          CVector dir = CVector::Zero(n);
          dir[e] = 1.0;
          auto dbar_fd_at = [&](double h) {
            const Complex gx = (ga_over_rho(zeta + Complex(h, 0) * dir) -
                                ga_over_rho(zeta - Complex(h, 0) * dir)) /
                               (2.0 * h);
            const Complex gy = (ga_over_rho(zeta + Complex(0, h) * dir) -
                                ga_over_rho(zeta - Complex(0, h) * dir)) /
                               (2.0 * h);
            return 0.5 * (gx + Complex(0, 1) * gy);
          };
          // Richardson pair kills the h^2 truncation of the oracle
          const Complex fd =
              (4.0 * dbar_fd_at(5e-6) - dbar_fd_at(1e-5)) / 3.0;
          worst = std::max(worst, std::abs(fd - kv.m(a, e)) /
                                      (1.0 + std::abs(kv.m(a, e))));
        }
    }
    rep.add_check("kernel.m_matrix_fd", worst, 1e-7, worst <= 1e-7);
  }

  // Calibration and the reproducing property.
  {
    KernelContext ctx;
    ctx.df = &p.df;
    ctx.weight_power = cfg.weight_power;
    ctx.denominator_floor = cfg.denominator_floor;
    ctx.quad = cfg.kernel_quad;
    CPoint probe = CPoint::Zero(n);
    probe[0] = std::sqrt(1.0 - cfg.repro_probe_rho);  // rho = -repro_probe_rho
    const Complex c_const = calibrate_constant(ctx, probe);
    rep.add_value("kernel.C_re", c_const.real());
    rep.add_value("kernel.C_im", c_const.imag());
    {
      auto one = [](const CPoint&) { return Complex(1.0); };
      const Complex back = kernel_reproduce(ctx, one, probe);
      rep.add_check("kernel.calibration_residual", std::abs(back - 1.0), 1e-10,
                    std::abs(back - 1.0) <= 1e-10);
    }
    {
      CPoint probe2(n);
      probe2[0] = Complex(0.1, 0.25);
      probe2[1] = Complex(-0.35, 0.4);
      KernelContext ctx2 = ctx;
      ctx2.constant = 1.0;
      const Complex c2 = calibrate_constant(ctx2, probe2);
      const double drift = std::abs(c2 / c_const - 1.0);
      rep.add_check("kernel.calibration_probe_drift", drift, 0.01,
                    drift <= 0.01);
    }
    {
      std::vector<std::function<Complex(const CPoint&)>> hs = {
          [](const CPoint&) { return Complex(1.0); },
          [](const CPoint& w) { return w[0]; },
          [](const CPoint& w) { return w[0] * w[1]; }};
      double worst = 0.0;
      for (int s = 0; s < 5; ++s) {
        CPoint z(n);
        const double th = 2.0 * kPi * s / 5.0;
        z[0] = 0.45 * Complex(std::cos(th), std::sin(th));
        z[1] = 0.3 * Complex(std::sin(th), -std::cos(th));
        for (const auto& hfun : hs) {
          const Complex got = kernel_reproduce(ctx, hfun, z);
          worst = std::max(worst, std::abs(got - hfun(z)) /
                                      (1.0 + std::abs(hfun(z))));
        }
      }
      rep.add_check("kernel.reproduction", worst, cfg.reproduction_tol,
                    worst <= cfg.reproduction_tol);
    }
    // Kernel lower-bound proxy |(g+rho)/rho| vs the homogeneous envelope.
    {
      double kappa = 1e300;
      for (int s = 0; s < 2000; ++s) {
        const CPoint zeta = domain_point(0.02, 0.32);
        const CPoint z = domain_point(0.02, 0.32);
        const SupportValue sv = support_function(p.df, zeta, z);
        const double rho_c = std::abs(p.df.rho(zeta));
        const double rho_z = std::abs(p.df.rho(z));
        const double del = pseudo_distance(p.df, zeta, z);
        const double lhs = std::abs((sv.g + p.df.rho(zeta)) / p.df.rho(zeta));
        kappa = std::min(kappa, lhs * rho_c / (rho_z + rho_c + del));
      }
      rep.add_value("kernel.lower_bound_kappa", kappa);
      rep.add_check("kernel.lower_bound_positive", kappa, 0.0, kappa > 0.0);
    }
  }
}

void stage_current(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  (void)out_dir;
  if (!p.ext) throw HolexError("current: missing glued extension");
  if (!p.hefer) p.hefer = hefer_jet(cfg.f, p.k);
  CurrentParams cp = cfg.current;
  p.current = std::make_shared<ResidueCurrent>(cfg.f, *p.hefer,
                                               cfg.weight_power, *p.ext, cp);
  rep.add_value("current.pieces", static_cast<double>(p.current->piece_count()));

  // fT = 1 against the direct integral oracle for three bump forms.
  const int order = p.ext->params().bump_order + p.k;
  std::vector<TestForm> forms;
  {
    CPoint c1(2);
    c1[0] = Complex(0.55, 0.0);
    c1[1] = Complex(0.0, 0.0);
    forms.push_back(euclid_bump_form(c1, 0.18, order));
    CPoint c2(2);
    c2[0] = Complex(-0.2, 0.3);
    c2[1] = Complex(0.25, -0.1);
    forms.push_back(euclid_bump_form(c2, 0.15, order));
    CPoint c3(2);
    c3[0] = Complex(0.1, -0.35);
    c3[1] = Complex(-0.3, 0.2);
    forms.push_back(euclid_bump_form(c3, 0.15, order, Complex(0.7, 0.4)));
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    const TestForm& phi = forms[i];
    TestForm f_phi = phi;
    const MultiPoly f = cfg.f;
    auto base = phi.density;
    f_phi.density = [f, base](const CPoint& z) { return f.eval(z) * base(z); };
    const Complex got = p.current->apply_form(f_phi);
    const Complex want = integrate_form(p.df, phi);
    const double rel = std::abs(got - want) / std::abs(want);
    rep.add_value("current.ft_rel_" + std::to_string(i), rel);
    worst = std::max(worst, rel);
  }
  rep.add_check("current.ft_identity", worst, cfg.ft_tol, worst <= cfg.ft_tol);
}

void stage_extension(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  if (!p.current) throw HolexError("extension: missing current assembly");

  // Gather every evaluation point (probe, on-X samples, CR grid + stencils,
  // boundary ray) into one batch; E_N is linear in C1.
  std::vector<CPoint> zs;
  std::vector<int> group;

  // calibration probe: an on-X point in the probe band
  const auto probe_pts =
      sample_variety_points(cfg.f, p.df, -cfg.probe_rho_hi, -cfg.probe_rho_lo,
                            64, cfg.seed + 51);
  CPoint probe;
  bool have_probe = false;
  std::vector<double> wtmp;
  for (const CPoint& x : probe_pts)
    if (p.ext->try_partition_weights(x, wtmp) &&
        std::abs(p.h(x)) > 0.05 * (1.0 + p.h_sup)) {
      probe = x;
      have_probe = true;
      break;
    }
  if (!have_probe) throw HolexError("extension: no usable calibration probe");
  zs.push_back(probe);
  group.push_back(0);

  // on-X evaluation samples
  const auto xs =
      sample_variety_points(cfg.f, p.df, -cfg.ext_rho_hi, -cfg.ext_rho_lo,
                            cfg.extension_samples * 2, cfg.seed + 52);
  std::vector<int> x_index;
  for (const CPoint& x : xs) {
    if (static_cast<int>(x_index.size()) >= cfg.extension_samples) break;
    if (!p.ext->try_partition_weights(x, wtmp)) continue;
    if (norm2(x - probe) < 1e-6) continue;
    x_index.push_back(static_cast<int>(zs.size()));
    zs.push_back(x);
    group.push_back(static_cast<int>(zs.size()) - 1);
  }
  if (x_index.empty()) throw HolexError("extension: no covered on-X samples");

  // CR grid and its Wirtinger stencils (one prune group per grid point)
  struct CrPoint {
    int center;
    int offs[8];
  };
  std::vector<CrPoint> cr;
  for (int gi = 0; gi < cfg.cr_grid; ++gi)
    for (int gj = 0; gj < cfg.cr_grid; ++gj) {
      CPoint z(2);
      z[0] = Complex(-cfg.cr_extent +
                         2.0 * cfg.cr_extent * (gi + 0.5) / cfg.cr_grid,
                     0.1 * cfg.cr_extent);
      z[1] = Complex(-cfg.cr_extent +
                         2.0 * cfg.cr_extent * (gj + 0.5) / cfg.cr_grid,
                     -0.07 * cfg.cr_extent);
      CrPoint cp;
      cp.center = static_cast<int>(zs.size());
      const int g = cp.center;
      zs.push_back(z);
      group.push_back(g);
      int slot = 0;
      for (int s = 0; s < 2; ++s)
        for (auto off : {Complex(cfg.cr_step, 0), Complex(-cfg.cr_step, 0),
                         Complex(0, cfg.cr_step), Complex(0, -cfg.cr_step)}) {
          CPoint zq = z;
          zq[s] += off;
          cp.offs[slot++] = static_cast<int>(zs.size());
          zs.push_back(zq);
          group.push_back(g);
        }
      cr.push_back(cp);
    }

  // boundary-approaching ray for the plot artifact
  std::vector<int> ray_index;
  {
    const auto dirs = region_ray_directions(cfg, 1, cfg.seed + 53);
    for (double t : {-0.5, -0.35, -0.25, -0.18, -0.12, -0.08, -0.06}) {
      if (std::abs(t) < cfg.current.rho_floor) continue;
      CPoint z = p.df.level_radius(dirs[0], t) * dirs[0];
      ray_index.push_back(static_cast<int>(zs.size()));
      zs.push_back(z);
      group.push_back(static_cast<int>(zs.size()) - 1);
    }
  }

  std::vector<double> abs_mass;
  const std::vector<Complex> raw =
      p.current->extension_raw_batch(zs, group, &abs_mass);
  if (std::abs(raw[0]) < 1e-300)
    throw HolexError("extension: raw value vanished at the calibration probe");
  const Complex c1 = p.h(probe) / raw[0];
  p.current->set_c1(c1);
  rep.add_value("extension.C1_re", c1.real());
  rep.add_value("extension.C1_im", c1.imag());

  // Exactness on X.
  {
    double worst = 0.0;
    for (int idx : x_index)
      worst = std::max(worst,
                       std::abs(c1 * raw[idx] - p.h(zs[idx])) / (1.0 + p.h_sup));
    rep.add_value("extension.samples", static_cast<double>(x_index.size()));
    rep.add_check("extension.exactness", worst, cfg.extension_tol,
                  worst <= cfg.extension_tol);
  }

  // Holomorphy: CR residual of E_N against the finite-difference noise floor
  // of a closed-form holomorphic function of the same magnitude.
  {
    double worst_cr = 0.0;
    double noise = 0.0;
    // Reference holomorphic polynomial of the same magnitude: the symmetric
    // Wirtinger stencil leaves an h^2 f'''/6 artifact on any curved
    // holomorphic function, so a curvature-free reference would be a
    // degenerate floor.
    const double amp = (1.0 + p.h_sup) / 3.0;
    auto poly_sampler = [amp](const CPoint& z) {
      return amp * (z[0] * z[0] * z[0] + z[1] * z[1] * z[1] +
                    z[0] * z[0] * z[1]);
    };
    std::ofstream grid = open_artifact(out_dir, "extension_grid.csv");
    grid << "re1,im1,re2,im2,rho,e_re,e_im,cr_residual\n";
    for (const auto& cp : cr) {
      double cr_val = 0.0;
      for (int s = 0; s < 2; ++s) {
        const Complex gx = (c1 * raw[cp.offs[4 * s + 0]] -
                            c1 * raw[cp.offs[4 * s + 1]]) /
                           (2.0 * cfg.cr_step);
        const Complex gy = (c1 * raw[cp.offs[4 * s + 2]] -
                            c1 * raw[cp.offs[4 * s + 3]]) /
                           (2.0 * cfg.cr_step);
        cr_val = std::max(cr_val, std::abs(0.5 * (gx + Complex(0, 1) * gy)));
      }
      worst_cr = std::max(worst_cr, cr_val);
      noise = std::max(noise, cr_residual(poly_sampler, zs[cp.center],
                                          cfg.cr_step));
      // amplitude-matched floor: differencing sums of absolute mass M at
      // step h cannot resolve dbar below eps * M / h
      noise = std::max(noise, 2.5e-16 * std::abs(c1) * abs_mass[cp.center] /
                                  cfg.cr_step);
      const CPoint& z = zs[cp.center];
      const Complex e = c1 * raw[cp.center];
      csv_row(grid, {z[0].real(), z[0].imag(), z[1].real(), z[1].imag(),
                     p.df.rho(z), e.real(), e.imag(), cr_val});
    }
    noise = std::max(noise, 1e-16 * (1.0 + p.h_sup) / cfg.cr_step);
    rep.add_value("extension.cr_max", worst_cr);
    rep.add_value("extension.cr_noise_floor", noise);
    rep.add_check("extension.holomorphy", worst_cr, cfg.cr_noise_factor * noise,
                  worst_cr <= cfg.cr_noise_factor * noise);
  }

  // Ray profile artifact.
  {
    std::ofstream rayf = open_artifact(out_dir, "ray_profile.csv");
    rayf << "rho,e_abs,cr_residual\n";
    for (int idx : ray_index)
      csv_row(rayf, {p.df.rho(zs[idx]), std::abs(c1 * raw[idx]), 0.0});
  }
}

void stage_norms(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  (void)out_dir;

  // L^q estimator sanity: the unit-ball volume.
  {
    auto one = [](const CPoint&) { return Complex(1.0); };
    const NormEstimate est =
        lq_norm_estimate(one, p.df, 2.0, cfg.lq_budget, cfg.seed + 61);
    const double expect = std::sqrt(kPi * kPi / 2.0);
    const double rel = std::abs(est.value - expect) / expect;
    rep.add_value("norms.lq_const", est.value);
    if (cfg.domain_family == "unit-ball")
      rep.add_check("norms.lq_volume", rel, 0.01, rel <= 0.01);
  }

  // Schur-test inequalities with a depth sweep.
  {
    const SchurReport a = schur_kernel_check(p.df, cfg.schur);
    SchurParams deeper = cfg.schur;
    deeper.shell_depth = 0.5 * cfg.schur.shell_depth;
    deeper.seed = cfg.schur.seed + 1;
    const SchurReport b = schur_kernel_check(p.df, deeper);
    double ratio = 0.0;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
      rep.add_value("schur.direct_eps" + std::to_string(i),
                    a.entries[i].c_direct);
      rep.add_value("schur.symmetric_eps" + std::to_string(i),
                    a.entries[i].c_symmetric);
      const double r1 =
          std::max(a.entries[i].c_direct, b.entries[i].c_direct) /
          std::max(1e-300, std::min(a.entries[i].c_direct,
                                    b.entries[i].c_direct));
      const double r2 =
          std::max(a.entries[i].c_symmetric, b.entries[i].c_symmetric) /
          std::max(1e-300, std::min(a.entries[i].c_symmetric,
                                    b.entries[i].c_symmetric));
      ratio = std::max({ratio, r1, r2});
    }
    rep.add_check("schur.depth_stability", ratio, 2.0,
                  a.finite && b.finite && ratio <= 2.0);
  }

  // Disc conditions over the covering.
  if (p.ext) {
    DiscParams dp = cfg.disc;
    dp.c = cfg.cover.c;
    dp.metric_C = cfg.classify.metric_C;
    const DiscConditionReport disc = disc_condition_check(*p.ext, dp);
    rep.add_value("disc.sup_max", disc.sup_max);
    rep.add_value("disc.c_sum", disc.c_sum);
    rep.add_value("disc.balls", static_cast<double>(disc.balls.size()));
    const double bound = 3.0 * (1.0 + p.h_sup);
    rep.add_check("disc.uniform_sup", disc.sup_max, bound,
                  disc.sup_max <= bound);
  }
}

void stage_verify(Pipeline& p, const std::string& out_dir, Report& rep) {
  const ScenarioConfig& cfg = p.cfg;
  const std::string path = artifact_path(out_dir, "covering.txt");
  std::ifstream f(path);
  if (!f) throw HolexError("verify: missing covering artifact");
  const Covering stored = read_covering(f);

  const Covering rebuilt = build_covering(p.df, cfg.cover);
  std::ostringstream sa, sb;
  write_covering(sa, stored);
  write_covering(sb, rebuilt);
  const bool identical = sa.str() == sb.str();
  rep.add_check("verify.covering_deterministic", identical ? 1.0 : 0.0, 1.0,
                identical);
  rep.add_note("verify.covering_hash", hash_hex(sb.str()));
  p.covering = rebuilt;
}

Report run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
  Report rep(hash_hex(cfg.to_canonical_json()), cfg.seed);
  Pipeline p = make_pipeline(cfg);

  struct Stage {
    const char* name;
    void (*fn)(Pipeline&, const std::string&, Report&);
  };
  const Stage stages[] = {
      {"cover", stage_cover},       {"classify", stage_classify},
      {"extend", stage_extend},     {"kernel", stage_kernel_check},
      {"current", stage_current},   {"extension", stage_extension},
      {"norms", stage_norms},
  };
  for (const Stage& s : stages) {
    try {
      s.fn(p, out_dir, rep);
    } catch (const std::exception& e) {
      rep.add_check(std::string("stage.") + s.name, 0.0, 1.0, false);
      rep.add_note(std::string("stage.") + s.name + ".error", e.what());
      break;  // later stages lack their inputs
    }
  }
  rep.write(artifact_path(out_dir, "report.json"));
  return rep;
}

}  // namespace holex
