// Acceptance suite: every criterion runs at its stated tolerance against the
// two bundled scenarios (unit ball, n = 2; smooth hyperplane and boundary
// cusp) and prints one PASS/FAIL line.

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <optional>

#include "holex/runner.hpp"
#include "holex/rng.hpp"

using namespace holex;
namespace fs = std::filesystem;

namespace {

struct ScenarioRun {
  ScenarioConfig cfg;
  Report report;
};

const ScenarioRun& scenario_run(const std::string& name) {
  static std::map<std::string, ScenarioRun> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    ScenarioConfig cfg = builtin_scenario(name);
    const fs::path out = fs::temp_directory_path() / ("holex_accept_" + name);
    fs::create_directories(out);
    ScenarioRun run{cfg, run_scenario(cfg, out.string())};
    it = cache.emplace(name, std::move(run)).first;
  }
  return it->second;
}

const CheckResult* find_check(const Report& rep, const std::string& name) {
  for (const CheckResult& c : rep.checks())
    if (c.name == name) return &c;
  return nullptr;
}

bool criterion_line(int num, const std::string& label, bool pass, double value,
                    double tol) {
  std::printf("ACCEPTANCE %2d %s  %s  measured=%.6g tol=%.6g\n", num,
              pass ? "PASS" : "FAIL", label.c_str(), value, tol);
  std::fflush(stdout);
  return pass;
}

bool criterion_from_reports(int num, const std::string& label,
                            const std::string& check_name,
                            const std::vector<const Report*>& reps) {
  double value = 0.0, tol = 0.0;
  bool pass = true, found = false;
  for (const Report* r : reps) {
    const CheckResult* c = find_check(*r, check_name);
    if (!c) {
      pass = false;
      continue;
    }
    found = true;
    value = std::max(value, c->value);
    tol = c->tolerance;
    pass = pass && c->pass;
  }
  return criterion_line(num, label, pass && found, value, tol);
}

}  // namespace

TEST_CASE("acceptance: full pipeline criteria") {
  const ScenarioRun& hyper = scenario_run("smooth-hyperplane");
  const ScenarioRun& cusp = scenario_run("cusp-boundary");
  const std::vector<const Report*> both{&hyper.report, &cusp.report};
  const std::vector<const Report*> cusp_only{&cusp.report};

  // 1. Hefer identity at 1e3 seeded pairs.
  CHECK(criterion_from_reports(1, "hefer identity", "kernel.hefer_identity",
                               both));

  // 2. Hefer jet order: fitted exponent within 20 percent of k+1.
  CHECK(criterion_from_reports(2, "hefer jet order", "kernel.jet_order",
                               cusp_only));

  // 3. Reproducing property after calibration.
  CHECK(criterion_from_reports(3, "kernel reproduction", "kernel.reproduction",
                               both));

  // 4. Current identity fT = 1 for three bump forms, both scenarios.
  CHECK(criterion_from_reports(4, "current identity fT=1",
                               "current.ft_identity", both));

  // 5. Extension exactness at 50 on-X samples with |rho| >= 0.05.
  CHECK(criterion_from_reports(5, "extension exactness", "extension.exactness",
                               both));

  // 6. Holomorphy of E_N on the 10x10 interior grid.
  CHECK(criterion_from_reports(6, "extension holomorphy",
                               "extension.holomorphy", both));

  // 9. Glued-extension on-X dbar residuals (first and second order, cusp).
  CHECK(criterion_from_reports(9, "glued extension dbar on X",
                               "th0.iii.on_x_dbar", cusp_only));

  // 10. Support-function inequality, sign-corrected.
  {
    bool pass = true;
    double beta = 1e300;
    for (const Report* r : both) {
      const CheckResult* b = find_check(*r, "kernel.support_beta_positive");
      const CheckResult* i = find_check(*r, "kernel.ball_levi_identity");
      pass = pass && b && b->pass && i && i->pass;
      if (b) beta = std::min(beta, b->value);
    }
    CHECK(criterion_line(10, "support inequality beta>0 + ball identity", pass,
                         beta, 0.0));
  }

  // 11. Schur inequalities stable across two shell depths.
  CHECK(criterion_from_reports(11, "schur inequalities",
                               "schur.depth_stability", both));

  // 12. L^q estimator sanity: unit-ball volume.
  CHECK(criterion_from_reports(12, "Lq estimator volume", "norms.lq_volume",
                               both));
}

TEST_CASE("acceptance: covering criterion at the pinned parameters") {
  // 7. c = 0.1, kappa = 0.5, eps0 = 0.2 on a boundary patch; >= 99 percent of
  //    fresh shell samples covered; the overlap maximum does not grow when
  //    the depth is halved.
  const auto df = DefiningFunction::unit_ball(2);
  CoverParams params;
  params.c = 0.1;
  params.kappa = 0.5;
  params.eps0 = 0.2;
  params.candidate_budget = 9000;
  params.seed = 4242;
  params.level_floor = 0.12;
  params.max_layers = 64;
  params.box_min = {0.82, -0.16, -0.3, -0.3};
  params.box_max = {1.02, 0.16, 0.3, 0.3};

  const Covering cov = build_covering(df, params);
  double deepest = params.eps0;
  for (const CoverEntry& e : cov.entries)
    deepest = std::min(deepest, std::abs(e.level));

  Rng rng(777);
  const double margin = 2.2 * std::sqrt(params.c * params.eps0);
  int covered = 0, total = 0;
  while (total < 10000) {
    const CVector xi = rng.unit_vector(2);
    const double t = -rng.uniform(deepest, params.eps0);
    CPoint z;
    try {
      z = df.level_radius(xi, t) * xi;
    } catch (const HolexError&) {
      continue;
    }
    bool inner = true;
    for (int d = 0; d < 4; ++d) {
      const double x = d % 2 == 0 ? z[d / 2].real() : z[d / 2].imag();
      inner = inner && x > params.box_min[d] + margin &&
              x < params.box_max[d] - margin;
    }
    if (!inner) continue;
    ++total;
    for (const CoverEntry& e : cov.entries)
      if (norm2(z - e.center) <= e.radius + std::sqrt(e.radius) &&
          koranyi_membership(df, e.center, e.radius, z)) {
        ++covered;
        break;
      }
  }
  const double frac = static_cast<double>(covered) / total;

  CoverParams half = params;
  half.eps0 = 0.1;
  half.level_floor = 0.06;
  half.seed = 4243;
  const Covering cov_half = build_covering(df, half);

  const double inflation = 5.0 * params.c;  // 5 c C^4, C measured ~ 1
  int m_full = 0, m_half = 0;
  Rng rng2(778);
  int zs = 0;
  while (zs < 1000) {
    const CVector xi = rng2.unit_vector(2);
    CPoint z;
    try {
      z = df.level_radius(xi, -rng2.uniform(0.07, 0.18)) * xi;
    } catch (const HolexError&) {
      continue;
    }
    if (!params.in_box(z)) continue;
    ++zs;
    if (zs % 4 != 0) continue;  // overlap probing on a subsample
    m_full = std::max(m_full, overlap_count(df, cov, z, inflation, 4));
    m_half = std::max(m_half, overlap_count(df, cov_half, z, inflation, 4));
  }

  const bool pass = frac >= 0.99 && m_half <= m_full;
  std::printf("ACCEPTANCE  7 %s  covering coverage+overlap  coverage=%.4f "
              "M=%d M_half=%d\n",
              pass ? "PASS" : "FAIL", frac, m_full, m_half);
  CHECK(frac >= 0.99);
  CHECK(m_half <= m_full);
}

TEST_CASE("acceptance: divided differences against the contour formula") {
  // 8. Contour vs recursive for polynomial samplers of degree <= 6 at 1e-8
  //    relative; interpolation residual at the nodes <= 1e-9.
  Rng rng(888);
  double worst_pair = 0.0, worst_interp = 0.0;
  for (int deg = 1; deg <= 6; ++deg)
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<Complex> coeffs(deg + 1);
      for (auto& c : coeffs) c = Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
      const UniPoly poly(coeffs);
      const int m = deg + 1;
      std::vector<Complex> nodes, values;
      for (int i = 0; i < m; ++i) {
        nodes.push_back(std::polar(rng.uniform(0.05, 0.6),
                                   rng.uniform(0.0, 2.0 * kPi)));
        values.push_back(poly.eval(nodes.back()));
      }
      const auto table = divided_differences(nodes, values);
      auto sampler = [&](Complex t) { return poly.eval(t); };
      const Complex contour = divided_diff_contour(sampler, nodes, 1.0, 512);
      worst_pair = std::max(worst_pair, std::abs(contour - table.back()) /
                                            (1.0 + std::abs(table.back())));
      // Newton-form reproduction at the nodes
      for (int i = 0; i < m; ++i) {
        Complex acc = 0.0, prod = 1.0;
        for (int l = 0; l < m; ++l) {
          acc += table[l] * prod;
          prod *= (nodes[i] - nodes[l]);
        }
        double scale = 1.0;
        for (const Complex& v : values) scale = std::max(scale, std::abs(v));
        worst_interp =
            std::max(worst_interp, std::abs(acc - values[i]) / scale);
      }
    }
  const bool pass = worst_pair <= 1e-8 && worst_interp <= 1e-9;
  std::printf("ACCEPTANCE  8 %s  divided differences  contour=%.3g "
              "interp=%.3g\n",
              pass ? "PASS" : "FAIL", worst_pair, worst_interp);
  CHECK(worst_pair <= 1e-8);
  CHECK(worst_interp <= 1e-9);
}
