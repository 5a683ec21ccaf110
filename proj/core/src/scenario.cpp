#include "holex/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "holex/rng.hpp"

namespace holex {

using nlohmann::json;

namespace {

MultiPoly poly_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  MultiPoly p(dim);
  for (const auto& term : j.at("terms")) {
    std::vector<int> e = term.at(0).get<std::vector<int>>();
    p.add_term(e, Complex(term.at(1).get<double>(), term.at(2).get<double>()));
  }
  return p;
}

json poly_to_json(const MultiPoly& p) {
  json j;
  j["dim"] = p.dim();
  json terms = json::array();
  for (const auto& [e, c] : p.terms())
    terms.push_back(json::array({e, c.real(), c.imag()}));
  j["terms"] = terms;
  return j;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

void ScenarioConfig::validate() const {
  if (dim != 2)
    throw HolexError("config: the full pipeline requires dim = 2");
  cover.validate(dim);
  if (weight_power < 1) throw HolexError("config: N must be >= 1");
  if (q < 1.0) throw HolexError("config: q must be in [1, inf)");
  if (f.is_zero()) throw HolexError("config: zero hypersurface polynomial");
  if (h_type != "polynomial" && h_type != "formula")
    throw HolexError("config: h.type must be polynomial or formula");
  if (h_type == "formula" && h_formula != "cusp_parameter")
    throw HolexError("config: unknown h formula '" + h_formula + "'");
  if (ext_rho_lo <= 0.0 || ext_rho_hi <= ext_rho_lo)
    throw HolexError("config: bad extension rho band");
}

DefiningFunction ScenarioConfig::make_domain() const {
  if (domain_family == "unit-ball") return DefiningFunction::unit_ball(dim);
  if (domain_family == "hermitian-ellipsoid")
    return DefiningFunction::hermitian_ellipsoid(domain_matrix);
  if (domain_family == "quadratic-perturbation")
    return DefiningFunction::quadratic_perturbation(domain_matrix);
  throw HolexError("config: unknown domain family '" + domain_family + "'");
}

BranchValueFn ScenarioConfig::make_h() const {
  if (h_type == "polynomial") {
    MultiPoly p = h_poly;
    return [p](const CPoint& z) { return p.eval(z); };
  }
  // Named closed forms whose restriction to X is the data h.
  if (h_formula == "cusp_parameter")
    return [](const CPoint& z) { return z[1] / (z[0] - 1.0); };
  throw HolexError("config: unknown h formula");
}

double ScenarioConfig::h_sup_estimate() const {
  const DefiningFunction df = make_domain();
  const BranchValueFn h = make_h();
  Rng rng(seed ^ 0x59ull);
  double sup = 0.0;
  for (int i = 0; i < 2000; ++i) {
    const CVector xi = rng.unit_vector(dim);
    const double r = df.level_radius(xi, -0.02) * std::sqrt(rng.uniform());
    sup = std::max(sup, std::abs(h(r * xi)));
  }
  return sup;
}

ScenarioConfig ScenarioConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw HolexError(std::string("config: JSON parse error: ") + e.what());
  }
  ScenarioConfig c;
  c.name = get_or<std::string>(j, "name", c.name);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.workers = get_or<int>(j, "workers", c.workers);

  if (j.contains("domain")) {
    const json& d = j["domain"];
    c.domain_family = get_or<std::string>(d, "family", c.domain_family);
    c.dim = get_or<int>(d, "dim", c.dim);
    if (d.contains("matrix_re")) {
      auto re = d["matrix_re"].get<std::vector<std::vector<double>>>();
      std::vector<std::vector<double>> im(re.size(),
                                          std::vector<double>(re.size(), 0.0));
      if (d.contains("matrix_im"))
        im = d["matrix_im"].get<std::vector<std::vector<double>>>();
      c.domain_matrix = CMatrix(re.size(), re.size());
      for (std::size_t a = 0; a < re.size(); ++a)
        for (std::size_t b = 0; b < re.size(); ++b)
          c.domain_matrix(a, b) = Complex(re[a][b], im[a][b]);
    }
  }

  if (j.contains("variety")) {
    const json& v = j["variety"];
    c.f = poly_from_json(v.at("poly"));
    if (v.contains("singular")) {
      const std::string type = v["singular"].at("type").get<std::string>();
      if (type == "smooth") {
        c.locus = SingularLocus::smooth();
      } else if (type == "newton") {
        c.locus = SingularLocus::newton();
      } else if (type == "points") {
        std::vector<CPoint> pts;
        for (const auto& row : v["singular"].at("points")) {
          auto vals = row.get<std::vector<double>>();
          CPoint p(c.dim);
          for (int k = 0; k < c.dim; ++k)
            p[k] = Complex(vals[2 * k], vals[2 * k + 1]);
          pts.push_back(std::move(p));
        }
        c.locus = SingularLocus::at(std::move(pts));
      } else {
        throw HolexError("config: unknown singular locus type");
      }
    }
  }

  if (j.contains("h")) {
    const json& h = j["h"];
    c.h_type = get_or<std::string>(h, "type", c.h_type);
    if (h.contains("poly")) c.h_poly = poly_from_json(h["poly"]);
    c.h_formula = get_or<std::string>(h, "name", c.h_formula);
  }

  if (j.contains("covering")) {
    const json& cv = j["covering"];
    c.cover.c = get_or<double>(cv, "c", c.cover.c);
    c.cover.kappa = get_or<double>(cv, "kappa", c.cover.kappa);
    c.cover.eps0 = get_or<double>(cv, "eps0", c.cover.eps0);
    c.cover.candidate_budget =
        get_or<int>(cv, "budget", c.cover.candidate_budget);
    c.cover.level_floor = get_or<double>(cv, "level_floor", c.cover.level_floor);
    c.cover.max_layers = get_or<int>(cv, "max_layers", c.cover.max_layers);
    c.cover.level_tol = get_or<double>(cv, "level_tol", c.cover.level_tol);
    if (cv.contains("box")) {
      c.cover.box_min = cv["box"].at("min").get<std::vector<double>>();
      c.cover.box_max = cv["box"].at("max").get<std::vector<double>>();
    }
  }
  c.cover.seed = c.seed;
  if (c.cover.box_min.empty()) {
    c.cover.box_min.assign(2 * c.dim, -1.1);
    c.cover.box_max.assign(2 * c.dim, 1.1);
  }

  if (j.contains("classify")) {
    const json& cl = j["classify"];
    c.classify.metric_C = get_or<double>(cl, "metric_C", c.classify.metric_C);
    c.classify.near_sing_factor =
        get_or<double>(cl, "near_sing_factor", c.classify.near_sing_factor);
    c.classify.probe_radius_factor = get_or<double>(
        cl, "probe_radius_factor", c.classify.probe_radius_factor);
  }
  c.classify.c = c.cover.c;

  if (j.contains("kernel")) {
    const json& k = j["kernel"];
    c.weight_power = get_or<int>(k, "N", c.weight_power);
    c.jet_order = get_or<int>(k, "jet_order", c.jet_order);
    c.denominator_floor =
        get_or<double>(k, "denominator_floor", c.denominator_floor);
    c.repro_probe_rho = get_or<double>(k, "probe_rho", c.repro_probe_rho);
    if (k.contains("quad")) {
      c.kernel_quad.normal_pts =
          get_or<int>(k["quad"], "normal", c.kernel_quad.normal_pts);
      c.kernel_quad.tangential_pts =
          get_or<int>(k["quad"], "tangential", c.kernel_quad.tangential_pts);
      c.kernel_quad.base_scale =
          get_or<double>(k["quad"], "base_scale", c.kernel_quad.base_scale);
    }
  }

  if (j.contains("glue")) {
    const json& g = j["glue"];
    c.glue.bump_order = get_or<int>(g, "bump_order", c.glue.bump_order);
    c.glue.fd_theta = get_or<double>(g, "fd_theta", c.glue.fd_theta);
    c.glue.interior_start =
        get_or<double>(g, "interior_start", c.glue.interior_start);
    c.glue.interior_full =
        get_or<double>(g, "interior_full", c.glue.interior_full);
  }

  if (j.contains("current")) {
    const json& cu = j["current"];
    c.current.normal_pts = get_or<int>(cu, "normal", c.current.normal_pts);
    c.current.tangential_pts =
        get_or<int>(cu, "tangential", c.current.tangential_pts);
    c.current.interior_pts = get_or<int>(cu, "interior", c.current.interior_pts);
    c.current.fd_theta = get_or<double>(cu, "fd_theta", c.current.fd_theta);
    c.current.refine_levels = get_or<int>(cu, "refine", c.current.refine_levels);
    c.current.prune_eta = get_or<double>(cu, "prune_eta", c.current.prune_eta);
    c.current.rho_floor = get_or<double>(cu, "rho_floor", c.current.rho_floor);
  }

  if (j.contains("extension")) {
    const json& e = j["extension"];
    c.extension_samples = get_or<int>(e, "samples", c.extension_samples);
    c.ext_rho_lo = get_or<double>(e, "rho_lo", c.ext_rho_lo);
    c.ext_rho_hi = get_or<double>(e, "rho_hi", c.ext_rho_hi);
    c.cr_grid = get_or<int>(e, "cr_grid", c.cr_grid);
    c.cr_extent = get_or<double>(e, "cr_extent", c.cr_extent);
    c.cr_step = get_or<double>(e, "cr_step", c.cr_step);
    c.probe_rho_lo = get_or<double>(e, "probe_rho_lo", c.probe_rho_lo);
    c.probe_rho_hi = get_or<double>(e, "probe_rho_hi", c.probe_rho_hi);
  }

  if (j.contains("analysis")) {
    const json& a = j["analysis"];
    c.q = get_or<double>(a, "q", c.q);
    c.lq_budget = get_or<int>(a, "lq_budget", c.lq_budget);
    if (a.contains("th0")) {
      const json& t = a["th0"];
      c.th0.vanish_order = get_or<int>(t, "N", c.th0.vanish_order);
      c.th0.ray_count = get_or<int>(t, "rays", c.th0.ray_count);
      c.th0.ray_levels = get_or<int>(t, "levels", c.th0.ray_levels);
      c.th0.lq_budget = get_or<int>(t, "lq_budget", c.th0.lq_budget);
      c.th0.on_x_samples = get_or<int>(t, "on_x_samples", c.th0.on_x_samples);
      c.th0.on_x_tol = get_or<double>(t, "on_x_tol", c.th0.on_x_tol);
      c.th0.decay_factor = get_or<double>(t, "decay_factor", c.th0.decay_factor);
    }
    if (a.contains("schur")) {
      const json& s = a["schur"];
      if (s.contains("eps")) c.schur.eps = s["eps"].get<std::vector<double>>();
      c.schur.weight_power = get_or<int>(s, "N", c.schur.weight_power);
      c.schur.z_probes = get_or<int>(s, "z_probes", c.schur.z_probes);
      c.schur.shell_depth = get_or<double>(s, "shell_depth", c.schur.shell_depth);
      if (s.contains("quad")) {
        c.schur.quad.normal_pts =
            get_or<int>(s["quad"], "normal", c.schur.quad.normal_pts);
        c.schur.quad.tangential_pts =
            get_or<int>(s["quad"], "tangential", c.schur.quad.tangential_pts);
      }
    }
    if (a.contains("disc")) {
      const json& d = a["disc"];
      c.disc.mode_sup = get_or<std::string>(d, "mode", "sup") == "sup";
      c.disc.q = get_or<double>(d, "q", c.disc.q);
      c.disc.radius_factor = get_or<double>(d, "radius_factor", c.disc.radius_factor);
      c.disc.bases_per_ball = get_or<int>(d, "bases_per_ball", c.disc.bases_per_ball);
    }
  }

  if (j.contains("checks")) {
    const json& k = j["checks"];
    c.coverage_min = get_or<double>(k, "coverage_min", c.coverage_min);
    c.coverage_samples = get_or<int>(k, "coverage_samples", c.coverage_samples);
    c.ft_tol = get_or<double>(k, "ft_tol", c.ft_tol);
    c.extension_tol = get_or<double>(k, "extension_tol", c.extension_tol);
    c.reproduction_tol = get_or<double>(k, "reproduction_tol", c.reproduction_tol);
    c.hefer_tol = get_or<double>(k, "hefer_tol", c.hefer_tol);
    c.cr_noise_factor = get_or<double>(k, "cr_noise_factor", c.cr_noise_factor);
  }

  // Derived defaults shared across modules.
  c.disc.c = c.cover.c;
  c.disc.metric_C = c.classify.metric_C;
  c.th0.q = c.q;
  c.th0.rho_lo = c.ext_rho_lo;
  c.th0.rho_hi = c.ext_rho_hi;
  c.th0.seed = c.seed + 101;
  c.schur.seed = c.seed + 202;
  c.disc.seed = c.seed + 303;
  c.validate();
  return c;
}

std::string ScenarioConfig::to_canonical_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["workers"] = workers;
  j["domain"]["family"] = domain_family;
  j["domain"]["dim"] = dim;
  if (domain_matrix.size() > 0) {
    std::vector<std::vector<double>> re, im;
    for (int a = 0; a < domain_matrix.rows(); ++a) {
      re.emplace_back();
      im.emplace_back();
      for (int b = 0; b < domain_matrix.cols(); ++b) {
        re.back().push_back(domain_matrix(a, b).real());
        im.back().push_back(domain_matrix(a, b).imag());
      }
    }
    j["domain"]["matrix_re"] = re;
    j["domain"]["matrix_im"] = im;
  }
  j["variety"]["poly"] = poly_to_json(f);
  switch (locus.kind) {
    case SingularLocus::Kind::Smooth:
      j["variety"]["singular"]["type"] = "smooth";
      break;
    case SingularLocus::Kind::NewtonSearch:
      j["variety"]["singular"]["type"] = "newton";
      break;
    case SingularLocus::Kind::Points: {
      j["variety"]["singular"]["type"] = "points";
      std::vector<std::vector<double>> pts;
      for (const CPoint& p : locus.points) {
        std::vector<double> row;
        for (int k = 0; k < dim; ++k) {
          row.push_back(p[k].real());
          row.push_back(p[k].imag());
        }
        pts.push_back(std::move(row));
      }
      j["variety"]["singular"]["points"] = pts;
      break;
    }
  }
  j["h"]["type"] = h_type;
  if (h_type == "polynomial") j["h"]["poly"] = poly_to_json(h_poly);
  if (h_type == "formula") j["h"]["name"] = h_formula;
  j["covering"] = {{"c", cover.c},
                   {"kappa", cover.kappa},
                   {"eps0", cover.eps0},
                   {"budget", cover.candidate_budget},
                   {"level_floor", cover.level_floor},
                   {"max_layers", cover.max_layers},
                   {"level_tol", cover.level_tol},
                   {"box", {{"min", cover.box_min}, {"max", cover.box_max}}}};
  j["classify"] = {{"metric_C", classify.metric_C},
                   {"near_sing_factor", classify.near_sing_factor},
                   {"probe_radius_factor", classify.probe_radius_factor}};
  j["kernel"] = {{"N", weight_power},
                 {"jet_order", jet_order},
                 {"denominator_floor", denominator_floor},
                 {"probe_rho", repro_probe_rho},
                 {"quad",
                  {{"normal", kernel_quad.normal_pts},
                   {"tangential", kernel_quad.tangential_pts},
                   {"base_scale", kernel_quad.base_scale}}}};
  j["glue"] = {{"bump_order", glue.bump_order},
               {"fd_theta", glue.fd_theta},
               {"interior_start", glue.interior_start},
               {"interior_full", glue.interior_full}};
  j["current"] = {{"normal", current.normal_pts},
                  {"tangential", current.tangential_pts},
                  {"interior", current.interior_pts},
                  {"fd_theta", current.fd_theta},
                  {"refine", current.refine_levels},
                  {"prune_eta", current.prune_eta},
                  {"rho_floor", current.rho_floor}};
  j["extension"] = {{"samples", extension_samples}, {"rho_lo", ext_rho_lo},
                    {"rho_hi", ext_rho_hi},         {"cr_grid", cr_grid},
                    {"cr_extent", cr_extent},       {"cr_step", cr_step},
                    {"probe_rho_lo", probe_rho_lo}, {"probe_rho_hi", probe_rho_hi}};
  j["analysis"] = {
      {"q", q},
      {"lq_budget", lq_budget},
      {"th0",
       {{"N", th0.vanish_order},
        {"rays", th0.ray_count},
        {"levels", th0.ray_levels},
        {"lq_budget", th0.lq_budget},
        {"on_x_samples", th0.on_x_samples},
        {"on_x_tol", th0.on_x_tol},
        {"decay_factor", th0.decay_factor}}},
      {"schur",
       {{"eps", schur.eps},
        {"N", schur.weight_power},
        {"z_probes", schur.z_probes},
        {"shell_depth", schur.shell_depth},
        {"quad",
         {{"normal", schur.quad.normal_pts},
          {"tangential", schur.quad.tangential_pts}}}}},
      {"disc",
       {{"mode", disc.mode_sup ? "sup" : "q"},
        {"q", disc.q},
        {"radius_factor", disc.radius_factor},
        {"bases_per_ball", disc.bases_per_ball}}}};
  j["checks"] = {{"coverage_min", coverage_min},
                 {"coverage_samples", coverage_samples},
                 {"ft_tol", ft_tol},
                 {"extension_tol", extension_tol},
                 {"reproduction_tol", reproduction_tol},
                 {"hefer_tol", hefer_tol},
                 {"cr_noise_factor", cr_noise_factor}};
  return j.dump(2) + "\n";
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw HolexError("config: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ScenarioConfig::from_json_text(ss.str());
}

ScenarioConfig builtin_scenario(const std::string& name) {
  ScenarioConfig c;
  c.dim = 2;
  c.cover.box_min.assign(4, -1.1);
  c.cover.box_max.assign(4, 1.1);
  if (name == "smooth-hyperplane") {
    c.name = name;
    c.seed = 42;
    c.f = MultiPoly::variable(2, 1);  // X = {z_2 = 0}
    c.locus = SingularLocus::smooth();
    c.h_type = "polynomial";
    c.h_poly = MultiPoly::variable(2, 0);  // h = z_1 restricted to X
    c.cover = CoverParams{0.24, 1.0, 0.2, 6000, c.seed, 0.1, 16, 1e-10,
                          c.cover.box_min, c.cover.box_max};
    c.classify.metric_C = 1.0;
    c.classify.c = c.cover.c;
    c.weight_power = 3;
    return c;
  }
  if (name == "cusp-boundary") {
    c.name = name;
    c.seed = 43;
    // f = z_2^2 - (z_1 - 1)^3, singular at (1, 0) on bD
    MultiPoly f(2);
    f.add_term({0, 2}, 1.0);
    f.add_term({3, 0}, -1.0);
    f.add_term({2, 0}, 3.0);
    f.add_term({1, 0}, -3.0);
    f.add_term({0, 0}, 1.0);
    c.f = f;
    CPoint sing(2);
    sing[0] = 1.0;
    sing[1] = 0.0;
    c.locus = SingularLocus::at({sing});
    c.h_type = "polynomial";
    c.h_poly = MultiPoly::variable(2, 0);
    c.cover = CoverParams{0.24, 1.0, 0.2, 6000, c.seed, 0.1, 16, 1e-10,
                          c.cover.box_min, c.cover.box_max};
    c.classify.metric_C = 1.0;
    c.classify.c = c.cover.c;
    c.weight_power = 3;
    return c;
  }
  throw HolexError("builtin_scenario: unknown name '" + name + "'");
}

}  // namespace holex
