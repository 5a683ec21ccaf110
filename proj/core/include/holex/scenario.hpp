#pragma once

#include <cstdint>
#include <string>

#include "holex/analysis.hpp"
#include "holex/covering.hpp"
#include "holex/currents.hpp"
#include "holex/glue.hpp"
#include "holex/variety.hpp"

namespace holex {

/// One experiment: domain, hypersurface, data h, and every knob of the
/// pipeline. Parsed from the JSON config format documented in the README;
/// all tolerances and budgets live here, not in code.
struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  int workers = 1;

  // domain
  std::string domain_family = "unit-ball";
  int dim = 2;
  CMatrix domain_matrix;  // ellipsoid A / perturbation B (family-dependent)

  // variety and data
  MultiPoly f{2};
  SingularLocus locus = SingularLocus::newton();
  std::string h_type = "polynomial";  // "polynomial" | "formula"
  MultiPoly h_poly{2};
  std::string h_formula;  // registry name, e.g. "cusp_parameter"

  CoverParams cover;
  ClassifyParams classify;

  // kernels
  int weight_power = 3;  // N
  int jet_order = -1;    // k; -1 derives it from the maximal multiplicity
  double denominator_floor = 1e-12;
  DomainQuadParams kernel_quad;
  double repro_probe_rho = 0.5;  // depth of the calibration probe

  GlueParams glue;
  CurrentParams current;

  // extension evaluation
  int extension_samples = 20;
  double ext_rho_lo = 0.05;
  double ext_rho_hi = 0.16;
  int cr_grid = 4;
  double cr_extent = 0.35;
  double cr_step = 1e-4;
  double probe_rho_lo = 0.08;
  double probe_rho_hi = 0.15;

  // analysis
  double q = 2.0;
  int lq_budget = 20000;
  Th0Params th0;
  SchurParams schur;
  DiscParams disc;

  // check tolerances
  double coverage_min = 0.99;
  int coverage_samples = 2000;
  double ft_tol = 1e-2;
  double extension_tol = 1e-2;
  double reproduction_tol = 1e-2;
  double hefer_tol = 1e-10;
  double cr_noise_factor = 10.0;

  void validate() const;

  DefiningFunction make_domain() const;
  BranchValueFn make_h() const;
  double h_sup_estimate() const;  // sup of |h| over the closed domain box

  static ScenarioConfig from_json_text(const std::string& text);
  std::string to_canonical_json() const;
};

/// Load a config from a file path.
ScenarioConfig load_scenario(const std::string& path);

/// Built-in scenarios at desk scale (n = 2, unit ball).
ScenarioConfig builtin_scenario(const std::string& name);

}  // namespace holex
