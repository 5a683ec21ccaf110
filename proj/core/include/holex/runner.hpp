#pragma once

#include <memory>
#include <optional>
#include <string>

#include "holex/report.hpp"
#include "holex/scenario.hpp"

namespace holex {

/// Assembled pipeline state shared by the stages.
struct Pipeline {
  ScenarioConfig cfg;
  DefiningFunction df = DefiningFunction::unit_ball(2);
  BranchValueFn h;
  double h_sup = 1.0;
  int k = 1;  // jet order (maximal branch multiplicity unless configured)

  std::optional<Covering> covering;
  std::vector<Classification> classes;
  std::shared_ptr<GlobalExtension> ext;
  std::optional<HeferForm> hefer;
  std::shared_ptr<ResidueCurrent> current;
};

Pipeline make_pipeline(const ScenarioConfig& cfg);

/// Stages. Each appends its checks/values to the report and writes its
/// artifacts under out_dir. They assume their prerequisites are present in
/// the pipeline (the CLI loads artifacts or reruns earlier stages).
void stage_cover(Pipeline& p, const std::string& out_dir, Report& rep);
void stage_classify(Pipeline& p, const std::string& out_dir, Report& rep);
void stage_extend(Pipeline& p, const std::string& out_dir, Report& rep);
void stage_kernel_check(Pipeline& p, const std::string& out_dir, Report& rep);
void stage_current(Pipeline& p, const std::string& out_dir, Report& rep);
void stage_extension(Pipeline& p, const std::string& out_dir, Report& rep);
void stage_norms(Pipeline& p, const std::string& out_dir, Report& rep);

/// Recompute covering invariants and artifact hashes against the stored
/// covering file.
void stage_verify(Pipeline& p, const std::string& out_dir, Report& rep);

/// The whole pipeline: cover -> classify -> extend -> th0 -> kernels ->
/// current -> extension -> norms -> report. Stage failures are recorded with
/// the stage name; partial artifacts are preserved.
Report run_scenario(const ScenarioConfig& cfg, const std::string& out_dir);

}  // namespace holex
