#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "porofrac/bench.hpp"
#include "porofrac/config.hpp"
#include "porofrac/io.hpp"
#include "porofrac/presets.hpp"

using namespace porofrac;
using nlohmann::json;

namespace {

void apply_overrides(ScenarioConfig& cfg, CoupledScenario& sc) {
  if (cfg.young) sc.mat.young = *cfg.young;
  if (cfg.poisson) sc.mat.poisson = *cfg.poisson;
  if (cfg.biot_b) sc.mat.biot_b = *cfg.biot_b;
  if (cfg.biot_m) sc.mat.biot_m = *cfg.biot_m;
  if (cfg.k_m0) sc.mat.k_m0 = *cfg.k_m0;
  if (cfg.phi_m0) sc.mat.phi_m0 = *cfg.phi_m0;
  if (cfg.lambda_f) sc.mat.lambda_f = *cfg.lambda_f;
  if (cfg.friction) {
    sc.mat.friction = *cfg.friction;
    std::fill(sc.friction.begin(), sc.friction.end(), *cfg.friction);
  }
  if (cfg.d0) {
    sc.mat.d0 = *cfg.d0;
    std::fill(sc.d0.begin(), sc.d0.end(), *cfg.d0);
  }
  if (cfg.contact_c) sc.contact_c = *cfg.contact_c;
}

int run_scenario(ScenarioConfig cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  json summary;
  summary["preset"] = cfg.preset;
  summary["contact"] = cfg.contact_method == ContactMethod::NsNewton ? "ns-newton" : "active-set";
  summary["coupling"] = cfg.coupling_method == CouplingMethod::Gp ? "gp" : "gu";
  summary["model"] = cfg.variant == ModelVariant::Original ? "original" : "modified";
  summary["stopping"] = {
      {"contact_relative_residual", 1e-6},
      {"flow_relative_residual", 1e-5},
      {"flow_max_normalized_variation", 1e-4},
      {"coupling_relative_residual_or_increment", 1e-6},
      {"flow_max_newton_iterations", 50}};

  if (cfg.preset == "compression") {
    MechSetup setup = make_compression_setup(200);
    if (cfg.young) setup.scenario.young = *cfg.young;
    if (cfg.poisson) setup.scenario.poisson = *cfg.poisson;
    ContactSystem state = ContactSystem::zeros(*setup.mesh, cfg.contact_c.value_or(1e9));
    state.lambda_n.setConstant(100.0);
    ContactStats stats = cfg.contact_method == ContactMethod::NsNewton
                             ? ns_newton_solve(*setup.mesh, setup.scenario, state)
                             : active_set_solve(*setup.mesh, setup.scenario, state);
    MechSystem sys = assemble_elasticity(*setup.mesh, setup.scenario);
    write_face_csv(*setup.mesh, sys, state, cfg.out_dir + "/compression_faces.csv");
    write_iteration_csv(stats, cfg.out_dir + "/compression_iterations.csv");
    CompressionErrors err = compression_errors(*setup.mesh, sys, state, setup.oracle);
    summary["converged"] = stats.converged;
    summary["iterations"] = stats.iterations;
    summary["err_jump_rel"] = err.jump_rel;
    summary["err_lambda_rel"] = err.lambda_rel;
    std::cout << "compression: converged=" << stats.converged << " iterations=" << stats.iterations
              << " err_lambda=" << err.lambda_rel << "\n";
  } else if (cfg.preset == "network6") {
    NetworkBench nb = bench_network(cfg.refine, cfg.contact_method, "", cfg.out_dir);
    summary["converged"] = nb.converged;
    summary["iterations"] = nb.iterations;
    json fr = json::array();
    for (auto& f : nb.fractures)
      fr.push_back({{"fracture", f.fracture},
                    {"open", f.n_open},
                    {"stick", f.n_stick},
                    {"slip", f.n_slip}});
    summary["fractures"] = fr;
    std::cout << "network6: converged=" << nb.converged << " iterations=" << nb.iterations << "\n";
  } else if (cfg.preset == "drying-plane") {
    DryingSetup setup =
        make_drying_setup(cfg.contact_method, cfg.coupling_method, cfg.variant, false);
    apply_overrides(cfg, setup.scenario);
    TransientOptions opt;
    opt.t_end = cfg.t_end;
    opt.dt_init = cfg.dt_init;
    opt.ts.dt_max = cfg.dt_max;
    opt.ts.growth = cfg.growth;
    opt.snapshot_every = cfg.snapshot_every;
    opt.out_dir = cfg.out_dir;
    TransientResult res = run_transient(setup.scenario, opt);
    write_fracture_flow_csv(*setup.mesh, res.final_state.flow, setup.scenario.mat.laws,
                            cfg.out_dir + "/fracture_flow.csv");
    summary["completed"] = res.completed;
    summary["steps"] = res.records.size();
    summary["total_outer_iterations"] = res.total_outer;
    summary["total_flow_iterations"] = res.total_flow;
    summary["total_contact_iterations"] = res.total_contact;
    if (!res.completed) summary["failure"] = res.failure;
    std::cout << "drying-plane: completed=" << res.completed << " steps=" << res.records.size()
              << " outer=" << res.total_outer << "\n";
    if (!res.completed) {
      std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << "\n";
      return 2;
    }
  } else {
    std::cerr << "unknown preset '" << cfg.preset << "'\n";
    return 1;
  }
  std::ofstream(cfg.out_dir + "/summary.json") << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-phase flow in deformable fractured porous media with frictional contact"};
  app.require_subcommand(1);

  std::string config_path, out_override, contact_str, coupling_str, model_str;

  auto* run = app.add_subcommand("run", "run a scenario from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--out", out_override, "output directory");
  run->add_option("--contact", contact_str, "ns-newton | active-set");
  run->add_option("--coupling", coupling_str, "gp | gu");
  run->add_option("--model", model_str, "original | modified");

  auto* bench = app.add_subcommand("bench", "convergence benchmarks");
  int levels = 3, refine = 0;
  std::string reference, bench_kind, bench_out = "bench_out";
  bench->add_option("kind", bench_kind, "compression | network")->required();
  bench->add_option("--levels", levels, "refinement levels (compression)");
  bench->add_option("--refine", refine, "refinement level (network)");
  bench->add_option("--reference", reference, "reference face CSV (network)");
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--contact", contact_str, "ns-newton | active-set");

  CLI11_PARSE(app, argc, argv);

  try {
    ContactMethod method = contact_str == "ns-newton" ? ContactMethod::NsNewton
                                                      : ContactMethod::ActiveSet;
    if (run->parsed()) {
      ScenarioConfig cfg = parse_config_file(config_path);
      if (!out_override.empty()) cfg.out_dir = out_override;
      if (!contact_str.empty())
        cfg.contact_method = contact_str == "ns-newton" ? ContactMethod::NsNewton
                                                        : ContactMethod::ActiveSet;
      if (!coupling_str.empty())
        cfg.coupling_method = coupling_str == "gu" ? CouplingMethod::Gu : CouplingMethod::Gp;
      if (!model_str.empty())
        cfg.variant = model_str == "modified" ? ModelVariant::Modified : ModelVariant::Original;
      return run_scenario(cfg);
    }
    if (bench->parsed()) {
      if (bench_kind == "compression") {
        std::vector<int> counts;
        for (int i = 0; i < levels; ++i) counts.push_back(100 << i);
        CompressionBench cb = bench_compression(counts, method, bench_out);
        std::cout << "order_jump=" << cb.order_jump << " order_lambda=" << cb.order_lambda << "\n";
        for (auto& l : cb.levels)
          std::cout << "  n=" << l.n_faces << " err_jump=" << l.errors.jump_rel
                    << " err_lambda=" << l.errors.lambda_rel << " its=" << l.iterations << "\n";
      } else if (bench_kind == "network") {
        NetworkBench nb = bench_network(refine, method, reference, bench_out);
        std::cout << "network: converged=" << nb.converged << " iterations=" << nb.iterations
                  << "\n";
        for (auto& f : nb.fractures)
          std::cout << "  fracture " << f.fracture << ": open=" << f.n_open
                    << " stick=" << f.n_stick << " slip=" << f.n_slip << "\n";
        if (nb.jump_diff_rel >= 0) std::cout << "  jump diff vs reference: " << nb.jump_diff_rel << "\n";
      } else {
        std::cerr << "unknown bench kind\n";
        return 1;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
