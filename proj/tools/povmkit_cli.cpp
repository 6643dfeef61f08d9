// Copyright 2026 The povmkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Every subcommand reads files, calls the library and
// writes files; failures print a JSON envelope on stderr.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "povmkit/povmkit.hpp"

namespace {

using namespace povmkit;
using nlohmann::json;

int verbosity = 1;

void emit(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(1) << '\n';
  } else {
    write_json(out, j);
    if (verbosity >= 2) std::cerr << "wrote " << out << '\n';
  }
}

ComplexMatrix load_state(const std::string& path, const std::string& ket, int n_system) {
  if (!path.empty() && !ket.empty()) fail(ErrorCode::InvalidArgument, "give either --state or --ket");
  ComplexMatrix rho;
  if (!path.empty()) {
    rho = state_from_json(read_json(path));
  } else {
    rho = basis_state(ket.empty() ? std::string(static_cast<std::size_t>(n_system), '0') : ket);
  }
  if (rho.rows() != (Eigen::Index{1} << n_system)) {
    fail(ErrorCode::DimensionMismatch, "state dimension " + std::to_string(rho.rows()) + " does not match " +
                                           std::to_string(n_system) + " system qubits");
  }
  return rho;
}

json distribution_json(const OutcomeDistribution& d, int n_bits) { return distribution_to_json(d, n_bits); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"povmkit: generalized measurements with dynamic circuits"};
  app.require_subcommand(1);
  app.add_option("-v,--verbosity", verbosity, "0 plain errors, 1 JSON error envelope (default), 2 chatty")
      ->check(CLI::Range(0, 2));
  std::string active;

  // povm sic
  auto* povm_cmd = app.add_subcommand("povm", "construct standard POVMs");
  povm_cmd->require_subcommand(1);
  auto* sic_cmd = povm_cmd->add_subcommand("sic", "SIC-POVM on n qubits");
  int sic_qubits = 1;
  std::string sic_out;
  sic_cmd->add_option("--qubits", sic_qubits, "number of qubits (1 or 2)")->required();
  sic_cmd->add_option("--out", sic_out, "output POVM JSON (stdout when omitted)");

  // build
  auto* build_cmd = app.add_subcommand("build", "circuit realising a POVM");
  std::string build_scheme_name, build_povm, build_out;
  build_cmd->add_option("--scheme", build_scheme_name, "naimark | binary | hybrid")->required();
  build_cmd->add_option("--povm", build_povm, "POVM JSON")->required()->check(CLI::ExistingFile);
  build_cmd->add_option("--out", build_out, "output circuit JSON")->required();

  // compile
  auto* compile_cmd = app.add_subcommand("compile", "approximate compilation at a CNOT budget");
  std::string comp_circuit, comp_out;
  int comp_budget = 0;
  CompileOptions comp_opts;
  compile_cmd->add_option("--circuit", comp_circuit, "circuit JSON")->required()->check(CLI::ExistingFile);
  compile_cmd->add_option("--budget", comp_budget, "CNOTs along one execution path")->required()->check(CLI::NonNegativeNumber);
  compile_cmd->add_option("--seeds", comp_opts.seeds, "optimizer restarts")->check(CLI::PositiveNumber);
  compile_cmd->add_option("--seed", comp_opts.seed, "base seed");
  compile_cmd->add_option("--max-iterations", comp_opts.max_iterations, "per restart")->check(CLI::PositiveNumber);
  compile_cmd->add_option("--jobs", comp_opts.jobs, "parallel restarts")->check(CLI::PositiveNumber);
  compile_cmd->add_option("--out", comp_out, "output circuit JSON")->required();

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "exact or sampled execution");
  std::string sim_circuit, sim_state, sim_ket, sim_noise, sim_out;
  std::uint64_t sim_shots = 0, sim_seed = 1234;
  sim_cmd->add_option("--circuit", sim_circuit, "circuit JSON")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--state", sim_state, "state JSON ({\"ket\": ...} or {\"rho\": ...})")->check(CLI::ExistingFile);
  sim_cmd->add_option("--ket", sim_ket, "computational basis input, qubit 0 rightmost (default all zeros)");
  sim_cmd->add_option("--noise", sim_noise, "noise model JSON")->check(CLI::ExistingFile);
  sim_cmd->add_option("--shots", sim_shots, "sample this many shots (exact probabilities when 0)");
  sim_cmd->add_option("--seed", sim_seed, "sampling seed");
  sim_cmd->add_option("--out", sim_out, "output JSON (stdout when omitted)");

  // tomography
  auto* tomo_cmd = app.add_subcommand("tomography", "detector or state reconstruction");
  tomo_cmd->require_subcommand(1);
  auto* det_cmd = tomo_cmd->add_subcommand("detector", "reconstruct a POVM from counts on Pauli preparations");
  std::string det_counts, det_target, det_out;
  int det_qubits = 1, det_boot = 0;
  std::uint64_t det_seed = 1234;
  det_cmd->add_option("--counts", det_counts, "CSV state_index,outcome_bitstring,count")->required()->check(CLI::ExistingFile);
  det_cmd->add_option("--qubits", det_qubits, "system qubits (preparations: 6^n Pauli states)")->required();
  det_cmd->add_option("--target", det_target, "target POVM JSON for the fidelity")->check(CLI::ExistingFile);
  det_cmd->add_option("--bootstrap", det_boot, "bootstrap resamples (needs --target)")->check(CLI::NonNegativeNumber);
  det_cmd->add_option("--seed", det_seed, "bootstrap seed");
  det_cmd->add_option("--out", det_out, "output JSON (stdout when omitted)");
  auto* st_cmd = tomo_cmd->add_subcommand("state", "reconstruct states from counts of a known POVM");
  std::string st_counts, st_povm, st_out;
  st_cmd->add_option("--counts", st_counts, "CSV state_index,outcome_bitstring,count")->required()->check(CLI::ExistingFile);
  st_cmd->add_option("--povm", st_povm, "measured POVM JSON")->required()->check(CLI::ExistingFile);
  st_cmd->add_option("--out", st_out, "output JSON (stdout when omitted)");

  // crem
  auto* crem_cmd = app.add_subcommand("crem", "conditional readout error mitigation of a dynamic circuit");
  std::string crem_circuit, crem_cal, crem_state, crem_ket, crem_out;
  std::uint64_t crem_shots = 0, crem_seed = 1234;
  crem_cmd->add_option("--circuit", crem_circuit, "circuit JSON")->required()->check(CLI::ExistingFile);
  crem_cmd->add_option("--calibration", crem_cal, "calibration JSON")->required()->check(CLI::ExistingFile);
  crem_cmd->add_option("--state", crem_state, "input state JSON")->check(CLI::ExistingFile);
  crem_cmd->add_option("--ket", crem_ket, "computational basis input (default all zeros)");
  crem_cmd->add_option("--shots", crem_shots, "shots per circuit variant (exact when 0)");
  crem_cmd->add_option("--seed", crem_seed, "sampling seed");
  crem_cmd->add_option("--out", crem_out, "output JSON (stdout when omitted)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "experiment sweeps writing figure CSVs");
  sweep_cmd->require_subcommand(1);
  std::string sweep_config, sweep_out;
  int sweep_jobs = 0;
  std::vector<CLI::App*> sweeps;
  for (const char* name : {"fidelity", "noise-grid", "crem-study"}) {
    auto* s = sweep_cmd->add_subcommand(name, std::string(name) + " sweep");
    s->add_option("--config", sweep_config, "experiment config JSON")->required()->check(CLI::ExistingFile);
    s->add_option("--out", sweep_out, "output directory")->required();
    s->add_option("--jobs", sweep_jobs, "parallel cells (overrides the config)")->check(CLI::PositiveNumber);
    sweeps.push_back(s);
  }

  // resources
  auto* res_cmd = app.add_subcommand("resources", "closed-form resource estimate");
  std::string res_scheme;
  int res_n = 1;
  std::uint64_t res_m = 4;
  res_cmd->add_option("--scheme", res_scheme, "naimark | binary | hybrid")->required();
  res_cmd->add_option("--n", res_n, "system qubits")->required();
  res_cmd->add_option("--M", res_m, "number of POVM elements")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    if (verbosity >= 1) {
      std::cerr << json{{"error", {{"code", "UsageError"}, {"message", e.what()}}}}.dump() << '\n';
    } else {
      std::cerr << e.what() << '\n';
    }
    return 2;
  }

  try {
    if (*povm_cmd) {
      active = "povm sic";
      const Povm p = sic_povm(sic_qubits);
      const ValidationReport r = validate(p);
      if (!r.complete || !r.psd) fail(ErrorCode::IncompletePovm, "constructed SIC failed validation");
      emit(povm_to_json(p), sic_out);
    } else if (*build_cmd) {
      active = "build";
      const Povm p = povm_from_json(read_json(build_povm));
      const SchemeOutput out = build_scheme(scheme_from_string(build_scheme_name), p);
      write_json(build_out, circuit_to_json(out.circuit));
      std::cout << json{{"scheme", to_string(out.scheme)}, {"counts", counts_to_json(static_counts(out.circuit))},
                        {"out", build_out}}
                       .dump(1)
                << '\n';
    } else if (*compile_cmd) {
      active = "compile";
      const DynamicCircuit c = circuit_from_json(read_json(comp_circuit));
      const CircuitCompilation cc = compile_circuit(c, comp_budget, comp_opts);
      DynamicCircuit outc = cc.circuit;
      outc.metadata["compile"] = {{"distances", cc.distances}, {"max_distance", cc.max_distance},
                                  {"layer_budgets", cc.layer_budgets}, {"seed", comp_opts.seed},
                                  {"seeds", comp_opts.seeds}};
      write_json(comp_out, circuit_to_json(outc));
      std::cout << json{{"budget", comp_budget}, {"max_distance", cc.max_distance}, {"distances", cc.distances},
                        {"counts", counts_to_json(static_counts(outc))}, {"seed", comp_opts.seed}, {"out", comp_out}}
                       .dump(1)
                << '\n';
    } else if (*sim_cmd) {
      active = "simulate";
      const DynamicCircuit c = circuit_from_json(read_json(sim_circuit));
      const ComplexMatrix rho = load_state(sim_state, sim_ket, c.n_system);
      const NoiseModel noise = sim_noise.empty() ? NoiseModel{} : noise_from_json(read_json(sim_noise));
      const OutcomeDistribution d = sim_shots ? sample(c, rho, noise, sim_shots, sim_seed)
                                              : run_exact(c, rho, noise).distribution();
      json j{{"register", distribution_json(d, c.n_clbits)}, {"shots", sim_shots}, {"seed", sim_seed},
             {"total", d.total()}};
      const auto om = outcome_map_from_metadata(c);
      if (!om.empty()) {
        int m = 0;
        for (const auto& [reg, idx] : om) m = std::max(m, idx + 1);
        std::vector<double> elements(static_cast<std::size_t>(m), 0.0);
        for (std::size_t r = 0; r < d.size(); ++r) {
          if (d.values[r] == 0.0) continue;
          const auto it = om.find(r);
          if (it == om.end()) fail(ErrorCode::UnknownOutcome, "register value " + std::to_string(r) + " has no outcome");
          elements[static_cast<std::size_t>(it->second)] += d.values[r];
        }
        j["elements"] = elements;
      }
      emit(j, sim_out);
    } else if (*det_cmd) {
      active = "tomography detector";
      const auto preps = pauli_preparation_set(det_qubits);
      const auto counts = counts_from_csv(read_text(det_counts), preps.size());
      if (counts.size() != preps.size()) {
        fail(ErrorCode::DimensionMismatch, "counts cover " + std::to_string(counts.size()) + " states, expected " +
                                               std::to_string(preps.size()));
      }
      const DetectorTomography tomo(preps);
      const DetectorResult r = tomo.reconstruct(counts);
      json j;
      if (!det_target.empty()) {
        const Povm target = povm_from_json(read_json(det_target));
        const Povm padded = target.size() < r.estimate.size() ? pad_to_power_of_two(target) : target;
        const double f = povm_fidelity(padded, r.estimate);
        std::optional<BootstrapResult> boot;
        if (det_boot > 0) {
          boot = bootstrap(counts, det_boot, det_seed, [&](const std::vector<OutcomeDistribution>& c) {
            return povm_fidelity(padded, tomo.reconstruct(c).estimate);
          });
        }
        j = detector_result_to_json(r, f, boot ? &*boot : nullptr);
        j["seed"] = det_seed;
      } else {
        if (det_boot > 0) fail(ErrorCode::InvalidArgument, "--bootstrap needs --target");
        j = detector_result_to_json(r, std::nan(""));
        j.erase("fidelity");
      }
      emit(j, det_out);
    } else if (*st_cmd) {
      active = "tomography state";
      const Povm p = povm_from_json(read_json(st_povm));
      const StateTomography tomo(p);
      const auto counts = counts_from_csv(read_text(st_counts));
      json states = json::array();
      for (std::size_t i = 0; i < counts.size(); ++i) {
        OutcomeDistribution c = counts[i];
        if (c.size() < p.size()) fail(ErrorCode::LabelMismatch, "outcome labels narrower than the POVM");
        for (std::size_t k = p.size(); k < c.size(); ++k) {
          if (c.values[k] != 0) fail(ErrorCode::LabelMismatch, "count on outcome beyond the POVM");
        }
        c.values.resize(p.size());
        if (c.total() == 0) {
          states.push_back(nullptr);
          continue;
        }
        const StateResult r = tomo.reconstruct(c);
        json s = state_to_json(r.estimate);
        s["state_index"] = i;
        s["residual_norm"] = r.residual_norm;
        s["negative_mass"] = r.negative_mass;
        states.push_back(s);
      }
      emit(json{{"states", states}}, st_out);
    } else if (*crem_cmd) {
      active = "crem";
      const DynamicCircuit c = circuit_from_json(read_json(crem_circuit));
      const NoiseModel noise = calibration_from_json(read_json(crem_cal));
      const ComplexMatrix rho = load_state(crem_state, crem_ket, c.n_system);
      const CremEnsemble ens = build_calibration_ensemble(c);
      std::vector<OutcomeDistribution> p;
      for (std::size_t v = 0; v < ens.variants.size(); ++v) {
        p.push_back(crem_shots ? sample(ens.variants[v], rho, noise, crem_shots, crem_seed + v)
                               : run_exact(ens.variants[v], rho, noise).distribution());
      }
      const CremResult r = crem_mitigate(ens, p, confusion_for_circuit(c, noise));
      const OutcomeDistribution ideal = run_exact(c, rho).distribution();
      json j = crem_report_to_json(r, c.n_clbits, &p[0], &ideal);
      j["shots_per_circuit"] = crem_shots;
      j["seed"] = crem_seed;
      emit(j, crem_out);
    } else if (*sweep_cmd) {
      ExperimentConfig cfg = config_from_json(read_json(sweep_config));
      if (sweep_jobs > 0) cfg.jobs = sweep_jobs;
      std::filesystem::create_directories(sweep_out);
      const std::filesystem::path dir(sweep_out);
      json summary{{"config", config_to_json(cfg)}, {"seed", cfg.seed}};
      if (*sweeps[0]) {
        active = "sweep fidelity";
        const SweepResult r = run_fidelity_sweep(cfg);
        write_text((dir / "fig3.csv").string(), sweep_csv(r));
        summary["best"] = sweep_summary(r, cfg.schemes);
      } else if (*sweeps[1]) {
        active = "sweep noise-grid";
        const auto g = run_noise_grid(cfg);
        write_text((dir / "fig9.csv").string(), grid_csv(g));
        summary["cells"] = g.size();
      } else {
        active = "sweep crem-study";
        const auto rows = run_crem_study(cfg);
        write_text((dir / "fig8.csv").string(), crem_csv(rows));
        summary["rows"] = rows.size();
      }
      write_json((dir / "summary.json").string(), summary);
      std::cout << summary.dump(1) << '\n';
    } else if (*res_cmd) {
      active = "resources";
      std::cout << resource_to_json(resource_estimate(scheme_from_string(res_scheme), res_n, res_m)).dump(1) << '\n';
    }
  } catch (const Error& e) {
    if (verbosity >= 1) {
      std::cerr << json{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"subcommand", active}}}}
                       .dump()
                << '\n';
    } else {
      std::cerr << e.what() << '\n';
    }
    return 1;
  } catch (const std::exception& e) {
    if (verbosity >= 1) {
      std::cerr << json{{"error", {{"code", "InternalError"}, {"message", e.what()}, {"subcommand", active}}}}.dump() << '\n';
    } else {
      std::cerr << e.what() << '\n';
    }
    return 1;
  }
  return 0;
}
