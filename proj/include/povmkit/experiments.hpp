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

#ifndef POVMKIT_EXPERIMENTS_HPP
#define POVMKIT_EXPERIMENTS_HPP

// End-to-end studies: build each scheme, compile it at a list of path CNOT
// budgets, simulate it on the Pauli preparation set under a noise model,
// reconstruct the realised POVM and score it against the target.

#include <atomic>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "povmkit/compiler.hpp"
#include "povmkit/mitigation.hpp"
#include "povmkit/schemes.hpp"
#include "povmkit/sic.hpp"
#include "povmkit/simulator.hpp"
#include "povmkit/tomography.hpp"

namespace povmkit {

enum class Mitigation { None, Rem, Crem };

inline std::string to_string(Mitigation m) {
  switch (m) {
    case Mitigation::None: return "none";
    case Mitigation::Rem: return "rem";
    case Mitigation::Crem: return "crem";
  }
  return "none";
}

inline Mitigation mitigation_from_string(const std::string& s) {
  if (s == "none") return Mitigation::None;
  if (s == "rem") return Mitigation::Rem;
  if (s == "crem") return Mitigation::Crem;
  fail(ErrorCode::InvalidArgument, "unknown mitigation '" + s + "' (none, rem, crem)");
}

struct ExperimentConfig {
  int n_qubits = 2;
  std::optional<Povm> povm;  // SIC on n_qubits when empty
  std::vector<Scheme> schemes{Scheme::Naimark, Scheme::Binary, Scheme::Hybrid};
  std::vector<int> budgets{9, 12, 15, 18, 21, 23, 26, 29, 32, 35};
  NoiseModel noise;
  std::uint64_t shots = 0;  // 0: exact probabilities
  std::uint64_t seed = 1234;
  int bootstrap = 0;
  Mitigation mitigation = Mitigation::None;
  CompileOptions compile;
  int jobs = 1;
  // noise grid
  std::vector<double> grid_eps_idle{0.01, 0.03, 0.05};
  std::vector<double> grid_eps_cnot{0.005, 0.01, 0.015, 0.02, 0.025, 0.03};
  // CREM study
  std::vector<double> crem_eps{0.02, 0.05, 0.1};
  std::vector<double> crem_eps_qnd{0.0, 0.02, 0.04, 0.06, 0.08, 0.1};
  int crem_circuits = 1;

  Povm target() const { return povm ? *povm : sic_povm(n_qubits); }
};

inline void check_config(const ExperimentConfig& c) {
  if (c.n_qubits < 1 || c.n_qubits > 3) fail(ErrorCode::InvalidArgument, "n_qubits must be 1, 2 or 3");
  if (c.schemes.empty()) fail(ErrorCode::InvalidArgument, "no schemes selected");
  if (c.budgets.empty()) fail(ErrorCode::InvalidArgument, "no budgets given");
  for (std::size_t i = 0; i < c.budgets.size(); ++i) {
    if (c.budgets[i] < 0) fail(ErrorCode::InvalidArgument, "budgets must be non-negative");
    if (i > 0 && c.budgets[i] <= c.budgets[i - 1]) fail(ErrorCode::InvalidArgument, "budgets must be ascending");
  }
  if (c.bootstrap < 0 || c.bootstrap == 1) fail(ErrorCode::InvalidArgument, "bootstrap B must be 0 or at least 2");
  if (c.bootstrap > 0 && c.shots == 0) fail(ErrorCode::InvalidArgument, "bootstrap needs finite shots");
  if (c.jobs < 1) fail(ErrorCode::InvalidArgument, "jobs must be positive");
  if (c.crem_circuits < 1) fail(ErrorCode::InvalidArgument, "crem_circuits must be positive");
  check_noise(c.noise);
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  if (!j.is_object()) fail(ErrorCode::ParseError, "config must be a JSON object");
  try {
    c.n_qubits = j.value("n_qubits", c.n_qubits);
    if (j.contains("povm")) {
      if (j["povm"].is_string()) {
        if (j["povm"] != "sic") fail(ErrorCode::ParseError, "config.povm: only \"sic\" or an inline POVM document");
      } else {
        c.povm = povm_from_json(j["povm"]);
      }
    }
    if (j.contains("schemes")) {
      c.schemes.clear();
      for (const auto& s : j["schemes"]) c.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    if (j.contains("budgets")) c.budgets = j["budgets"].get<std::vector<int>>();
    if (j.contains("noise")) c.noise = noise_from_json(j["noise"]);
    c.shots = j.value("shots", c.shots);
    c.seed = j.value("seed", c.seed);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    if (j.contains("mitigation")) c.mitigation = mitigation_from_string(j["mitigation"].get<std::string>());
    c.jobs = j.value("jobs", c.jobs);
    if (j.contains("compile")) {
      const auto& k = j["compile"];
      c.compile.seeds = k.value("seeds", c.compile.seeds);
      c.compile.seed = k.value("seed", c.compile.seed);
      c.compile.max_iterations = k.value("max_iterations", c.compile.max_iterations);
      c.compile.gradient_tol = k.value("gradient_tol", c.compile.gradient_tol);
      c.compile.stop_distance = k.value("stop_distance", c.compile.stop_distance);
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      if (g.contains("eps_idle")) c.grid_eps_idle = g["eps_idle"].get<std::vector<double>>();
      if (g.contains("eps_cnot")) c.grid_eps_cnot = g["eps_cnot"].get<std::vector<double>>();
    }
    if (j.contains("crem")) {
      const auto& g = j["crem"];
      if (g.contains("eps")) c.crem_eps = g["eps"].get<std::vector<double>>();
      if (g.contains("eps_qnd")) c.crem_eps_qnd = g["eps_qnd"].get<std::vector<double>>();
      c.crem_circuits = g.value("circuits", c.crem_circuits);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  check_config(c);
  return c;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["n_qubits"] = c.n_qubits;
  if (c.povm) {
    j["povm"] = povm_to_json(*c.povm);
  } else {
    j["povm"] = "sic";
  }
  j["schemes"] = nlohmann::json::array();
  for (Scheme s : c.schemes) j["schemes"].push_back(to_string(s));
  j["budgets"] = c.budgets;
  j["noise"] = noise_to_json(c.noise);
  j["shots"] = c.shots;
  j["seed"] = c.seed;
  j["bootstrap"] = c.bootstrap;
  j["mitigation"] = to_string(c.mitigation);
  j["jobs"] = c.jobs;
  j["compile"] = {{"seeds", c.compile.seeds},
                  {"seed", c.compile.seed},
                  {"max_iterations", c.compile.max_iterations},
                  {"gradient_tol", c.compile.gradient_tol},
                  {"stop_distance", c.compile.stop_distance}};
  j["grid"] = {{"eps_idle", c.grid_eps_idle}, {"eps_cnot", c.grid_eps_cnot}};
  j["crem"] = {{"eps", c.crem_eps}, {"eps_qnd", c.crem_eps_qnd}, {"circuits", c.crem_circuits}};
  return j;
}

namespace detail {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots; the first exception is rethrown.
inline void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

inline std::uint64_t cell_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
  std::vector<std::uint64_t> v{base};
  v.insert(v.end(), keys.begin(), keys.end());
  std::seed_seq s(v.begin(), v.end());
  std::uint32_t w[2];
  s.generate(w, w + 2);
  return (std::uint64_t{w[0]} << 32) | w[1];
}

}  // namespace detail

/// One scheme compiled at one path budget.
struct CompiledCell {
  Scheme scheme = Scheme::Naimark;
  int budget = 0;
  SchemeOutput scheme_output;  // circuit replaced by the compiled one
  CircuitCompilation compilation;
  CountsReport counts;
};

/// Every scheme compiled at every budget (see compile_circuit_sweep for the
/// budget semantics), scheme-major.
inline std::vector<CompiledCell> compile_cells(const ExperimentConfig& cfg) {
  check_config(cfg);
  const Povm target = cfg.target();
  const std::size_t nb = cfg.budgets.size();
  std::vector<CompiledCell> cells(cfg.schemes.size() * nb);
  CompileOptions opts = cfg.compile;
  opts.jobs = 1;
  detail::parallel_for(cfg.schemes.size(), cfg.jobs, [&](std::size_t s) {
    const SchemeOutput built = build_scheme(cfg.schemes[s], target);
    std::vector<CircuitCompilation> comps = compile_circuit_sweep(built.circuit, cfg.budgets, opts);
    for (std::size_t b = 0; b < nb; ++b) {
      CompiledCell& c = cells[s * nb + b];
      c.scheme = cfg.schemes[s];
      c.budget = cfg.budgets[b];
      c.compilation = std::move(comps[b]);
      c.scheme_output = built;
      c.scheme_output.circuit = c.compilation.circuit;
      c.counts = static_counts(c.compilation.circuit);
    }
  });
  return cells;
}

/// Raw register statistics of a cell: for each preparation, one distribution
/// per circuit that has to be run (1, or 2^n_mid with CREM), flattened
/// preparation-major.
struct CellStatistics {
  std::vector<OutcomeDistribution> raw;
  std::size_t circuits_per_state = 1;
  std::optional<CremEnsemble> ensemble;
  ConfusionMatrix confusion;
};

inline CellStatistics cell_statistics(const CompiledCell& cell, const std::vector<ComplexMatrix>& preps,
                                      const NoiseModel& noise, Mitigation mitigation, std::uint64_t shots,
                                      std::uint64_t seed) {
  CellStatistics st;
  const DynamicCircuit& circ = cell.scheme_output.circuit;
  st.confusion = confusion_for_circuit(circ, noise);
  std::vector<const DynamicCircuit*> runs{&circ};
  if (mitigation == Mitigation::Crem && !mid_circuit_measurements(circ).empty()) {
    st.ensemble = build_calibration_ensemble(circ);
    runs.clear();
    for (const auto& v : st.ensemble->variants) runs.push_back(&v);
  }
  st.circuits_per_state = runs.size();
  std::mt19937_64 rng(seed);
  for (const auto& rho : preps) {
    for (const DynamicCircuit* c : runs) {
      const OutcomeDistribution p = run_exact(*c, rho, noise).distribution();
      st.raw.push_back(shots ? sample_counts(p, shots, rng) : p);
    }
  }
  return st;
}

/// Element-level statistics per preparation after the selected mitigation.
inline std::vector<OutcomeDistribution> mitigated_elements(const CompiledCell& cell, const CellStatistics& st,
                                                           const std::vector<OutcomeDistribution>& raw,
                                                           Mitigation mitigation) {
  std::vector<OutcomeDistribution> out;
  const std::size_t k = st.circuits_per_state;
  for (std::size_t i = 0; i < raw.size() / k; ++i) {
    OutcomeDistribution reg;
    if (st.ensemble) {
      const std::vector<OutcomeDistribution> group(raw.begin() + static_cast<std::ptrdiff_t>(i * k),
                                                   raw.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
      reg = crem_mitigate(*st.ensemble, group, st.confusion).q;
    } else if (mitigation != Mitigation::None) {
      reg = standard_rem(raw[i], st.confusion);
    } else {
      reg = raw[i];
    }
    out.push_back(element_distribution(cell.scheme_output, reg));
  }
  return out;
}

struct SweepRow {
  Scheme scheme = Scheme::Naimark;
  int budget = 0;
  double fidelity = 0.0;
  double std = 0.0;             // bootstrap; 0 without
  double ideal_fidelity = 0.0;  // same compiled circuit, no noise
  double distance = 0.0;        // worst compiled-block distance
  CountsReport counts;
};

struct SweepResult {
  std::vector<SweepRow> rows;

  /// Row index of the highest fidelity for a scheme.
  std::size_t best(Scheme s) const {
    std::size_t b = rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].scheme == s && (b == rows.size() || rows[i].fidelity > rows[b].fidelity)) b = i;
    }
    if (b == rows.size()) fail(ErrorCode::InvalidArgument, "scheme " + to_string(s) + " not in sweep");
    return b;
  }
  const SweepRow* find(Scheme s, int budget) const {
    for (const auto& r : rows) {
      if (r.scheme == s && r.budget == budget) return &r;
    }
    return nullptr;
  }
};

/// Detector fidelity of one compiled cell under `noise`.
inline SweepRow evaluate_cell(const CompiledCell& cell, const ExperimentConfig& cfg, const NoiseModel& noise,
                              const DetectorTomography& tomo, std::uint64_t seed, bool with_ideal = true) {
  SweepRow row;
  row.scheme = cell.scheme;
  row.budget = cell.budget;
  row.distance = cell.compilation.max_distance;
  row.counts = cell.counts;
  const Povm& target = cell.scheme_output.povm;
  auto score = [&](const CellStatistics& st, const std::vector<OutcomeDistribution>& raw, Mitigation m) {
    return povm_fidelity(target, tomo.reconstruct(mitigated_elements(cell, st, raw, m)).estimate);
  };
  const CellStatistics st = cell_statistics(cell, tomo.preparations(), noise, cfg.mitigation, cfg.shots, seed);
  row.fidelity = score(st, st.raw, cfg.mitigation);
  if (cfg.bootstrap > 0) {
    const BootstrapResult b = bootstrap(st.raw, cfg.bootstrap, seed ^ 0x9e3779b97f4a7c15ull,
                                        [&](const std::vector<OutcomeDistribution>& raw) {
                                          return score(st, raw, cfg.mitigation);
                                        });
    row.std = b.std;
  }
  if (with_ideal) {
    const CellStatistics clean = cell_statistics(cell, tomo.preparations(), {}, Mitigation::None, 0, seed);
    row.ideal_fidelity = score(clean, clean.raw, Mitigation::None);
  }
  return row;
}

inline SweepResult evaluate_cells(const std::vector<CompiledCell>& cells, const ExperimentConfig& cfg,
                                  const NoiseModel& noise, bool with_ideal = true) {
  const DetectorTomography tomo(pauli_preparation_set(cfg.n_qubits));
  SweepResult r;
  r.rows.resize(cells.size());
  detail::parallel_for(cells.size(), cfg.jobs, [&](std::size_t i) {
    const std::uint64_t seed =
        detail::cell_seed(cfg.seed, {static_cast<std::uint64_t>(cells[i].scheme), static_cast<std::uint64_t>(cells[i].budget)});
    r.rows[i] = evaluate_cell(cells[i], cfg, noise, tomo, seed, with_ideal);
  });
  return r;
}

inline SweepResult run_fidelity_sweep(const ExperimentConfig& cfg) {
  return evaluate_cells(compile_cells(cfg), cfg, cfg.noise);
}

struct GridCell {
  double eps_idle = 0.0;
  double eps_cnot = 0.0;
  Scheme scheme = Scheme::Naimark;
  int best_budget = 0;
  double fidelity = 0.0;
};

/// Best-over-budgets fidelity per scheme at every (eps_idle, eps_cnot) point;
/// circuits are compiled once and shared by all points. Other noise settings
/// (readout, QND, idle placement) come from cfg.noise.
inline std::vector<GridCell> run_noise_grid(const ExperimentConfig& cfg,
                                            const std::vector<CompiledCell>* precompiled = nullptr) {
  std::vector<CompiledCell> own;
  if (!precompiled) {
    own = compile_cells(cfg);
    precompiled = &own;
  }
  std::vector<GridCell> out;
  for (double idle : cfg.grid_eps_idle) {
    for (double cnot : cfg.grid_eps_cnot) {
      NoiseModel noise = cfg.noise;
      noise.eps_idle = idle;
      noise.eps_cnot = cnot;
      check_noise(noise);
      const SweepResult r = evaluate_cells(*precompiled, cfg, noise, false);
      for (Scheme s : cfg.schemes) {
        const SweepRow& b = r.rows[r.best(s)];
        out.push_back(GridCell{idle, cnot, s, b.budget, b.fidelity});
      }
    }
  }
  return out;
}

struct CremStudyRow {
  double eps_qnd = 0.0;
  double eps = 0.0;
  double mitigated = 0.0;    // Hellinger distance to the noiseless distribution
  double unmitigated = 0.0;
};

/// Hellinger distances of the two-qubit model circuit with and without CREM,
/// averaged over cfg.crem_circuits random instances (exact probabilities).
inline std::vector<CremStudyRow> run_crem_study(const ExperimentConfig& cfg) {
  std::vector<CremStudyRow> rows;
  std::vector<CremEnsemble> ensembles;
  std::vector<OutcomeDistribution> ideal;
  for (int k = 0; k < cfg.crem_circuits; ++k) {
    const DynamicCircuit c = crem_model_circuit(cfg.seed + static_cast<std::uint64_t>(k));
    ensembles.push_back(build_calibration_ensemble(c));
    ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
    rho(0, 0) = 1;
    ideal.push_back(run_exact(c, rho).distribution());
  }
  for (double qnd : cfg.crem_eps_qnd) {
    for (double eps : cfg.crem_eps) {
      CremStudyRow row{qnd, eps, 0.0, 0.0};
      const NoiseModel noise = crem_model_noise(eps, qnd);
      for (std::size_t k = 0; k < ensembles.size(); ++k) {
        std::vector<OutcomeDistribution> p;
        ComplexMatrix rho = ComplexMatrix::Zero(4, 4);
        rho(0, 0) = 1;
        for (const auto& v : ensembles[k].variants) p.push_back(run_exact(v, rho, noise).distribution());
        const CremResult m = crem_mitigate(ensembles[k], p, confusion_for_circuit(ensembles[k].variants[0], noise));
        row.mitigated += hellinger(m.q, ideal[k]) / static_cast<double>(ensembles.size());
        row.unmitigated += hellinger(p[0], ideal[k]) / static_cast<double>(ensembles.size());
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Output

inline std::string sweep_csv(const SweepResult& r) {
  std::ostringstream os;
  os.precision(12);
  os << "scheme,budget,fidelity,std,distance,ideal_fidelity,cnots,mid_measurements,feed_forward\n";
  for (const auto& row : r.rows) {
    os << to_string(row.scheme) << ',' << row.budget << ',' << row.fidelity << ',' << row.std << ',' << row.distance
       << ',' << row.ideal_fidelity << ',' << row.counts.cnots << ',' << row.counts.mid_measurements << ','
       << row.counts.feed_forward << '\n';
  }
  return os.str();
}

inline std::string grid_csv(const std::vector<GridCell>& g) {
  std::ostringstream os;
  os.precision(12);
  os << "eps_idle,eps_cnot,scheme,best_budget,fidelity\n";
  for (const auto& c : g) {
    os << c.eps_idle << ',' << c.eps_cnot << ',' << to_string(c.scheme) << ',' << c.best_budget << ',' << c.fidelity << '\n';
  }
  return os.str();
}

inline std::string crem_csv(const std::vector<CremStudyRow>& rows) {
  std::ostringstream os;
  os.precision(12);
  os << "eps_qnd,eps,hellinger_mitigated,hellinger_unmitigated\n";
  for (const auto& r : rows) os << r.eps_qnd << ',' << r.eps << ',' << r.mitigated << ',' << r.unmitigated << '\n';
  return os.str();
}

inline nlohmann::json sweep_summary(const SweepResult& r, const std::vector<Scheme>& schemes) {
  nlohmann::json j = nlohmann::json::object();
  for (Scheme s : schemes) {
    const SweepRow& b = r.rows[r.best(s)];
    j[to_string(s)] = {{"best_budget", b.budget}, {"fidelity", b.fidelity}, {"std", b.std},
                       {"distance", b.distance}, {"counts", counts_to_json(b.counts)}};
  }
  return j;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  f << text;
  if (!f) fail(ErrorCode::InvalidArgument, "write to '" + path + "' failed");
}

}  // namespace povmkit

#endif  // POVMKIT_EXPERIMENTS_HPP
