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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Usage: povmkit_acceptance <configs dir> [output dir]
//
// Tolerances and bands are pinned below; nothing here is read from the
// environment except the two paths.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "povmkit/povmkit.hpp"

namespace {

using namespace povmkit;

constexpr double kStatsTol = 1e-9;
constexpr double kKrausTol = 1e-9;
constexpr double kOverlapTol = 1e-8;
constexpr double kSicCompletenessTol = 1e-9;
constexpr double kExactTomoTol = 1e-9;
constexpr std::uint64_t kDetectorShots = 20000;
constexpr int kBootstrapB = 300;
constexpr double kSampledFidelityMin = 0.99;
constexpr double kBootStdLo = 0.0005, kBootStdHi = 0.005;
constexpr double kBaselineTol = 1e-6;
constexpr double kEpsCnot = 0.015, kEpsIdle = 0.05;
constexpr double kHybridLo = 0.60, kHybridHi = 0.80;
constexpr double kNaimarkLo = 0.55, kNaimarkHi = 0.75;
constexpr double kBinaryLo = 0.30, kBinaryHi = 0.55;
constexpr double kCremExactTol = 1e-9;
constexpr double kCremFlatTol = 1e-6;
constexpr double kSlope = -0.5, kSlopeTol = 0.1;
constexpr int kSlopeReps = 50;         // repetitions per Pauli state per shot count
constexpr int kComparisonReps = 4000;  // Haar-random pure states at 100 shots
constexpr double kCompileTol = 1e-4;
constexpr double kIdentityTol = 1e-8;
constexpr int kCompileSeeds = 20;
constexpr double kBruteTol = 1e-9;

int failures = 0;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

void run(int id, const std::string& name, const std::function<void(Outcome&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::printf("%s %2d %s (%.1f s):%s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, o.detail.str().c_str());
  std::fflush(stdout);
}

const std::vector<Scheme> kSchemes{Scheme::Naimark, Scheme::Binary, Scheme::Hybrid};

ComplexMatrix ground(int n) {
  ComplexMatrix rho = ComplexMatrix::Zero(1 << n, 1 << n);
  rho(0, 0) = 1;
  return rho;
}

std::vector<OutcomeDistribution> scheme_statistics(const SchemeOutput& so, const std::vector<ComplexMatrix>& preps,
                                                   std::uint64_t shots, std::mt19937_64& rng) {
  std::vector<OutcomeDistribution> out;
  for (const auto& rho : preps) {
    const OutcomeDistribution e = element_distribution(so, run_exact(so.circuit, rho).distribution());
    out.push_back(shots ? sample_counts(e, shots, rng) : e);
  }
  return out;
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

// P_all = A Q_all for the CREM ensemble, enumerated over every readout error
// pattern. Written independently of the library's assembly rule.
RealMatrix forward_model(const CremEnsemble& e, const ConfusionMatrix& c) {
  const std::size_t nv = e.variants.size();
  const std::size_t no = std::size_t{1} << e.n_clbits;
  RealMatrix a = RealMatrix::Zero(static_cast<Eigen::Index>(nv * no), static_cast<Eigen::Index>(nv * no));
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t x = 0; x < no; ++x) {
      for (std::size_t err = 0; err < no; ++err) {
        double pr = 1.0;
        for (int k = 0; k < e.n_clbits; ++k) {
          const auto& b = c.bits[static_cast<std::size_t>(k)];
          const double flip = ((x >> k) & 1) ? b.eps1 : b.eps0;
          pr *= ((err >> k) & 1) ? flip : 1 - flip;
        }
        std::size_t lands = v;
        for (std::size_t j = 0; j < e.mid_clbits.size(); ++j) {
          if ((err >> e.mid_clbits[j]) & 1) lands ^= std::size_t{1} << j;
        }
        a(static_cast<Eigen::Index>(v * no + (x ^ err)), static_cast<Eigen::Index>(lands * no + x)) += pr;
      }
    }
  }
  return a;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <configs dir> [output dir]\n", argv[0]);
    return 2;
  }
  const std::filesystem::path configs = argv[1];
  const std::filesystem::path out_dir = argc > 2 ? argv[2] : "";
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  run(1, "statistics exactness", [](Outcome& o) {
    double worst = 0.0;
    std::mt19937_64 rng(101);
    for (int n : {1, 2}) {
      const Povm sic = sic_povm(n);
      for (Scheme s : kSchemes) {
        const SchemeOutput so = build_scheme(s, sic);
        for (int k = 0; k < 100; ++k) {
          const ComplexMatrix rho = num::random_density_matrix(1 << n, rng);
          const OutcomeDistribution e = element_distribution(so, run_exact(so.circuit, rho).distribution());
          for (std::size_t i = 0; i < sic.size(); ++i) {
            worst = std::max(worst, std::abs(e.values[i] - (sic[i] * rho).trace().real()));
          }
        }
      }
    }
    o.detail << " max |P - Tr(F rho)| = " << fmt(worst);
    o.require(worst < kStatsTol, "max error < 1e-9");
  });

  run(2, "cumulative Kraus identity", [](Outcome& o) {
    const Povm sic = sic_povm(2);
    const SchemeOutput so = build_scheme(Scheme::Binary, sic);
    double worst = 0.0;
    std::size_t outcomes = 0;
    for (const auto& [reg, idx] : so.outcome_map) {
      const ComplexMatrix a = cumulative_kraus(so, reg);
      worst = std::max(worst, (a.adjoint() * a - so.povm[static_cast<std::size_t>(idx)]).norm());
      ++outcomes;
    }
    o.detail << " " << outcomes << " outcomes, max residual " << fmt(worst);
    o.require(outcomes == 16, "16 outcomes");
    o.require(worst < kKrausTol, "residual < 1e-9");
  });

  run(3, "SIC structure", [](Outcome& o) {
    for (int n : {1, 2}) {
      const Povm sic = sic_povm(n);
      const int d = 1 << n;
      const auto v = rank_one_vectors(sic);
      double worst = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) {
        for (std::size_t j = i + 1; j < v.size(); ++j) {
          const double ov = std::norm(v[i].dot(v[j])) / (v[i].squaredNorm() * v[j].squaredNorm());
          worst = std::max(worst, std::abs(ov - 1.0 / (d + 1)));
        }
      }
      const double resid = validate(sic).completeness_residual;
      o.detail << " d=" << d << ": overlap dev " << fmt(worst) << ", completeness " << fmt(resid) << ";";
      o.require(v.size() == static_cast<std::size_t>(d * d), "d^2 elements");
      o.require(worst < kOverlapTol, "overlaps within 1e-8");
      o.require(resid < kSicCompletenessTol, "completeness < 1e-9");
    }
  });

  run(4, "noiseless detector tomography", [](Outcome& o) {
    const Povm sic = sic_povm(2);
    const auto preps = pauli_preparation_set(2);
    const DetectorTomography tomo(preps);
    std::mt19937_64 rng(404);
    for (Scheme s : kSchemes) {
      const SchemeOutput so = build_scheme(s, sic);
      const auto metric = [&](const std::vector<OutcomeDistribution>& c) {
        return povm_fidelity(so.povm, tomo.reconstruct(c).estimate);
      };
      const double exact = metric(scheme_statistics(so, preps, 0, rng));
      const auto counts = scheme_statistics(so, preps, kDetectorShots, rng);
      const double sampled = metric(counts);
      const BootstrapResult b = bootstrap(counts, kBootstrapB, 4040 + static_cast<std::uint64_t>(s), metric);
      o.detail << " " << to_string(s) << ": exact " << fmt(exact) << ", sampled " << fmt(sampled) << " +- "
               << fmt(b.std) << ";";
      o.require(exact >= 1 - kExactTomoTol, to_string(s) + " exact >= 1-1e-9");
      o.require(sampled >= kSampledFidelityMin, to_string(s) + " sampled >= 0.99");
      o.require(b.std >= kBootStdLo && b.std <= kBootStdHi, to_string(s) + " bootstrap std in [0.0005, 0.005]");
    }
  });

  run(5, "random-outcome baseline", [](Outcome& o) {
    for (int n : {1, 2}) {
      const int d = 1 << n;
      const Povm sic = sic_povm(n);
      const double f = povm_fidelity(sic, uniform_povm(d, sic.size()));
      const double expect = 1.0 / d;
      o.detail << " n=" << n << ": " << fmt(f) << ";";
      o.require(std::abs(f - expect) < kBaselineTol, "fidelity = 1/2^n within 1e-6");
    }
  });

  // Criteria 6 and 7 share one compilation of the three circuits.
  ExperimentConfig fig3 = config_from_json(read_json((configs / "fidelity.json").string()));
  ExperimentConfig grid = config_from_json(read_json((configs / "noise_grid.json").string()));
  std::vector<CompiledCell> cells;
  run(6, "noise-model ordering", [&](Outcome& o) {
    o.require(fig3.noise.eps_cnot == kEpsCnot && fig3.noise.eps_idle == kEpsIdle, "config uses eps_cnot 0.015, eps_idle 0.05");
    o.require(fig3.budgets.size() == 10 && fig3.budgets.front() >= 9 && fig3.budgets.back() <= 35, "10 budgets in [9, 35]");
    cells = compile_cells(fig3);
    const SweepResult r = evaluate_cells(cells, fig3, fig3.noise);
    if (!out_dir.empty()) write_text((out_dir / "fig3.csv").string(), sweep_csv(r));
    const double nb = r.rows[r.best(Scheme::Naimark)].fidelity;
    const double bb = r.rows[r.best(Scheme::Binary)].fidelity;
    const double hb = r.rows[r.best(Scheme::Hybrid)].fidelity;
    o.detail << " best: hybrid " << fmt(hb) << " @" << r.rows[r.best(Scheme::Hybrid)].budget << ", naimark " << fmt(nb)
             << " @" << r.rows[r.best(Scheme::Naimark)].budget << ", binary " << fmt(bb) << " @"
             << r.rows[r.best(Scheme::Binary)].budget;
    o.require(hb > nb && nb > bb, "hybrid best > naimark best > binary best");
    double margin = 1.0;
    for (int b : fig3.budgets) {
      const double h = r.find(Scheme::Hybrid, b)->fidelity;
      margin = std::min({margin, h - r.find(Scheme::Naimark, b)->fidelity, h - r.find(Scheme::Binary, b)->fidelity});
    }
    o.detail << "; min per-budget hybrid margin " << fmt(margin);
    o.require(margin >= 0.0, "hybrid >= both at every budget");
    o.require(hb >= kHybridLo && hb <= kHybridHi, "hybrid band 0.60-0.80");
    o.require(nb >= kNaimarkLo && nb <= kNaimarkHi, "naimark band 0.55-0.75");
    o.require(bb >= kBinaryLo && bb <= kBinaryHi, "binary band 0.30-0.55");
  });

  run(7, "noise-grid structure", [&](Outcome& o) {
    const bool shared = grid.n_qubits == fig3.n_qubits && grid.budgets == fig3.budgets &&
                        grid.schemes == fig3.schemes && grid.compile.seeds == fig3.compile.seeds &&
                        grid.compile.seed == fig3.compile.seed &&
                        grid.compile.max_iterations == fig3.compile.max_iterations && !cells.empty();
    const auto g = run_noise_grid(grid, shared ? &cells : nullptr);
    if (!out_dir.empty()) write_text((out_dir / "fig9.csv").string(), grid_csv(g));
    auto at = [&](double idle, double cnot, Scheme s) {
      for (const auto& c : g) {
        if (c.eps_idle == idle && c.eps_cnot == cnot && c.scheme == s) return c.fidelity;
      }
      fail(ErrorCode::InvalidArgument, "grid point missing");
    };
    const double lo_idle = grid.grid_eps_idle.front(), hi_idle = grid.grid_eps_idle.back();
    const double lo_cnot = grid.grid_eps_cnot.front(), hi_cnot = grid.grid_eps_cnot.back();
    o.require(grid.grid_eps_idle.size() >= 2 && grid.grid_eps_cnot.size() >= 2, "grid has at least 2x2 points");
    for (double cnot : grid.grid_eps_cnot) {
      const double gap_lo = at(lo_idle, cnot, Scheme::Hybrid) - at(lo_idle, cnot, Scheme::Binary);
      const double gap_hi = at(hi_idle, cnot, Scheme::Hybrid) - at(hi_idle, cnot, Scheme::Binary);
      o.require(std::abs(gap_lo) < std::abs(gap_hi), "binary/hybrid gap smaller at low idle (eps_cnot " + fmt(cnot) + ")");
      if (cnot == lo_cnot || cnot == hi_cnot) {
        o.detail << " gap@cnot " << fmt(cnot) << ": idle " << fmt(lo_idle) << " " << fmt(gap_lo) << ", idle "
                 << fmt(hi_idle) << " " << fmt(gap_hi) << ";";
      }
    }
    for (double idle : grid.grid_eps_idle) {
      double drop[3];
      for (int k = 0; k < 3; ++k) drop[k] = at(idle, lo_cnot, kSchemes[k]) - at(idle, hi_cnot, kSchemes[k]);
      o.detail << " drop@idle " << fmt(idle) << ": naimark " << fmt(drop[0]) << ", binary " << fmt(drop[1])
               << ", hybrid " << fmt(drop[2]) << ";";
      o.require(drop[0] > drop[1] && drop[0] > drop[2], "naimark decays fastest at eps_idle " + fmt(idle));
    }
  });

  run(8, "CREM exactness and non-QND behavior", [&](Outcome& o) {
    ExperimentConfig cfg = config_from_json(read_json((configs / "crem_study.json").string()));
    if (!out_dir.empty()) write_text((out_dir / "fig8.csv").string(), crem_csv(run_crem_study(cfg)));
    cfg.crem_eps = {0.02, 0.05, 0.1};
    cfg.crem_eps_qnd = {0.0, 0.02, 0.05, 0.1};
    const auto rows = run_crem_study(cfg);
    double worst_exact = 0.0, worst_flat = 0.0;
    for (double qnd : cfg.crem_eps_qnd) {
      std::vector<const CremStudyRow*> line;
      for (const auto& r : rows) {
        if (r.eps_qnd == qnd) line.push_back(&r);
      }
      if (qnd == 0.0) {
        for (const auto* r : line) worst_exact = std::max(worst_exact, r->mitigated);
        continue;
      }
      for (std::size_t k = 1; k < line.size(); ++k) {
        worst_flat = std::max(worst_flat, std::abs(line[k]->mitigated - line[0]->mitigated));
        o.require(line[k]->unmitigated > line[k - 1]->unmitigated, "unmitigated increases in eps (qnd " + fmt(qnd) + ")");
      }
    }
    o.detail << " mitigated distance at qnd=0: " << fmt(worst_exact) << "; max spread across eps: " << fmt(worst_flat);
    o.require(worst_exact < kCremExactTol, "mitigated < 1e-9 at qnd 0");
    o.require(worst_flat < kCremFlatTol, "mitigated flat in eps within 1e-6");
  });

  run(9, "resource table", [](Outcome& o) {
    struct Entry {
      int n;
      std::uint64_t m, naimark, binary, hybrid;
    };
    // Hand-evaluated upper bounds.
    const Entry table[] = {{1, 4, 16, 32, 16}, {2, 16, 256, 256, 128}, {3, 16, 256, 1024, 256}, {3, 64, 4096, 1536, 768}};
    int checked = 0;
    for (const auto& e : table) {
      const auto nv = resource_estimate(Scheme::Naimark, e.n, e.m).cnot_upper_bound;
      const auto bv = resource_estimate(Scheme::Binary, e.n, e.m).cnot_upper_bound;
      const auto hv = resource_estimate(Scheme::Hybrid, e.n, e.m).cnot_upper_bound;
      o.require(nv == e.naimark && bv == e.binary && hv == e.hybrid,
                "n=" + std::to_string(e.n) + " M=" + std::to_string(e.m));
      if (e.m == (std::uint64_t{1} << (2 * e.n))) o.require(2 * hv == bv, "hybrid = binary/2 at M=4^n");
      checked += 3;
    }
    int rejected = 0;
    for (int n : {1, 2, 3}) {
      for (std::uint64_t m : {4u, 16u, 64u}) {
        if (m > (1u << n) && m <= (1u << (2 * n))) continue;
        try {
          resource_estimate(Scheme::Hybrid, n, m);
          o.require(false, "out-of-regime n=" + std::to_string(n) + " M=" + std::to_string(m) + " rejected");
        } catch (const Error& e) {
          o.require(e.code() == ErrorCode::OutOfRegime, "OutOfRegime code");
          ++rejected;
        }
      }
    }
    o.detail << " " << checked << " entries match, " << rejected << " out-of-regime pairs rejected";
  });

  run(10, "state-tomography scaling", [](Outcome& o) {
    const Povm sic = sic_povm(2);
    const StateTomography tomo(sic);
    const StateTomography pauli(pauli_settings_projectors(2));
    const auto states = pauli_preparation_set(2);
    std::mt19937_64 rng(1010);
    std::vector<double> x, y;
    for (std::uint64_t shots : {100u, 316u, 1000u, 3162u, 10000u}) {
      double inf = 0.0;
      for (int r = 0; r < kSlopeReps; ++r) {
        for (const auto& rho : states) {
          const auto c = sample_counts(outcome_probabilities(sic, rho), shots, rng);
          inf += 1 - num::state_fidelity(tomo.reconstruct(c).estimate, rho);
        }
      }
      inf /= static_cast<double>(kSlopeReps * states.size());
      x.push_back(std::log(static_cast<double>(shots)));
      y.push_back(std::log(inf));
    }
    const double s = slope(x, y);
    double sic_inf = 0.0, pauli_inf = 0.0;
    for (int r = 0; r < kComparisonReps; ++r) {
      const ComplexVector v = num::haar_unitary(4, rng).col(0);
      const ComplexMatrix rho = v * v.adjoint();
      const auto c = sample_counts(outcome_probabilities(sic, rho), 100, rng);
      sic_inf += 1 - num::state_fidelity(tomo.reconstruct(c).estimate, rho);
      pauli_inf += 1 - num::state_fidelity(pauli_settings_tomography(rho, 100, rng, pauli, 2).estimate, rho);
    }
    sic_inf /= kComparisonReps;
    pauli_inf /= kComparisonReps;
    o.detail << " slope " << fmt(s) << "; mean infidelity at 100 shots (Haar pure): SIC " << fmt(sic_inf)
             << ", Pauli " << fmt(pauli_inf);
    o.require(std::abs(s - kSlope) <= kSlopeTol, "slope -0.5 +- 0.1");
    o.require(sic_inf <= pauli_inf, "SIC <= Pauli at 100 shots");
  });

  run(11, "approximate-compiler sanity", [](Outcome& o) {
    CompileOptions opts;
    opts.seeds = kCompileSeeds;
    opts.seed = 1111;
    std::mt19937_64 rng(111);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
      const ComplexMatrix u = num::haar_unitary(4, rng);
      worst = std::max(worst, approx_compile(u, 2, 3, {}, opts).distance);
    }
    const ComplexMatrix u = num::haar_unitary(4, rng);
    const auto sweep = pareto_sweep(u, 2, {0, 1, 2, 3}, {}, opts);
    bool monotone = true;
    for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep[i].distance <= sweep[i - 1].distance;
    const double id = approx_compile(ComplexMatrix::Identity(4, 4), 2, 0, {}, opts).distance;
    o.detail << " worst budget-3 distance " << fmt(worst) << "; pareto";
    for (const auto& r : sweep) o.detail << " " << fmt(r.distance);
    o.detail << "; identity " << fmt(id);
    o.require(worst < kCompileTol, "budget 3 distance < 1e-4");
    o.require(monotone, "pareto distances non-increasing");
    o.require(id < kIdentityTol, "identity at budget 0 < 1e-8");
  });

  run(12, "CREM generalization", [](Outcome& o) {
    double worst = 0.0;
    for (int n_mid : {1, 2, 3}) {
      for (std::uint64_t seed : {21u, 22u, 23u}) {
        const DynamicCircuit c = random_dynamic_circuit(2, n_mid, seed);
        const CremEnsemble e = build_calibration_ensemble(c);
        NoiseModel noise;
        noise.readout = {ReadoutError{0.04, 0.09}, ReadoutError{0.07, 0.03}};
        std::vector<OutcomeDistribution> p;
        for (const auto& v : e.variants) p.push_back(run_exact(v, ground(v.n_qubits()), noise).distribution());
        const ConfusionMatrix conf = confusion_for_circuit(c, noise);
        const std::size_t no = p[0].size();
        RealVector pall(static_cast<Eigen::Index>(p.size() * no));
        for (std::size_t v = 0; v < p.size(); ++v) {
          for (std::size_t k = 0; k < no; ++k) pall(static_cast<Eigen::Index>(v * no + k)) = p[v].values[k];
        }
        const RealVector solved = forward_model(e, conf).partialPivLu().solve(pall);
        const CremResult r = crem_mitigate(e, p, conf);
        for (std::size_t v = 0; v < p.size(); ++v) {
          for (std::size_t k = 0; k < no; ++k) {
            worst = std::max(worst, std::abs(r.q_variants[v].values[k] - solved(static_cast<Eigen::Index>(v * no + k))));
          }
        }
      }
    }
    o.detail << " max deviation from the enumerated inversion " << fmt(worst);
    o.require(worst < kBruteTol, "match within 1e-9");
  });

  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
