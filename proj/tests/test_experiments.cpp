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

#include <gtest/gtest.h>

#include "povmkit/experiments.hpp"

namespace povmkit {
namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.n_qubits = 1;
  c.budgets = {0, 6};  // binary splits 6 into 3 + 3 over its two layers
  c.compile.seeds = 4;
  return c;
}

TEST(Experiments, NoiselessLargeBudgetIsExact) {
  const ExperimentConfig cfg = small_config();
  const SweepResult r = run_fidelity_sweep(cfg);
  ASSERT_EQ(r.rows.size(), 6u);
  for (Scheme s : cfg.schemes) {
    const SweepRow* big = r.find(s, 6);
    const SweepRow* none = r.find(s, 0);
    ASSERT_TRUE(big && none);
    EXPECT_GE(big->fidelity, 1 - 1e-6) << to_string(s);
    EXPECT_LT(big->distance, 1e-6);
    // no CNOTs: the two-qubit unitaries are far off and so is the measurement
    EXPECT_GT(none->distance, 0.3);
    EXPECT_LT(none->ideal_fidelity, 0.99);
    EXPECT_EQ(r.rows[r.best(s)].budget, 6);
  }
}

TEST(Experiments, NoiseOrderingOnOneQubit) {
  ExperimentConfig cfg = small_config();
  cfg.budgets = {6};
  cfg.noise.eps_idle = 0.05;
  const SweepResult r = run_fidelity_sweep(cfg);
  // binary pays for its extra measurement and feed-forward
  EXPECT_GT(r.find(Scheme::Naimark, 6)->fidelity, r.find(Scheme::Binary, 6)->fidelity);
  for (const auto& row : r.rows) {
    EXPECT_LT(row.fidelity, row.ideal_fidelity);
    EXPECT_GT(row.fidelity, 0.5);
  }
}

TEST(Experiments, DeterministicAndJobIndependent) {
  ExperimentConfig cfg = small_config();
  cfg.noise.eps_cnot = 0.02;
  cfg.shots = 2000;
  cfg.bootstrap = 20;
  const std::string a = sweep_csv(run_fidelity_sweep(cfg));
  cfg.jobs = 3;
  const std::string b = sweep_csv(run_fidelity_sweep(cfg));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("naimark,6,"), std::string::npos);
  const SweepResult r = run_fidelity_sweep(cfg);
  EXPECT_GT(r.find(Scheme::Binary, 6)->std, 0.0);
}

TEST(Experiments, MitigationRecoversReadoutErrors) {
  ExperimentConfig cfg = small_config();
  cfg.budgets = {6};
  cfg.noise = NoiseModel::uniform_readout(2, 0.05);
  const auto cells = compile_cells(cfg);
  const SweepResult raw = evaluate_cells(cells, cfg, cfg.noise);
  cfg.mitigation = Mitigation::Crem;
  const SweepResult crem = evaluate_cells(cells, cfg, cfg.noise);
  for (Scheme s : cfg.schemes) {
    EXPECT_LT(raw.find(s, 6)->fidelity, 0.99);
    EXPECT_GT(crem.find(s, 6)->fidelity, 1 - 1e-6) << to_string(s);
  }
  cfg.mitigation = Mitigation::Rem;
  const SweepResult rem = evaluate_cells(cells, cfg, cfg.noise);
  EXPECT_GT(rem.find(Scheme::Naimark, 6)->fidelity, 1 - 1e-6);
  // plain inversion cannot undo errors that steered the feed-forward
  EXPECT_LT(rem.find(Scheme::Binary, 6)->fidelity, 1 - 1e-4);
}

TEST(Experiments, NoiseGridAndCremStudy) {
  ExperimentConfig cfg = small_config();
  cfg.budgets = {6};
  cfg.grid_eps_idle = {0.0, 0.05};
  cfg.grid_eps_cnot = {0.0, 0.02};
  const auto grid = run_noise_grid(cfg);
  ASSERT_EQ(grid.size(), 2u * 2u * 3u);
  for (const auto& g : grid) {
    if (g.eps_idle == 0 && g.eps_cnot == 0) EXPECT_GE(g.fidelity, 1 - 1e-6);
  }
  EXPECT_NE(grid_csv(grid).find("eps_idle,eps_cnot,scheme,best_budget,fidelity"), std::string::npos);

  cfg.crem_eps = {0.02, 0.1};
  cfg.crem_eps_qnd = {0.0, 0.1};
  const auto rows = run_crem_study(cfg);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_LT(rows[0].mitigated, 1e-7);
  EXPECT_LT(rows[1].mitigated, 1e-7);
  EXPECT_GT(rows[1].unmitigated, rows[0].unmitigated);
  EXPECT_NEAR(rows[2].mitigated, rows[3].mitigated, 1e-6);
  EXPECT_GT(rows[2].mitigated, 1e-4);
}

TEST(Experiments, ConfigRoundTripAndValidation) {
  ExperimentConfig cfg = small_config();
  cfg.noise.eps_idle = 0.03;
  cfg.mitigation = Mitigation::Crem;
  const ExperimentConfig back = config_from_json(config_to_json(cfg));
  EXPECT_EQ(back.budgets, cfg.budgets);
  EXPECT_EQ(back.noise.eps_idle, 0.03);
  EXPECT_EQ(back.mitigation, Mitigation::Crem);
  EXPECT_EQ(back.compile.seeds, 4);
  auto j = config_to_json(cfg);
  j["budgets"] = {5, 3};
  EXPECT_THROW(config_from_json(j), Error);
  j = config_to_json(cfg);
  j["schemes"] = {"tree"};
  EXPECT_THROW(config_from_json(j), Error);
  j = config_to_json(cfg);
  j["bootstrap"] = 10;  // without shots
  EXPECT_THROW(config_from_json(j), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse("[1]")), Error);
}

TEST(Experiments, BudgetsActAsUpperBounds) {
  const auto comps = compile_circuit_sweep(build_binary_tree(sic_povm(1)).circuit, {6, 10}, CompileOptions{.seeds = 4});
  ASSERT_EQ(comps.size(), 2u);
  // three CNOTs per layer already give exact two-qubit blocks; the extra four are never used
  EXPECT_EQ(static_counts(comps[1].circuit).cnots, static_counts(comps[0].circuit).cnots);
  EXPECT_LT(comps[1].max_distance, 1e-6);
}

}  // namespace
}  // namespace povmkit
