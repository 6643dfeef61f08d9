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

#include <random>

#include <gtest/gtest.h>

#include "povmkit/compiler.hpp"
#include "povmkit/sic.hpp"
#include "povmkit/simulator.hpp"

namespace povmkit {
namespace {

TEST(Compiler, DistanceIsPhaseInvariant) {
  std::mt19937_64 rng(1);
  const ComplexMatrix u = num::haar_unitary(4, rng);
  EXPECT_LT(unitary_distance(std::polar(1.0, 0.7) * u, u), 1e-7);
  const ComplexMatrix v = num::haar_unitary(4, rng);
  const double t = std::abs((v.adjoint() * u).trace()) / 4.0;
  EXPECT_NEAR(unitary_distance(v, u), std::sqrt(1 - t * t), 1e-12);
}

TEST(Compiler, AnalyticGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  const ComplexMatrix u = num::haar_unitary(8, rng);
  const auto slots = detail::build_template(3, 4, linear_chain(3));
  const int np = detail::template_parameters(3, 4);
  detail::TemplateCost cost(u, 3, slots, np);
  std::uniform_real_distribution<double> angle(-3, 3);
  std::vector<double> x(static_cast<std::size_t>(np)), g(static_cast<std::size_t>(np));
  for (double& v : x) v = angle(rng);
  double f = 0;
  ASSERT_TRUE(cost.Evaluate(x.data(), &f, g.data()));
  const double h = 1e-6;
  for (int k = 0; k < np; ++k) {
    auto xp = x, xm = x;
    xp[static_cast<std::size_t>(k)] += h;
    xm[static_cast<std::size_t>(k)] -= h;
    double fp = 0, fm = 0;
    cost.Evaluate(xp.data(), &fp, nullptr);
    cost.Evaluate(xm.data(), &fm, nullptr);
    EXPECT_NEAR(g[static_cast<std::size_t>(k)], (fp - fm) / (2 * h), 1e-8) << "parameter " << k;
  }
  // cost agrees with the squared distance of the reconstructed block
  const ComplexMatrix v = gates_matrix(detail::block_from_params(3, slots, x).gates, 3);
  EXPECT_NEAR(f, std::pow(unitary_distance(v, u), 2), 1e-12);
}

TEST(Compiler, IdentityAtBudgetZero) {
  const CompilationResult r = approx_compile(ComplexMatrix::Identity(4, 4), 2, 0);
  EXPECT_LT(r.distance, 1e-8);
  EXPECT_EQ(r.cnot_count, 0);
  EXPECT_EQ(cnot_count(r.block.gates), 0);
}

TEST(Compiler, CnotAtBudgetOne) {
  const ComplexMatrix cx = gates_matrix({Gate::cx(0, 1)}, 2);
  EXPECT_LT(approx_compile(cx, 2, 1, {{0, 1}}).distance, 1e-6);
}

TEST(Compiler, ThreeCnotsReachKnownDecomposition) {
  // exact-decomposition oracle: the target is itself a 3-CNOT circuit with
  // alternating CNOT directions and random rotations
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> angle(-3, 3);
  std::vector<Gate> gates;
  auto layer = [&] {
    for (int q = 0; q < 2; ++q) gates.push_back(Gate::rot(q, angle(rng), angle(rng), angle(rng)));
  };
  layer();
  gates.push_back(Gate::cx(0, 1));
  layer();
  gates.push_back(Gate::cx(1, 0));
  layer();
  gates.push_back(Gate::cx(0, 1));
  layer();
  const ComplexMatrix target = gates_matrix(gates, 2);
  EXPECT_LT(approx_compile(target, 2, 3).distance, 1e-4);
}

TEST(Compiler, RandomTwoQubitUnitariesAtBudgetThree) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 3; ++t) {
    const ComplexMatrix u = num::haar_unitary(4, rng);
    const CompilationResult r = approx_compile(u, 2, 3);
    EXPECT_LT(r.distance, 1e-4);
    // stored distance reproduces from the block
    EXPECT_NEAR(unitary_distance(block_matrix(r.block), u), r.distance, 1e-10);
    EXPECT_EQ(cnot_count(r.block.gates), 3);
  }
}

TEST(Compiler, BlocksAreUnitaryForAnyAngles) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> angle(-10, 10);
  const auto slots = detail::build_template(3, 7, linear_chain(3));
  std::vector<double> x(static_cast<std::size_t>(detail::template_parameters(3, 7)));
  for (double& v : x) v = angle(rng);
  EXPECT_TRUE(num::is_unitary(block_matrix(detail::block_from_params(3, slots, x)), 1e-9));
}

TEST(Compiler, ParetoSweepIsMonotone) {
  std::mt19937_64 rng(6);
  const ComplexMatrix u = num::haar_unitary(8, rng);
  CompileOptions o;
  o.seeds = 2;
  o.max_iterations = 400;
  const std::vector<int> budgets = {0, 2, 4, 6, 8, 10, 12, 14, 16, 18};
  const auto r = pareto_sweep(u, 3, budgets, {}, o);
  ASSERT_EQ(r.size(), 10u);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_LE(r[i].distance, r[i - 1].distance);
  EXPECT_LE(r.back().distance, r.front().distance);
  const auto id = pareto_sweep(ComplexMatrix::Identity(4, 4), 2, {0, 1, 2}, {}, o);
  for (const auto& x : id) EXPECT_LT(x.distance, 1e-8);
  EXPECT_NE(pareto_csv(budgets, r).find("budget,distance,iterations"), std::string::npos);
  EXPECT_THROW(pareto_sweep(u, 3, {4, 2}, {}, o), Error);
}

TEST(Compiler, InputChecks) {
  EXPECT_THROW(approx_compile(ComplexMatrix::Identity(3, 3), 2, 0), Error);
  EXPECT_THROW(approx_compile(ComplexMatrix::Identity(8, 8), 3, 1, {{0, 1}}), Error);  // disconnected
  ComplexMatrix bad = ComplexMatrix::Identity(4, 4);
  bad(0, 0) = 2.0;
  EXPECT_THROW(approx_compile(bad, 2, 1), Error);
}

TEST(Compiler, SeedsAreDeterministicAcrossJobCounts) {
  std::mt19937_64 rng(7);
  const ComplexMatrix u = num::haar_unitary(4, rng);
  CompileOptions a;
  a.seeds = 4;
  a.max_iterations = 50;
  CompileOptions b = a;
  b.jobs = 3;
  const auto ra = approx_compile(u, 2, 1, {}, a), rb = approx_compile(u, 2, 1, {}, b);
  EXPECT_EQ(ra.distance, rb.distance);
  EXPECT_EQ(ra.seed_index, rb.seed_index);
}

TEST(Compiler, CompiledCircuitKeepsStatistics) {
  const Povm p = sic_povm(1);
  const SchemeOutput out = build_naimark(p);
  const CircuitCompilation cc = compile_circuit(out.circuit, 3);
  EXPECT_LT(cc.max_distance, 1e-5);
  EXPECT_EQ(static_counts(cc.circuit).cnots, 3);
  std::mt19937_64 rng(8);
  const ComplexMatrix rho = num::random_density_matrix(2, rng);
  const auto sim = element_distribution(out, run_exact(cc.circuit, rho).distribution());
  const auto ref = outcome_probabilities(p, rho);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(sim.values[i], ref.values[i], 1e-6);
}

TEST(Compiler, LayerBudgets) {
  EXPECT_EQ(split_budget(9, 4), (std::vector<int>{3, 2, 2, 2}));
  EXPECT_EQ(split_budget(10, 2), (std::vector<int>{5, 5}));
  const auto layers = unitary_layers(build_binary_tree(sic_povm(2)).circuit);
  int top = 0;
  for (int l : layers) top = std::max(top, l);
  EXPECT_EQ(top, 3);
}

TEST(Resources, TableEntries) {
  EXPECT_EQ(resource_estimate(Scheme::Naimark, 2, 16).cnot_upper_bound, 256u);
  EXPECT_EQ(resource_estimate(Scheme::Binary, 2, 16).cnot_upper_bound, 256u);
  EXPECT_EQ(resource_estimate(Scheme::Hybrid, 2, 16).cnot_upper_bound, 128u);
  EXPECT_EQ(resource_estimate(Scheme::Hybrid, 1, 4).cnot_upper_bound, 16u);
  EXPECT_EQ(resource_estimate(Scheme::Naimark, 1, 4).cnot_upper_bound, 16u);
  EXPECT_EQ(resource_estimate(Scheme::Binary, 3, 64).cnot_upper_bound, 1536u);
  EXPECT_THROW(resource_estimate(Scheme::Binary, 1, 16), Error);
  EXPECT_THROW(resource_estimate(Scheme::Binary, 2, 4), Error);
  for (int n = 1; n <= 4; ++n) {
    const std::uint64_t m = std::uint64_t{1} << (2 * n);
    EXPECT_EQ(2 * resource_estimate(Scheme::Hybrid, n, m).cnot_upper_bound,
              resource_estimate(Scheme::Binary, n, m).cnot_upper_bound);
  }
}

TEST(Resources, CountsMatchBuiltCircuits) {
  for (Scheme s : {Scheme::Naimark, Scheme::Binary, Scheme::Hybrid}) {
    const CountsReport c = static_counts(build_scheme(s, sic_povm(2)).circuit);
    const ResourceEstimate r = resource_estimate(s, 2, 16);
    EXPECT_EQ(c.mid_measurements, r.mid_circuit_measurements) << to_string(s);
    EXPECT_EQ(static_cast<std::uint64_t>(c.feed_forward), r.feed_forward_cases) << to_string(s);
  }
}

}  // namespace
}  // namespace povmkit
