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

#include "povmkit/schemes.hpp"
#include "povmkit/sic.hpp"
#include "povmkit/simulator.hpp"

namespace povmkit {
namespace {

double stats_error(const SchemeOutput& out, const Povm& target, const ComplexMatrix& rho) {
  const OutcomeDistribution sim = element_distribution(out, run_exact(out.circuit, rho).distribution());
  const OutcomeDistribution ref = outcome_probabilities(pad_to_power_of_two(target), rho);
  double worst = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(sim.values[i] - ref.values[i]));
  return worst;
}

/// Random rank-one POVM: columns of the first d rows of a Haar unitary.
Povm random_rank_one(int d, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ComplexMatrix u = num::haar_unitary(m, rng);
  std::vector<ComplexVector> v;
  for (int i = 0; i < m; ++i) v.push_back(u.block(0, i, d, 1));
  return povm_from_vectors(v);
}

std::vector<ComplexVector> trine_vectors() {
  std::vector<ComplexVector> v;
  for (int k = 0; k < 3; ++k) {
    ComplexVector s(2);
    const double a = 2 * std::numbers::pi * k / 3;
    s << std::cos(a), std::sin(a);
    v.push_back(s * std::sqrt(2.0 / 3.0));
  }
  return v;
}

class SchemeStats : public ::testing::TestWithParam<std::tuple<Scheme, int>> {};

TEST_P(SchemeStats, MatchBornRule) {
  const auto [scheme, n] = GetParam();
  const Povm p = sic_povm(n);
  const SchemeOutput out = build_scheme(scheme, p);
  std::mt19937_64 rng(100 + n);
  for (int t = 0; t < 20; ++t) EXPECT_LT(stats_error(out, p, num::random_density_matrix(1 << n, rng)), 1e-9);
}

INSTANTIATE_TEST_SUITE_P(AllSchemes, SchemeStats,
                         ::testing::Combine(::testing::Values(Scheme::Naimark, Scheme::Binary, Scheme::Hybrid),
                                            ::testing::Values(1, 2)));

TEST(Schemes, NaimarkShapes) {
  SchemeOutput one = build_naimark(sic_povm(1));
  EXPECT_EQ(one.circuit.n_qubits(), 2);
  EXPECT_EQ(static_counts(one.circuit).unitary_boxes, 1);
  SchemeOutput two = build_naimark(sic_povm(2));
  EXPECT_EQ(two.circuit.n_qubits(), 4);
  EXPECT_EQ(std::get<UnitaryBox>(two.circuit.ops[0]).matrix.rows(), 16);
  // projective measurement: no auxiliary qubits, statistics = Z basis
  SchemeOutput z = build_naimark(computational_basis_povm(2));
  EXPECT_EQ(z.circuit.n_aux, 0);
  ComplexMatrix rho = ComplexMatrix::Zero(2, 2);
  rho(1, 1) = 1.0;
  EXPECT_NEAR(run_exact(z.circuit, rho).distribution().values[1], 1.0, 1e-12);
}

TEST(Schemes, NaimarkCumulativeRows) {
  const Povm p = sic_povm(2);
  const SchemeOutput out = build_naimark(p);
  for (std::uint64_t r = 0; r < 16; ++r) {
    const ComplexMatrix a = cumulative_kraus(out, r);
    ASSERT_EQ(a.rows(), 1);
    EXPECT_LT((a.adjoint() * a - p[r]).norm(), 1e-9);
  }
  EXPECT_THROW(cumulative_kraus(out, std::string("01")), Error);
}

TEST(Schemes, BinaryTreeCumulativeKraus) {
  const Povm p = sic_povm(2);
  const SchemeOutput out = build_binary_tree(p);
  EXPECT_EQ(out.tree_levels, 4);
  for (const auto& [reg, idx] : out.outcome_map) {
    const ComplexMatrix a = cumulative_kraus(out, reg);
    EXPECT_LT((a.adjoint() * a - p[static_cast<std::size_t>(idx)]).norm(), 1e-9);
  }
  // b_1 is clbit 0 and the most significant bit of the index
  EXPECT_EQ(out.outcome_map.at(0b0001), 8);
  EXPECT_EQ(out.outcome_map.at(0b1000), 1);
}

TEST(Schemes, BinaryTreeSplitsProjectors) {
  ComplexVector e0 = ComplexVector::Unit(2, 0), e1 = ComplexVector::Unit(2, 1), zero = ComplexVector::Zero(2);
  const Povm p(2, {e0 * e0.adjoint(), e1 * e1.adjoint(), ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2)},
               std::vector<ComplexVector>{e0, e1, zero, zero});
  const SchemeOutput out = build_binary_tree(p);
  // level 1 keeps {0,1} on b_1 = 0
  EXPECT_LT((find_branch(out, "0").A - ComplexMatrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LT(find_branch(out, "1").A.norm(), 1e-12);
  for (const auto& [reg, idx] : out.outcome_map) {
    const ComplexMatrix a = cumulative_kraus(out, reg);
    EXPECT_LT((a.adjoint() * a - p[static_cast<std::size_t>(idx)]).norm(), 1e-12);
  }
  EXPECT_LT((cumulative_kraus(out, std::string("00")) - e0 * e0.adjoint()).norm(), 1e-12);
}

TEST(Schemes, SiblingIsometry) {
  for (Scheme s : {Scheme::Binary, Scheme::Hybrid}) {
    const SchemeOutput out = build_scheme(s, sic_povm(2));
    for (const auto& b : out.branch_table) {
      if (b.label.back() != '0') continue;
      std::string sib = b.label;
      sib.back() = '1';
      const ComplexMatrix& a1 = find_branch(out, sib).A;
      const ComplexMatrix sum = b.A.adjoint() * b.A + a1.adjoint() * a1;
      EXPECT_LT((sum - ComplexMatrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-9) << to_string(s) << " " << b.label;
    }
    for (const auto& b : out.branch_table) EXPECT_LT((b.K.adjoint() * b.K - [&] {
      ComplexMatrix sum = ComplexMatrix::Zero(4, 4);
      const std::size_t width = out.povm.size() >> b.level;
      const std::size_t prefix = std::stoul(b.label, nullptr, 2);
      for (std::size_t k = prefix * width; k < (prefix + 1) * width; ++k) sum += out.povm[static_cast<std::size_t>(out.position[k])];
      return sum;
    }()).norm(), 1e-9);
  }
}

TEST(Schemes, HybridStructure) {
  const SchemeOutput two = build_hybrid(sic_povm(2));
  EXPECT_EQ(two.tree_levels, 1);
  EXPECT_EQ(two.circuit.n_aux, 1);
  // single binary level + terminal dilation layer
  int layers = 0;
  for (const auto& op : two.circuit.ops) {
    layers += std::holds_alternative<UnitaryBox>(op);
  }
  EXPECT_EQ(layers, 1);
  for (const char* label : {"0", "1"}) {
    EXPECT_LT((prefix_kraus(two, label) - find_branch(two, label).K).norm(), 1e-9);
  }
  const SchemeOutput one = build_hybrid(sic_povm(1));
  EXPECT_EQ(one.tree_levels, 0);
  EXPECT_TRUE(structurally_equal(one.circuit, build_naimark(sic_povm(1)).circuit));
}

TEST(Schemes, HybridCumulativeRowsReproduceElements) {
  const Povm p = sic_povm(2);
  const SchemeOutput out = build_hybrid(p);
  for (const auto& [reg, idx] : out.outcome_map) {
    const ComplexMatrix a = cumulative_kraus(out, reg);
    EXPECT_LT((a.adjoint() * a - p[static_cast<std::size_t>(idx)]).norm(), 1e-9);
  }
}

TEST(Schemes, HybridTwoLevelsForThirtyTwoOutcomes) {
  const Povm p = random_rank_one(4, 32, 77);
  const SchemeOutput out = build_hybrid(p);
  EXPECT_EQ(out.tree_levels, 2);
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) EXPECT_LT(stats_error(out, p, num::random_density_matrix(4, rng)), 1e-9);
  const CountsReport c = static_counts(out.circuit);
  EXPECT_EQ(c.mid_measurements, 2);
  EXPECT_EQ(c.feed_forward, 2 + 4);
}

TEST(Schemes, PaddedPovmsAcrossSchemes) {
  const Povm trine = povm_from_vectors(trine_vectors());
  std::mt19937_64 rng(12);
  for (Scheme s : {Scheme::Naimark, Scheme::Binary, Scheme::Hybrid}) {
    const SchemeOutput out = build_scheme(s, trine);
    EXPECT_LT(stats_error(out, trine, num::random_density_matrix(2, rng)), 1e-9) << to_string(s);
  }
}

TEST(Schemes, HybridSpreadsZeroPadding) {
  // five elements in d = 2: natural order would give the second branch one
  // non-zero element
  auto v = trine_vectors();
  std::vector<ComplexVector> five;
  for (const auto& x : v) five.push_back(x * std::sqrt(0.5));
  five.push_back(ComplexVector::Unit(2, 0) * std::sqrt(0.5));
  five.push_back(ComplexVector::Unit(2, 1) * std::sqrt(0.5));
  const Povm p = povm_from_vectors(five);
  const SchemeOutput out = build_hybrid(p);
  EXPECT_EQ(out.position, (std::vector<int>{0, 1, 2, 5, 3, 4, 6, 7}));
  std::mt19937_64 rng(14);
  for (int t = 0; t < 5; ++t) EXPECT_LT(stats_error(out, p, num::random_density_matrix(2, rng)), 1e-9);
  std::set<int> image;
  for (const auto& [reg, idx] : out.outcome_map) image.insert(idx);
  EXPECT_EQ(image.size(), 8u);
}

TEST(Schemes, HybridRejectsSingularBranch) {
  std::vector<ComplexVector> v;
  for (int k = 0; k < 4; ++k) v.push_back(ComplexVector::Unit(2, 0) * 0.5);
  for (int k = 0; k < 4; ++k) v.push_back(ComplexVector::Unit(2, 1) * 0.5);
  try {
    build_hybrid(povm_from_vectors(v));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficientBranch);
  }
  // the binary tree copes through the pseudo-inverse
  EXPECT_NO_THROW(build_binary_tree(povm_from_vectors(v)));
}

TEST(Schemes, RejectsHigherRankElements) {
  const Povm halves(2, {ComplexMatrix::Identity(2, 2) / 2.0, ComplexMatrix::Identity(2, 2) / 2.0});
  for (Scheme s : {Scheme::Naimark, Scheme::Binary, Scheme::Hybrid}) {
    try {
      build_scheme(s, halves);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NotRankOne);
    }
  }
}

TEST(Schemes, UnitaryFreedomLeavesStatisticsInvariant) {
  const Povm p = sic_povm(2);
  std::mt19937_64 rng(21);
  std::map<std::string, ComplexMatrix> ws;
  HybridOptions opts;
  opts.freedom = [&](const std::string& label, int d) {
    auto it = ws.find(label);
    if (it == ws.end()) it = ws.emplace(label, num::haar_unitary(d, rng)).first;
    return it->second;
  };
  const SchemeOutput out = build_hybrid(p, opts);
  std::mt19937_64 states(22);
  for (int t = 0; t < 10; ++t) EXPECT_LT(stats_error(out, p, num::random_density_matrix(4, states)), 1e-9);
  EXPECT_GT((find_branch(out, "0").K - find_branch(build_hybrid(p), "0").K).norm(), 1e-3);
}

TEST(Schemes, ConditionalBranchStateMatchesKraus) {
  // Truncate the binary tree after level 2 and compare each branch's system
  // state with K rho K^dagger / Tr(K rho K^dagger).
  const SchemeOutput out = build_binary_tree(sic_povm(2));
  DynamicCircuit head = out.circuit;
  int measures = 0;
  std::size_t cut = 0;
  for (; cut < head.ops.size(); ++cut) {
    if (std::holds_alternative<Measure>(head.ops[cut]) && ++measures == 2) break;
  }
  head.ops.resize(cut + 2);  // keep the reset after the second measurement
  std::mt19937_64 rng(31);
  const ComplexMatrix rho = num::random_density_matrix(4, rng);
  const ExecutionTrace t = run_exact(head, rho);
  ASSERT_EQ(t.branches.size(), 4u);
  for (const auto& b : t.branches) {
    const std::string label = std::string{static_cast<char>('0' + (b.reg & 1))} + static_cast<char>('0' + ((b.reg >> 1) & 1));
    const ComplexMatrix k = find_branch(out, label).K;
    ComplexMatrix expect = k * rho * k.adjoint();
    EXPECT_NEAR(b.probability, expect.trace().real(), 1e-9);
    expect /= expect.trace().real();
    EXPECT_LT((system_state(t, b, 2) - expect).norm(), 1e-9);
  }
}

}  // namespace
}  // namespace povmkit
