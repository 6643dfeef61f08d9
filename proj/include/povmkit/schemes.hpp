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

#ifndef POVMKIT_SCHEMES_HPP
#define POVMKIT_SCHEMES_HPP

// Three circuit realisations of a rank-one POVM: Naimark dilation, binary
// search tree over one auxiliary qubit, and the hybrid (binary search down to
// 2d outcomes per branch, then a per-branch dilation).
//
// Register layouts.
//   Naimark: all log2(M) qubits measured, qubit q into clbit q; the register
//     value is the element index.
//   Binary: level l (1-based) records b_l in clbit l-1; the element index is
//     sum_l b_l 2^(L-l).
//   Hybrid: b_1..b_m in clbits 0..m-1, then qubit q of the terminal
//     (n+1)-qubit dilation into clbit m+q; index = branch * 2d + j.

#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "povmkit/circuit.hpp"
#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"

namespace povmkit {

enum class Scheme { Naimark, Binary, Hybrid };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Naimark: return "naimark";
    case Scheme::Binary: return "binary";
    case Scheme::Hybrid: return "hybrid";
  }
  return "unknown";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "naimark") return Scheme::Naimark;
  if (s == "binary") return Scheme::Binary;
  if (s == "hybrid") return Scheme::Hybrid;
  fail(ErrorCode::InvalidArgument, "unknown scheme '" + s + "' (expected naimark, binary or hybrid)");
}

/// One node of the search tree. label holds b_1 ... b_l, first decision leftmost.
struct BranchKraus {
  std::string label;
  int level = 0;
  ComplexMatrix K;  // aggregated root, K^dagger K = sum of the branch's elements
  ComplexMatrix A;  // Kraus operator of the step that selected this branch
};

struct SchemeOutput {
  Scheme scheme = Scheme::Naimark;
  DynamicCircuit circuit;
  std::map<std::uint64_t, int> outcome_map;  // register value -> padded element index
  std::vector<BranchKraus> branch_table;
  Povm povm;                      // padded target, original element order
  int tree_levels = 0;            // binary-search levels (0 for Naimark)
  std::vector<int> position;      // tree position -> padded element index
  std::vector<ComplexVector> terminal_rows;  // per tree position; dilation rows (Naimark, hybrid)
};

/// Optional unitary freedom K_b -> W_b K_b for the hybrid tree; called with
/// the branch label and the dimension.
using UnitaryFreedom = std::function<ComplexMatrix(const std::string&, int)>;

struct HybridOptions {
  UnitaryFreedom freedom;
};

inline constexpr double kIsometryTol = 1e-8;

namespace detail {

struct RootData {
  ComplexMatrix sqrt;     // B^(1/2)
  ComplexMatrix pinv;     // (B^(1/2))^+
  ComplexMatrix support;  // projector onto range(B)
  double min_eigenvalue = 0.0;
};

inline RootData roots(const ComplexMatrix& b) {
  const num::EighResult e = num::eigh(b, 1e-8);
  const double floor = 1e-10 * std::max(1.0, e.eigenvalues.cwiseAbs().maxCoeff());
  RealVector s(e.eigenvalues.size()), p(e.eigenvalues.size()), pi(e.eigenvalues.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double lam = e.eigenvalues(i);
    const bool on = lam > floor;
    s(i) = on ? std::sqrt(lam) : 0.0;
    p(i) = on ? 1.0 / std::sqrt(lam) : 0.0;
    pi(i) = on ? 1.0 : 0.0;
  }
  return {num::from_eigen(e, s), num::from_eigen(e, p), num::from_eigen(e, pi), e.eigenvalues(0)};
}

inline std::string label_of(std::uint64_t prefix, int level) {
  std::string s(static_cast<std::size_t>(level), '0');
  for (int k = 0; k < level; ++k) {
    if ((prefix >> (level - 1 - k)) & 1) s[static_cast<std::size_t>(k)] = '1';
  }
  return s;
}

/// Register value holding branch prefix p (level bits, b_1 most significant)
/// in clbits 0..level-1, b_1 at clbit 0.
inline std::uint64_t prefix_register(std::uint64_t prefix, int level) {
  std::uint64_t r = 0;
  for (int k = 1; k <= level; ++k) {
    if ((prefix >> (level - k)) & 1) r |= std::uint64_t{1} << (k - 1);
  }
  return r;
}

inline Condition prefix_condition(std::uint64_t prefix, int level) {
  Condition c;
  for (int k = 0; k < level; ++k) c.mask |= std::uint64_t{1} << k;
  c.value = prefix_register(prefix, level);
  return c;
}

inline double isometry_residual(const ComplexMatrix& a0, const ComplexMatrix& a1) {
  const ComplexMatrix s = a0.adjoint() * a0 + a1.adjoint() * a1;
  return (s - ComplexMatrix::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff();
}

/// Two-outcome coupling unitary on (system, aux) with index sys + d*aux whose
/// aux=|0> input columns are [A0; A1].
inline ComplexMatrix coupling_unitary(const ComplexMatrix& a0, const ComplexMatrix& a1) {
  const Eigen::Index d = a0.rows();
  ComplexMatrix c(2 * d, d);
  c.topRows(d) = a0;
  c.bottomRows(d) = a1;
  return num::complete_to_unitary(c.transpose()).transpose();
}

/// Dilation unitary whose input columns (aux = 0) are the rows <psi_i|:
/// (U |phi>)_i = <psi_i|phi>. Rows of the d x M array [psi_0 ... psi_{M-1}]
/// are orthonormal, and the completion preserves them.
inline ComplexMatrix dilation_unitary(const std::vector<ComplexVector>& psis) {
  const Eigen::Index d = psis.front().size();
  ComplexMatrix v(d, static_cast<Eigen::Index>(psis.size()));
  for (std::size_t i = 0; i < psis.size(); ++i) v.col(static_cast<Eigen::Index>(i)) = psis[i];
  return num::complete_to_unitary(v).adjoint();
}

inline std::vector<int> qubit_range(int lo, int hi) {
  std::vector<int> q(static_cast<std::size_t>(hi - lo));
  std::iota(q.begin(), q.end(), lo);
  return q;
}

inline ComplexMatrix branch_sum(const Povm& p, const std::vector<int>& position, std::size_t lo, std::size_t hi) {
  ComplexMatrix b = ComplexMatrix::Zero(p.dim(), p.dim());
  for (std::size_t k = lo; k < hi; ++k) b += p[static_cast<std::size_t>(position[k])];
  return b;
}

inline void store_outcome_metadata(SchemeOutput& out) {
  nlohmann::json m = nlohmann::json::object();
  for (const auto& [reg, idx] : out.outcome_map) m[to_bitstring(reg, out.circuit.n_clbits)] = idx;
  out.circuit.metadata["scheme"] = to_string(out.scheme);
  out.circuit.metadata["outcome_map"] = m;
}

inline void add_level_measurement(DynamicCircuit& c, int aux, int level, bool reset) {
  c.ops.emplace_back(Measure{aux, level - 1});
  if (reset) c.ops.emplace_back(Reset{aux, true, Condition::on_bits({level - 1}, 1)});
}

}  // namespace detail

/// Prepared rank-one data: padded POVM and its vectors.
inline std::pair<Povm, std::vector<ComplexVector>> padded_rank_one(const Povm& povm) {
  const std::vector<ComplexVector> v = rank_one_vectors(povm);
  Povm with_vectors(povm.dim(), povm.elements(), v);
  Povm padded = pad_to_power_of_two(with_vectors);
  if (!num::is_power_of_two(static_cast<std::size_t>(padded.dim()))) {
    fail(ErrorCode::InvalidArgument, "dimension must be a power of two");
  }
  if (padded.size() < static_cast<std::size_t>(padded.dim())) {
    fail(ErrorCode::InvalidArgument, "a complete rank-one POVM needs at least d elements");
  }
  return {padded, padded.vectors()};
}

inline SchemeOutput build_naimark(const Povm& povm) {
  auto [padded, psi] = padded_rank_one(povm);
  const int d = padded.dim();
  const int n = num::log2_exact(static_cast<std::size_t>(d));
  const int total = num::log2_exact(padded.size());

  SchemeOutput out;
  out.scheme = Scheme::Naimark;
  out.povm = padded;
  out.position.resize(padded.size());
  std::iota(out.position.begin(), out.position.end(), 0);
  out.terminal_rows = psi;

  DynamicCircuit& c = out.circuit;
  c.n_system = n;
  c.n_aux = total - n;
  c.n_clbits = total;
  c.ops.emplace_back(UnitaryBox{detail::qubit_range(0, total), detail::dilation_unitary(psi)});
  for (int q = 0; q < total; ++q) c.ops.emplace_back(Measure{q, q});
  for (std::size_t i = 0; i < padded.size(); ++i) out.outcome_map[i] = static_cast<int>(i);
  detail::store_outcome_metadata(out);
  return out;
}

inline SchemeOutput build_binary_tree(const Povm& povm) {
  auto [padded, psi] = padded_rank_one(povm);
  (void)psi;
  const int d = padded.dim();
  const int n = num::log2_exact(static_cast<std::size_t>(d));
  const int levels = num::log2_exact(padded.size());
  const std::size_t m_total = padded.size();

  SchemeOutput out;
  out.scheme = Scheme::Binary;
  out.povm = padded;
  out.tree_levels = levels;
  out.position.resize(m_total);
  std::iota(out.position.begin(), out.position.end(), 0);

  DynamicCircuit& c = out.circuit;
  c.n_system = n;
  c.n_aux = 1;
  c.n_clbits = levels;
  const int aux = n;
  const std::vector<int> qubits = detail::qubit_range(0, n + 1);

  // Aggregated roots of the parent level, indexed by prefix.
  std::vector<detail::RootData> parent{detail::roots(ComplexMatrix::Identity(d, d))};
  for (int l = 1; l <= levels; ++l) {
    const std::size_t width = m_total >> l;
    std::vector<detail::RootData> current;
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << (l - 1)); ++p) {
      const detail::RootData& par = parent[p];
      const ComplexMatrix q = ComplexMatrix::Identity(d, d) - par.support;
      std::array<ComplexMatrix, 2> a;
      for (std::uint64_t bit = 0; bit < 2; ++bit) {
        const std::uint64_t child = 2 * p + bit;
        detail::RootData r = detail::roots(detail::branch_sum(padded, out.position, child * width, (child + 1) * width));
        a[bit] = l == 1 ? r.sqrt : ComplexMatrix(r.sqrt * par.pinv + q / std::sqrt(2.0));
        out.branch_table.push_back({detail::label_of(child, l), l, r.sqrt, a[bit]});
        current.push_back(std::move(r));
      }
      const double residual = detail::isometry_residual(a[0], a[1]);
      if (residual > kIsometryTol) {
        fail(ErrorCode::ConstructionFailure, "isometry residual " + std::to_string(residual) + " at level " +
                                                 std::to_string(l) + " branch '" + detail::label_of(p, l - 1) + "'");
      }
      const ComplexMatrix u = detail::coupling_unitary(a[0], a[1]);
      if (l == 1) {
        c.ops.emplace_back(UnitaryBox{qubits, u});
      } else {
        c.ops.emplace_back(ConditionalUnitary{qubits, u, detail::prefix_condition(p, l - 1)});
      }
    }
    detail::add_level_measurement(c, aux, l, l < levels);
    parent = std::move(current);
  }
  for (std::uint64_t leaf = 0; leaf < m_total; ++leaf) {
    out.outcome_map[detail::prefix_register(leaf, levels)] = static_cast<int>(leaf);
  }
  detail::store_outcome_metadata(out);
  return out;
}

/// Tree positions for the hybrid: keeps natural order when every terminal
/// branch already holds at least d non-zero elements, otherwise spreads the
/// non-zero elements (in order) evenly over branches, padding each with zeros.
inline std::vector<int> hybrid_positions(const Povm& padded, std::size_t branches) {
  const std::size_t m = padded.size();
  const std::size_t width = m / branches;
  const auto d = static_cast<std::size_t>(padded.dim());
  std::vector<bool> nonzero(m);
  for (std::size_t i = 0; i < m; ++i) nonzero[i] = padded[i].trace().real() > kPsdTol;
  std::vector<int> natural(m);
  std::iota(natural.begin(), natural.end(), 0);
  bool ok = true;
  for (std::size_t b = 0; b < branches && ok; ++b) {
    std::size_t count = 0;
    for (std::size_t k = b * width; k < (b + 1) * width; ++k) count += nonzero[k];
    ok = count >= d;
  }
  if (ok) return natural;
  std::vector<int> nz, zero;
  for (std::size_t i = 0; i < m; ++i) (nonzero[i] ? nz : zero).push_back(static_cast<int>(i));
  std::vector<int> pos;
  std::size_t next_nz = 0, next_zero = 0;
  for (std::size_t b = 0; b < branches; ++b) {
    const std::size_t quota = nz.size() / branches + (b < nz.size() % branches ? 1 : 0);
    for (std::size_t k = 0; k < width; ++k) pos.push_back(k < quota ? nz[next_nz++] : zero[next_zero++]);
  }
  return pos;
}

inline SchemeOutput build_hybrid(const Povm& povm, const HybridOptions& opts = {}) {
  auto [padded, psi] = padded_rank_one(povm);
  const int d = padded.dim();
  const int n = num::log2_exact(static_cast<std::size_t>(d));
  const std::size_t m_total = padded.size();
  if (m_total <= static_cast<std::size_t>(2 * d)) {
    SchemeOutput out = build_naimark(povm);
    out.scheme = Scheme::Hybrid;
    detail::store_outcome_metadata(out);
    return out;
  }
  const int levels = num::log2_exact(m_total / static_cast<std::size_t>(2 * d));
  const std::size_t branches = std::size_t{1} << levels;

  SchemeOutput out;
  out.scheme = Scheme::Hybrid;
  out.povm = padded;
  out.tree_levels = levels;
  out.position = hybrid_positions(padded, branches);
  out.terminal_rows.assign(m_total, ComplexVector::Zero(d));

  DynamicCircuit& c = out.circuit;
  c.n_system = n;
  c.n_aux = 1;
  c.n_clbits = levels + n + 1;
  const int aux = n;
  const std::vector<int> qubits = detail::qubit_range(0, n + 1);

  struct Node {
    ComplexMatrix k, k_inv;
  };
  auto node = [&](std::uint64_t prefix, int level) {
    const std::size_t width = m_total >> level;
    const ComplexMatrix b = detail::branch_sum(padded, out.position, prefix * width, (prefix + 1) * width);
    const num::EighResult e = num::eigh(b, 1e-8);
    const double floor = 1e-10 * std::max(1.0, e.eigenvalues.cwiseAbs().maxCoeff());
    if (e.eigenvalues(0) <= floor) {
      fail(ErrorCode::RankDeficientBranch, "branch '" + detail::label_of(prefix, level) +
                                               "' has a singular aggregated element (min eigenvalue " +
                                               std::to_string(e.eigenvalues(0)) + ")");
    }
    ComplexMatrix w = ComplexMatrix::Identity(d, d);
    if (opts.freedom) {
      w = opts.freedom(detail::label_of(prefix, level), d);
      if (w.rows() != d || w.cols() != d || !num::is_unitary(w)) {
        fail(ErrorCode::InvalidArgument, "unitary freedom hook returned a non-unitary matrix");
      }
    }
    const ComplexMatrix root = num::from_eigen(e, e.eigenvalues.cwiseSqrt());
    const ComplexMatrix root_inv = num::from_eigen(e, e.eigenvalues.cwiseSqrt().cwiseInverse());
    return Node{w * root, root_inv * w.adjoint()};
  };

  std::vector<Node> parent{Node{ComplexMatrix::Identity(d, d), ComplexMatrix::Identity(d, d)}};
  for (int l = 1; l <= levels; ++l) {
    std::vector<Node> current;
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << (l - 1)); ++p) {
      std::array<ComplexMatrix, 2> a;
      for (std::uint64_t bit = 0; bit < 2; ++bit) {
        const std::uint64_t child = 2 * p + bit;
        Node nd = node(child, l);
        a[bit] = nd.k * parent[p].k_inv;
        out.branch_table.push_back({detail::label_of(child, l), l, nd.k, a[bit]});
        current.push_back(std::move(nd));
      }
      const double residual = detail::isometry_residual(a[0], a[1]);
      if (residual > kIsometryTol) {
        fail(ErrorCode::ConstructionFailure, "isometry residual " + std::to_string(residual) + " at level " +
                                                 std::to_string(l));
      }
      const ComplexMatrix u = detail::coupling_unitary(a[0], a[1]);
      if (l == 1) {
        c.ops.emplace_back(UnitaryBox{qubits, u});
      } else {
        c.ops.emplace_back(ConditionalUnitary{qubits, u, detail::prefix_condition(p, l - 1)});
      }
    }
    detail::add_level_measurement(c, aux, l, true);
    parent = std::move(current);
  }

  const std::size_t width = 2 * static_cast<std::size_t>(d);
  for (std::uint64_t b = 0; b < branches; ++b) {
    std::vector<ComplexVector> tilde;
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t pos = b * width + j;
      tilde.push_back(parent[b].k_inv.adjoint() * psi[static_cast<std::size_t>(out.position[pos])]);
      out.terminal_rows[pos] = tilde.back();
    }
    c.ops.emplace_back(ConditionalUnitary{qubits, detail::dilation_unitary(tilde), detail::prefix_condition(b, levels)});
  }
  for (int q = 0; q <= n; ++q) c.ops.emplace_back(Measure{q, levels + q});
  for (std::uint64_t b = 0; b < branches; ++b) {
    for (std::uint64_t j = 0; j < width; ++j) {
      const std::uint64_t reg = detail::prefix_register(b, levels) | (j << levels);
      out.outcome_map[reg] = out.position[b * width + j];
    }
  }
  detail::store_outcome_metadata(out);
  return out;
}

inline SchemeOutput build_scheme(Scheme s, const Povm& povm) {
  switch (s) {
    case Scheme::Naimark: return build_naimark(povm);
    case Scheme::Binary: return build_binary_tree(povm);
    case Scheme::Hybrid: return build_hybrid(povm);
  }
  fail(ErrorCode::InvalidArgument, "unknown scheme");
}

inline const BranchKraus& find_branch(const SchemeOutput& out, const std::string& label) {
  for (const auto& b : out.branch_table) {
    if (b.label == label) return b;
  }
  fail(ErrorCode::UnknownOutcome, "no branch with label '" + label + "'");
}

/// Product A_{b^(l)} ... A_{b^(1)} along a tree prefix; equals K_{b^(l)}.
inline ComplexMatrix prefix_kraus(const SchemeOutput& out, const std::string& label) {
  const int d = out.povm.dim();
  ComplexMatrix acc = ComplexMatrix::Identity(d, d);
  for (std::size_t l = 1; l <= label.size(); ++l) acc = find_branch(out, label.substr(0, l)).A * acc;
  return acc;
}

/// Cumulative Kraus operator for a register value: d x d for the binary tree,
/// 1 x d (terminal row times the tree product) for Naimark and hybrid.
inline ComplexMatrix cumulative_kraus(const SchemeOutput& out, std::uint64_t reg) {
  const auto it = out.outcome_map.find(reg);
  if (it == out.outcome_map.end()) {
    fail(ErrorCode::UnknownOutcome, "register value " + to_bitstring(reg, out.circuit.n_clbits) + " is not an outcome");
  }
  const int levels = out.tree_levels;
  std::uint64_t prefix = 0;
  for (int k = 0; k < levels; ++k) prefix = (prefix << 1) | ((reg >> k) & 1);
  const ComplexMatrix tree = prefix_kraus(out, detail::label_of(prefix, levels));
  if (out.scheme == Scheme::Binary) return tree;
  const std::size_t width = out.terminal_rows.size() >> levels;
  const std::size_t pos = static_cast<std::size_t>(prefix) * width + static_cast<std::size_t>(reg >> levels);
  return out.terminal_rows[pos].adjoint() * tree;
}

inline ComplexMatrix cumulative_kraus(const SchemeOutput& out, const std::string& bitstring) {
  if (static_cast<int>(bitstring.size()) != out.circuit.n_clbits) {
    fail(ErrorCode::UnknownOutcome, "outcome '" + bitstring + "' has the wrong length");
  }
  std::uint64_t reg = 0;
  try {
    reg = from_bitstring(bitstring);
  } catch (const Error&) {
    fail(ErrorCode::UnknownOutcome, "outcome '" + bitstring + "' is not a bitstring");
  }
  return cumulative_kraus(out, reg);
}

/// Map a register-value distribution onto padded element indices.
inline OutcomeDistribution element_distribution(const SchemeOutput& out, const OutcomeDistribution& reg) {
  OutcomeDistribution e;
  e.is_counts = reg.is_counts;
  e.values.assign(out.povm.size(), 0.0);
  for (std::size_t r = 0; r < reg.size(); ++r) {
    if (reg.values[r] == 0.0) continue;
    const auto it = out.outcome_map.find(r);
    if (it == out.outcome_map.end()) {
      fail(ErrorCode::UnknownOutcome, "register value " + std::to_string(r) + " has weight but no outcome");
    }
    e.values[static_cast<std::size_t>(it->second)] += reg.values[r];
  }
  return e;
}

/// outcome_map recovered from a circuit's metadata (as written by the builders).
inline std::map<std::uint64_t, int> outcome_map_from_metadata(const DynamicCircuit& c) {
  std::map<std::uint64_t, int> m;
  if (!c.metadata.contains("outcome_map")) return m;
  for (const auto& [key, value] : c.metadata["outcome_map"].items()) m[from_bitstring(key)] = value.get<int>();
  return m;
}

}  // namespace povmkit

#endif  // POVMKIT_SCHEMES_HPP
