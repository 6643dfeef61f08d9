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

#ifndef POVMKIT_MITIGATION_HPP
#define POVMKIT_MITIGATION_HPP

// Readout error mitigation for static and dynamic circuits.
//
// Classical bits are treated as independent binary channels: bit k is read
// through M_k = [[1-e0, e1], [e0, 1-e1]] and the register distribution is
// P = (M_{K-1} (x) ... (x) M_0) Q with bit 0 the least significant index.
//
// Conditional mitigation (CREM): variant w of a dynamic circuit flips, for
// every mid-circuit measurement j with bit j of w set, all conditions that
// read its bit and applies X to the measured qubit right after it. A readout
// error on measurement j of variant v then evolves exactly like the error-free
// run of variant v ^ (1 << j), so regrouping the variants by the frame
// w = v ^ y_mid restores a plain tensor-product relation P_w = M Q_w.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "povmkit/circuit.hpp"
#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"
#include "povmkit/simulator.hpp"

namespace povmkit {

/// Per-bit confusion channels; bits[k] describes classical bit k.
struct ConfusionMatrix {
  std::vector<ReadoutError> bits;

  std::size_t size() const { return bits.size(); }

  RealMatrix matrix(std::size_t k) const {
    RealMatrix m(2, 2);
    m << 1 - bits[k].eps0, bits[k].eps1, bits[k].eps0, 1 - bits[k].eps1;
    return m;
  }

  /// Dense 2^K x 2^K matrix; small K only.
  RealMatrix dense() const {
    RealMatrix out = RealMatrix::Identity(1, 1);
    for (std::size_t k = 0; k < bits.size(); ++k) out = num::kron(matrix(k), out);
    return out;
  }

  static ConfusionMatrix identity(std::size_t n_bits) {
    return ConfusionMatrix{std::vector<ReadoutError>(n_bits)};
  }
};

inline void check_confusion(const ConfusionMatrix& c) {
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto& e = c.bits[k];
    if (!(e.eps0 >= 0 && e.eps0 <= 1 && e.eps1 >= 0 && e.eps1 <= 1)) {
      fail(ErrorCode::InvalidArgument, "confusion entries of bit " + std::to_string(k) + " must lie in [0, 1]");
    }
    if (std::abs(1 - e.eps0 - e.eps1) < 1e-12) {
      fail(ErrorCode::SingularConfusion, "confusion matrix of bit " + std::to_string(k) + " is singular (e0 + e1 = 1)");
    }
  }
}

/// Confusion of each classical bit, taken from the readout channel of the
/// qubit measured into it. Bits never written are ideal.
inline ConfusionMatrix confusion_for_circuit(const DynamicCircuit& c, const NoiseModel& noise) {
  ConfusionMatrix m = ConfusionMatrix::identity(static_cast<std::size_t>(c.n_clbits));
  for (const auto& op : c.ops) {
    if (const auto* meas = std::get_if<Measure>(&op)) m.bits[static_cast<std::size_t>(meas->clbit)] = noise.readout_of(meas->qubit);
  }
  return m;
}

namespace detail {

/// Apply (x)_k maps[k] to a dense register vector, one bit at a time.
inline std::vector<double> apply_per_bit(const std::vector<RealMatrix>& maps, std::vector<double> v) {
  if (v.size() != (std::size_t{1} << maps.size())) {
    fail(ErrorCode::LabelMismatch, "distribution has " + std::to_string(v.size()) + " entries but confusion covers " +
                                       std::to_string(maps.size()) + " bits");
  }
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const std::size_t bit = std::size_t{1} << k;
    const RealMatrix& m = maps[k];
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i & bit) continue;
      const double a = v[i], b = v[i | bit];
      v[i] = m(0, 0) * a + m(0, 1) * b;
      v[i | bit] = m(1, 0) * a + m(1, 1) * b;
    }
  }
  return v;
}

inline std::vector<RealMatrix> inverse_maps(const ConfusionMatrix& c) {
  check_confusion(c);
  std::vector<RealMatrix> out;
  for (std::size_t k = 0; k < c.size(); ++k) out.push_back(c.matrix(k).inverse());
  return out;
}

inline std::vector<RealMatrix> forward_maps(const ConfusionMatrix& c) {
  std::vector<RealMatrix> out;
  for (std::size_t k = 0; k < c.size(); ++k) out.push_back(c.matrix(k));
  return out;
}

inline std::vector<double> normalized(const OutcomeDistribution& d) {
  std::vector<double> p = d.values;
  const double t = d.total();
  if (!(t > 0)) fail(ErrorCode::InvalidArgument, "empty distribution");
  for (double& x : p) x /= t;
  return p;
}

}  // namespace detail

/// Applies M to a distribution (forward readout model).
inline OutcomeDistribution apply_confusion(const OutcomeDistribution& q, const ConfusionMatrix& c) {
  OutcomeDistribution out = q;
  out.is_counts = false;
  out.values = detail::apply_per_bit(detail::forward_maps(c), detail::normalized(q));
  return out;
}

/// Negative entries set to zero and the rest renormalised; returns the
/// clipped (negative) mass.
inline double clip_and_normalize(std::vector<double>& v) {
  double neg = 0.0, pos = 0.0;
  for (double& x : v) {
    if (x < 0) {
      neg -= x;
      x = 0;
    }
    pos += x;
  }
  if (pos > 0) {
    for (double& x : v) x /= pos;
  }
  return neg;
}

/// Q = M^-1 P for end-of-circuit statistics.
inline OutcomeDistribution standard_rem(const OutcomeDistribution& p, const ConfusionMatrix& c,
                                        double* clipped_mass = nullptr) {
  OutcomeDistribution out = p;
  out.is_counts = false;
  out.values = detail::apply_per_bit(detail::inverse_maps(c), detail::normalized(p));
  const double clipped = clip_and_normalize(out.values);
  if (clipped_mass) *clipped_mass = clipped;
  return out;
}

/// sqrt(1 - sum_i sqrt(p_i q_i)) on normalised inputs.
inline double hellinger(const OutcomeDistribution& p, const OutcomeDistribution& q) {
  if (p.size() != q.size()) {
    fail(ErrorCode::LabelMismatch, "distributions over " + std::to_string(p.size()) + " and " +
                                       std::to_string(q.size()) + " labels");
  }
  const std::vector<double> a = detail::normalized(p), b = detail::normalized(q);
  double bc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) bc += std::sqrt(std::max(0.0, a[i]) * std::max(0.0, b[i]));
  return std::sqrt(std::max(0.0, 1.0 - bc));
}

// ---------------------------------------------------------------------------
// Conditional calibration ensemble

struct CremEnsemble {
  std::vector<DynamicCircuit> variants;  // variant v flips mid measurement j iff bit j of v
  std::vector<std::size_t> mid_ops;      // op indices of the mid-circuit measurements in the original
  std::vector<int> mid_clbits;           // their classical bits
  int n_clbits = 0;

  std::size_t n_mid() const { return mid_clbits.size(); }
  /// Variant index selected by the mid-circuit bits of a register value.
  std::uint64_t mid_pattern(std::uint64_t reg) const {
    std::uint64_t w = 0;
    for (std::size_t j = 0; j < mid_clbits.size(); ++j) w |= ((reg >> mid_clbits[j]) & 1) << j;
    return w;
  }
};

namespace detail {

inline Condition complement_bits(Condition c, std::uint64_t bits) {
  c.value ^= c.mask & bits;
  return c;
}

inline void complement_op(CircuitOp& op, std::uint64_t bits) {
  if (auto* cu = std::get_if<ConditionalUnitary>(&op)) {
    cu->cond = complement_bits(cu->cond, bits);
  } else if (auto* r = std::get_if<Reset>(&op)) {
    if (r->via_conditional_x) r->cond = complement_bits(r->cond, bits);
  } else if (auto* b = std::get_if<CompiledBlock>(&op)) {
    if (b->cond) b->cond = complement_bits(*b->cond, bits);
  }
}

}  // namespace detail

inline CremEnsemble build_calibration_ensemble(const DynamicCircuit& c) {
  const CircuitReport report = validate_circuit(c);
  if (!report.violations.empty()) fail(ErrorCode::InvalidCircuit, report.violations.front());
  CremEnsemble e;
  e.n_clbits = c.n_clbits;
  e.mid_ops = mid_circuit_measurements(c);
  if (e.mid_ops.empty()) fail(ErrorCode::NoMidCircuitMeasurement, "circuit has no mid-circuit measurement");
  if (e.mid_ops.size() > 16) fail(ErrorCode::InvalidArgument, "too many mid-circuit measurements for CREM");
  std::vector<int> writes(static_cast<std::size_t>(c.n_clbits), 0);
  for (const auto& op : c.ops) {
    if (const auto* m = std::get_if<Measure>(&op)) ++writes[static_cast<std::size_t>(m->clbit)];
  }
  for (std::size_t idx : e.mid_ops) {
    const int bit = std::get<Measure>(c.ops[idx]).clbit;
    if (writes[static_cast<std::size_t>(bit)] != 1) {
      fail(ErrorCode::InvalidArgument, "mid-circuit bit " + std::to_string(bit) + " is written more than once");
    }
    e.mid_clbits.push_back(bit);
  }
  const std::size_t n_var = std::size_t{1} << e.mid_ops.size();
  for (std::size_t v = 0; v < n_var; ++v) {
    DynamicCircuit out;
    out.n_system = c.n_system;
    out.n_aux = c.n_aux;
    out.n_clbits = c.n_clbits;
    out.metadata = c.metadata;
    out.metadata["crem_variant"] = v;
    std::uint64_t flipped = 0;
    for (std::size_t j = 0; j < e.mid_ops.size(); ++j) {
      if ((v >> j) & 1) flipped |= std::uint64_t{1} << e.mid_clbits[j];
    }
    for (std::size_t k = 0; k < c.ops.size(); ++k) {
      CircuitOp op = c.ops[k];
      detail::complement_op(op, flipped);
      out.ops.push_back(std::move(op));
      const auto* m = std::get_if<Measure>(&c.ops[k]);
      if (m && ((flipped >> m->clbit) & 1)) out.ops.push_back(UnitaryBox{{m->qubit}, x_gate()});
    }
    if (v == 0) out.metadata.erase("crem_variant");
    e.variants.push_back(std::move(out));
  }
  return e;
}

struct CremResult {
  OutcomeDistribution q;                           // mitigated original circuit
  std::vector<OutcomeDistribution> q_variants;     // q_variants[0] == q; the rest are the calibration circuits
  double clipped_mass = 0.0;                       // summed over all variants
  std::size_t sampling_overhead = 1;               // number of circuits that had to be sampled
};

/// dists[v] are the measured statistics of ensemble variant v.
inline CremResult crem_mitigate(const CremEnsemble& ens, const std::vector<OutcomeDistribution>& dists,
                                const ConfusionMatrix& confusion) {
  const std::size_t n_var = std::size_t{1} << ens.n_mid();
  const std::size_t n_out = std::size_t{1} << ens.n_clbits;
  if (dists.size() != n_var) {
    fail(ErrorCode::InconsistentEnsemble, "expected " + std::to_string(n_var) + " variant distributions, got " +
                                              std::to_string(dists.size()));
  }
  if (confusion.size() != static_cast<std::size_t>(ens.n_clbits)) {
    fail(ErrorCode::LabelMismatch, "confusion covers " + std::to_string(confusion.size()) + " bits, register has " +
                                       std::to_string(ens.n_clbits));
  }
  std::vector<std::vector<double>> p;
  for (std::size_t v = 0; v < n_var; ++v) {
    if (dists[v].size() != n_out) {
      fail(ErrorCode::InconsistentEnsemble, "variant " + std::to_string(v) + " has " + std::to_string(dists[v].size()) +
                                                " outcomes, expected " + std::to_string(n_out));
    }
    p.push_back(detail::normalized(dists[v]));
  }
  const std::vector<RealMatrix> inv = detail::inverse_maps(confusion);
  std::vector<std::vector<double>> q(n_var, std::vector<double>(n_out, 0.0));
  for (std::size_t w = 0; w < n_var; ++w) {
    std::vector<double> frame(n_out);
    for (std::size_t y = 0; y < n_out; ++y) frame[y] = p[w ^ ens.mid_pattern(y)][y];
    const std::vector<double> qw = detail::apply_per_bit(inv, std::move(frame));
    for (std::size_t x = 0; x < n_out; ++x) q[w ^ ens.mid_pattern(x)][x] = qw[x];
  }
  CremResult r;
  r.sampling_overhead = n_var;
  for (std::size_t v = 0; v < n_var; ++v) {
    OutcomeDistribution d;
    d.n_bits = ens.n_clbits;
    d.values = std::move(q[v]);
    r.clipped_mass += clip_and_normalize(d.values);
    r.q_variants.push_back(std::move(d));
  }
  r.q = r.q_variants.front();
  return r;
}

// ---------------------------------------------------------------------------
// Calibration data

/// e0 = P(read 1 | prepared 0), e1 = P(read 0 | prepared 1) from counts on
/// the two preparations of a single qubit (entries indexed by read value).
inline ReadoutError estimate_readout(const OutcomeDistribution& prepared0, const OutcomeDistribution& prepared1) {
  if (prepared0.size() != 2 || prepared1.size() != 2) fail(ErrorCode::LabelMismatch, "single-bit counts expected");
  const auto a = detail::normalized(prepared0), b = detail::normalized(prepared1);
  return ReadoutError{a[1], b[0]};
}

/// {"qubits": [{"eps0": .., "eps1": .., "eps_qnd": ..}, ...]}
inline NoiseModel calibration_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("qubits") || !j["qubits"].is_array()) {
    fail(ErrorCode::ParseError, "calibration: expected object with array 'qubits'");
  }
  NoiseModel m;
  std::size_t i = 0;
  for (const auto& q : j["qubits"]) {
    const std::string where = "calibration.qubits[" + std::to_string(i++) + "]";
    try {
      m.readout.push_back(ReadoutError{q.value("eps0", 0.0), q.value("eps1", 0.0)});
      m.eps_qnd.push_back(q.value("eps_qnd", 0.0));
    } catch (const nlohmann::json::exception&) {
      fail(ErrorCode::ParseError, where + ": numeric fields expected");
    }
  }
  check_noise(m);
  return m;
}

inline nlohmann::json calibration_to_json(const NoiseModel& m) {
  nlohmann::json q = nlohmann::json::array();
  const std::size_t n = std::max(m.readout.size(), m.eps_qnd.size());
  for (std::size_t k = 0; k < n; ++k) {
    const ReadoutError r = m.readout_of(static_cast<int>(k));
    q.push_back({{"eps0", r.eps0}, {"eps1", r.eps1}, {"eps_qnd", m.qnd_of(static_cast<int>(k))}});
  }
  return {{"qubits", q}};
}

inline nlohmann::json distribution_to_json(const OutcomeDistribution& d, int n_bits) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d.values[k] != 0.0) j[to_bitstring(k, n_bits)] = d.values[k];
  }
  return j;
}

inline nlohmann::json crem_report_to_json(const CremResult& r, int n_bits, const OutcomeDistribution* raw = nullptr,
                                          const OutcomeDistribution* ideal = nullptr) {
  nlohmann::json j;
  j["Q"] = distribution_to_json(r.q, n_bits);
  j["Q_tilde"] = nlohmann::json::array();
  for (std::size_t v = 1; v < r.q_variants.size(); ++v) j["Q_tilde"].push_back(distribution_to_json(r.q_variants[v], n_bits));
  j["clipped_mass"] = r.clipped_mass;
  j["circuits_sampled"] = r.sampling_overhead;
  if (ideal) {
    j["hellinger_mitigated"] = hellinger(r.q, *ideal);
    if (raw) j["hellinger_unmitigated"] = hellinger(*raw, *ideal);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Model circuits

/// Two qubits: random U on both, mid-circuit measurement of qubit 0 into bit 0,
/// then U0 or U1 on both qubits depending on bit 0, then qubit 1 into bit 1.
inline DynamicCircuit crem_model_circuit(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  DynamicCircuit c;
  c.n_system = 2;
  c.n_clbits = 2;
  c.ops.push_back(UnitaryBox{{0, 1}, num::haar_unitary(4, rng)});
  c.ops.push_back(Measure{0, 0});
  c.ops.push_back(ConditionalUnitary{{0, 1}, num::haar_unitary(4, rng), Condition::on_bits({0}, 0)});
  c.ops.push_back(ConditionalUnitary{{0, 1}, num::haar_unitary(4, rng), Condition::on_bits({0}, 1)});
  c.ops.push_back(Measure{1, 1});
  c.metadata["model"] = "crem";
  c.metadata["seed"] = seed;
  return c;
}

/// Correctable flip eps and non-QND flip eps_qnd on qubit 0; qubit 1 ideal.
inline NoiseModel crem_model_noise(double eps, double eps_qnd) {
  NoiseModel m;
  m.readout = {ReadoutError{eps, eps}, ReadoutError{}};
  m.eps_qnd = {eps_qnd, 0.0};
  return m;
}

/// Seeded random dynamic circuit with n_mid mid-circuit measurements, each
/// followed by feed-forward on the bits recorded so far (odd-indexed ones
/// also reset their qubit through a conditional X). All qubits are measured
/// at the end into bits n_mid.. .
inline DynamicCircuit random_dynamic_circuit(int n_qubits, int n_mid, std::uint64_t seed) {
  if (n_qubits < 1 || n_qubits > 4 || n_mid < 0 || n_mid > 8) fail(ErrorCode::InvalidArgument, "unsupported size");
  std::mt19937_64 rng(seed);
  const Eigen::Index d = Eigen::Index{1} << n_qubits;
  std::vector<int> all(static_cast<std::size_t>(n_qubits));
  for (int q = 0; q < n_qubits; ++q) all[static_cast<std::size_t>(q)] = q;
  DynamicCircuit c;
  c.n_system = n_qubits;
  c.n_clbits = n_mid + n_qubits;
  c.ops.push_back(UnitaryBox{all, num::haar_unitary(d, rng)});
  for (int j = 0; j < n_mid; ++j) {
    const int q = j % n_qubits;
    c.ops.push_back(Measure{q, j});
    if (j % 2 == 1) c.ops.push_back(Reset{q, true, Condition::on_bits({j}, 1)});
    // one branch on this bit alone, one on a random pattern of all bits so far
    const std::uint64_t v = rng() & 1;
    c.ops.push_back(ConditionalUnitary{all, num::haar_unitary(d, rng), Condition::on_bits({j}, v)});
    std::vector<int> bits;
    for (int b = 0; b <= j; ++b) bits.push_back(b);
    c.ops.push_back(ConditionalUnitary{all, num::haar_unitary(d, rng),
                                       Condition::on_bits(bits, rng() & ((std::uint64_t{1} << (j + 1)) - 1))});
  }
  for (int q = 0; q < n_qubits; ++q) c.ops.push_back(Measure{q, n_mid + q});
  c.metadata["model"] = "random_dynamic";
  c.metadata["seed"] = seed;
  return c;
}

}  // namespace povmkit

#endif  // POVMKIT_MITIGATION_HPP
