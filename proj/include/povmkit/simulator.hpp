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

#ifndef POVMKIT_SIMULATOR_HPP
#define POVMKIT_SIMULATOR_HPP

// Exact execution of dynamic circuits by branching over unnormalised density
// matrices. Branches are keyed by the classical register value; two branches
// with the same register are merged since no later op can tell them apart.
//
// Noise model.
//   eps_cnot: two-qubit depolarising channel after every CNOT of a compiled block.
//   eps_idle: depolarising channel on all qubits before every Measure, every
//     conditioned unitary and every conditional-X reset (applied to every
//     branch). Each site has its own switch.
//   readout: per-qubit confusion matrix, realised as a bit flip before an
//     ideal projective measurement, so the post-measurement state agrees with
//     the recorded bit; eps_qnd then flips the qubit without touching the bit.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "povmkit/circuit.hpp"
#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"

namespace povmkit {

/// Readout confusion for one qubit: eps0 = P(read 1 | 0), eps1 = P(read 0 | 1).
struct ReadoutError {
  double eps0 = 0.0;
  double eps1 = 0.0;
};

struct NoiseModel {
  double eps_cnot = 0.0;
  double eps_idle = 0.0;
  std::vector<ReadoutError> readout;  // per qubit; missing entries are ideal
  std::vector<double> eps_qnd;        // per qubit; missing entries are ideal
  bool idle_at_measure = true;
  bool idle_at_feed_forward = true;
  bool idle_at_reset = true;  // conditional-X resets are feed-forward too

  ReadoutError readout_of(int q) const {
    return static_cast<std::size_t>(q) < readout.size() ? readout[static_cast<std::size_t>(q)] : ReadoutError{};
  }
  double qnd_of(int q) const {
    return static_cast<std::size_t>(q) < eps_qnd.size() ? eps_qnd[static_cast<std::size_t>(q)] : 0.0;
  }

  static NoiseModel uniform_readout(int n_qubits, double eps, double qnd = 0.0) {
    NoiseModel m;
    m.readout.assign(static_cast<std::size_t>(n_qubits), ReadoutError{eps, eps});
    m.eps_qnd.assign(static_cast<std::size_t>(n_qubits), qnd);
    return m;
  }
};

inline void check_noise(const NoiseModel& m) {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, std::string(what) + " must lie in [0,1]");
  };
  prob(m.eps_cnot, "eps_cnot");
  prob(m.eps_idle, "eps_idle");
  for (const auto& r : m.readout) {
    prob(r.eps0, "readout eps0");
    prob(r.eps1, "readout eps1");
  }
  for (double q : m.eps_qnd) prob(q, "eps_qnd");
}

struct TraceBranch {
  std::uint64_t reg = 0;
  double probability = 0.0;
  ComplexMatrix state;  // normalised, all circuit qubits
};

struct ExecutionTrace {
  int n_clbits = 0;
  int n_qubits = 0;
  std::vector<TraceBranch> branches;  // ascending register value

  double total_probability() const {
    double s = 0.0;
    for (const auto& b : branches) s += b.probability;
    return s;
  }

  OutcomeDistribution distribution() const {
    OutcomeDistribution d;
    d.n_bits = n_clbits;
    d.values.assign(std::size_t{1} << n_clbits, 0.0);
    for (const auto& b : branches) d.values[b.reg] += b.probability;
    return d;
  }

  const TraceBranch* find(std::uint64_t reg) const {
    for (const auto& b : branches) {
      if (b.reg == reg) return &b;
    }
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Density-matrix kernels

namespace sim {

/// Apply a local operator (indexed as in the circuit IR) from the left.
inline void apply_left(ComplexMatrix& m, const ComplexMatrix& u, const std::vector<int>& qubits) {
  const Eigen::Index dim = m.rows();
  const std::size_t k = qubits.size();
  const Eigen::Index local = Eigen::Index{1} << k;
  Eigen::Index mask = 0;
  std::vector<Eigen::Index> offset(static_cast<std::size_t>(local), 0);
  for (std::size_t j = 0; j < k; ++j) mask |= Eigen::Index{1} << qubits[j];
  for (Eigen::Index a = 0; a < local; ++a) {
    for (std::size_t j = 0; j < k; ++j) {
      if ((a >> j) & 1) offset[static_cast<std::size_t>(a)] |= Eigen::Index{1} << qubits[j];
    }
  }
  ComplexVector in(local), out(local);
  for (Eigen::Index base = 0; base < dim; ++base) {
    if (base & mask) continue;
    for (Eigen::Index col = 0; col < m.cols(); ++col) {
      for (Eigen::Index a = 0; a < local; ++a) in(a) = m(base | offset[static_cast<std::size_t>(a)], col);
      out.noalias() = u * in;
      for (Eigen::Index a = 0; a < local; ++a) m(base | offset[static_cast<std::size_t>(a)], col) = out(a);
    }
  }
}

/// rho -> U rho U^dagger for Hermitian rho.
inline void conjugate(ComplexMatrix& rho, const ComplexMatrix& u, const std::vector<int>& qubits) {
  apply_left(rho, u, qubits);
  rho.adjointInPlace();
  apply_left(rho, u, qubits);
}

inline void apply_x(ComplexMatrix& rho, int q) {
  const Eigen::Index bit = Eigen::Index{1} << q;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    if (!(i & bit)) rho.row(i).swap(rho.row(i | bit));
  }
  for (Eigen::Index j = 0; j < rho.cols(); ++j) {
    if (!(j & bit)) rho.col(j).swap(rho.col(j | bit));
  }
}

inline void apply_cx(ComplexMatrix& rho, int c, int t) {
  const Eigen::Index cb = Eigen::Index{1} << c, tb = Eigen::Index{1} << t;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    if ((i & cb) && !(i & tb)) rho.row(i).swap(rho.row(i | tb));
  }
  for (Eigen::Index j = 0; j < rho.cols(); ++j) {
    if ((j & cb) && !(j & tb)) rho.col(j).swap(rho.col(j | tb));
  }
}

/// Keep only the block where qubit q equals x.
inline ComplexMatrix project(const ComplexMatrix& rho, int q, int x) {
  ComplexMatrix out = rho;
  const Eigen::Index bit = Eigen::Index{1} << q;
  for (Eigen::Index i = 0; i < rho.rows(); ++i) {
    if (((i & bit) != 0) != (x != 0)) {
      out.row(i).setZero();
      out.col(i).setZero();
    }
  }
  return out;
}

}  // namespace sim

/// rho -> (1-p) rho + p Tr_S(rho) (x) I/2^k on qubits S (of an n-qubit register).
inline ComplexMatrix depolarize(const ComplexMatrix& rho, double p, const std::vector<int>& qubits) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidArgument, "depolarizing strength must lie in [0,1]");
  if (p == 0.0 || qubits.empty()) return rho;
  Eigen::Index mask = 0;
  for (int q : qubits) mask |= Eigen::Index{1} << q;
  const std::size_t k = qubits.size();
  const Eigen::Index local = Eigen::Index{1} << k;
  std::vector<Eigen::Index> offset(static_cast<std::size_t>(local), 0);
  for (Eigen::Index a = 0; a < local; ++a) {
    for (std::size_t j = 0; j < k; ++j) {
      if ((a >> j) & 1) offset[static_cast<std::size_t>(a)] |= Eigen::Index{1} << qubits[j];
    }
  }
  const Eigen::Index dim = rho.rows();
  ComplexMatrix out = (1.0 - p) * rho;
  const double scale = p / static_cast<double>(local);
  for (Eigen::Index bi = 0; bi < dim; ++bi) {
    if (bi & mask) continue;
    for (Eigen::Index bj = 0; bj < dim; ++bj) {
      if (bj & mask) continue;
      Complex t = 0.0;
      for (Eigen::Index a = 0; a < local; ++a) t += rho(bi | offset[static_cast<std::size_t>(a)], bj | offset[static_cast<std::size_t>(a)]);
      t *= scale;
      for (Eigen::Index a = 0; a < local; ++a) out(bi | offset[static_cast<std::size_t>(a)], bj | offset[static_cast<std::size_t>(a)]) += t;
    }
  }
  return out;
}

inline ComplexMatrix depolarize_all(const ComplexMatrix& rho, double p, int n_qubits) {
  std::vector<int> all(static_cast<std::size_t>(n_qubits));
  for (int q = 0; q < n_qubits; ++q) all[static_cast<std::size_t>(q)] = q;
  return depolarize(rho, p, all);
}

/// System state embedded with the auxiliary register in |0...0>.
inline ComplexMatrix embed_input(const ComplexMatrix& rho, int n_qubits) {
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  ComplexMatrix full = ComplexMatrix::Zero(dim, dim);
  full.topLeftCorner(rho.rows(), rho.cols()) = rho;
  return full;
}

inline ExecutionTrace run_exact(const DynamicCircuit& c, const ComplexMatrix& input, const NoiseModel& noise = {}) {
  const CircuitReport rep = validate_circuit(c);
  if (!rep.valid()) fail(ErrorCode::InvalidCircuit, rep.violations.front());
  check_noise(noise);
  const Eigen::Index d_sys = Eigen::Index{1} << c.n_system;
  if (input.rows() != d_sys || input.cols() != d_sys) {
    fail(ErrorCode::DimensionMismatch, "input state is " + std::to_string(input.rows()) + "x" +
                                           std::to_string(input.cols()) + ", circuit expects dimension " +
                                           std::to_string(d_sys));
  }
  const int nq = c.n_qubits();
  std::map<std::uint64_t, ComplexMatrix> branches;
  branches.emplace(0, embed_input(input, nq));

  auto idle = [&]() {
    if (noise.eps_idle == 0.0) return;
    for (auto& [reg, rho] : branches) rho = depolarize_all(rho, noise.eps_idle, nq);
  };
  auto run_block = [&](ComplexMatrix& rho, const CompiledBlock& b) {
    for (const Gate& g : b.gates) {
      if (g.kind == Gate::Kind::CX) {
        const int ctl = b.qubits[static_cast<std::size_t>(g.qubits[0])];
        const int tgt = b.qubits[static_cast<std::size_t>(g.qubits[1])];
        sim::apply_cx(rho, ctl, tgt);
        if (noise.eps_cnot > 0.0) rho = depolarize(rho, noise.eps_cnot, {ctl, tgt});
      } else {
        sim::conjugate(rho, rotation_matrix(g.params[0], g.params[1], g.params[2]),
                       {b.qubits[static_cast<std::size_t>(g.qubits[0])]});
      }
    }
  };

  for (const CircuitOp& op : c.ops) {
    if (const auto* u = std::get_if<UnitaryBox>(&op)) {
      for (auto& [reg, rho] : branches) sim::conjugate(rho, u->matrix, u->qubits);
    } else if (const auto* m = std::get_if<Measure>(&op)) {
      if (noise.idle_at_measure) idle();
      const ReadoutError ro = noise.readout_of(m->qubit);
      const double qnd = noise.qnd_of(m->qubit);
      const std::uint64_t bit = std::uint64_t{1} << m->clbit;
      std::map<std::uint64_t, ComplexMatrix> next;
      auto deposit = [&](std::uint64_t reg, ComplexMatrix rho) {
        if (rho.trace().real() <= 1e-300 && rho.cwiseAbs().maxCoeff() <= 1e-300) return;
        auto it = next.find(reg);
        if (it == next.end()) {
          next.emplace(reg, std::move(rho));
        } else {
          it->second += rho;
        }
      };
      for (auto& [reg, rho] : branches) {
        const ComplexMatrix p0 = sim::project(rho, m->qubit, 0);
        const ComplexMatrix p1 = sim::project(rho, m->qubit, 1);
        for (int y = 0; y < 2; ++y) {
          // recorded y: either truly y and kept, or truly 1-y and flipped onto y
          const double keep = y == 0 ? 1.0 - ro.eps0 : 1.0 - ro.eps1;
          const double flip = y == 0 ? ro.eps1 : ro.eps0;
          ComplexMatrix out = keep * (y == 0 ? p0 : p1);
          if (flip > 0.0) {
            ComplexMatrix moved = y == 0 ? p1 : p0;
            sim::apply_x(moved, m->qubit);
            out += flip * moved;
          }
          if (qnd > 0.0) {
            ComplexMatrix flipped = out;
            sim::apply_x(flipped, m->qubit);
            out = (1.0 - qnd) * out + qnd * flipped;
          }
          deposit(y ? (reg | bit) : (reg & ~bit), std::move(out));
        }
      }
      branches = std::move(next);
    } else if (const auto* cu = std::get_if<ConditionalUnitary>(&op)) {
      if (noise.idle_at_feed_forward) idle();
      for (auto& [reg, rho] : branches) {
        if (cu->cond.matches(reg)) sim::conjugate(rho, cu->matrix, cu->qubits);
      }
    } else if (const auto* r = std::get_if<Reset>(&op)) {
      if (r->via_conditional_x && noise.idle_at_reset) idle();
      for (auto& [reg, rho] : branches) {
        if (r->via_conditional_x) {
          if (r->cond.matches(reg)) sim::apply_x(rho, r->qubit);
        } else {
          ComplexMatrix lowered = sim::project(rho, r->qubit, 1);
          sim::apply_x(lowered, r->qubit);
          rho = sim::project(rho, r->qubit, 0) + lowered;
        }
      }
    } else if (const auto* b = std::get_if<CompiledBlock>(&op)) {
      if (b->cond && noise.idle_at_feed_forward) idle();
      for (auto& [reg, rho] : branches) {
        if (!b->cond || b->cond->matches(reg)) run_block(rho, *b);
      }
    }
  }

  ExecutionTrace t;
  t.n_clbits = c.n_clbits;
  t.n_qubits = nq;
  for (auto& [reg, rho] : branches) {
    const double p = rho.trace().real();
    TraceBranch tb{reg, std::max(0.0, p), ComplexMatrix()};
    if (p > 0.0) {
      tb.state = rho / p;
    } else {
      tb.state = ComplexMatrix::Zero(rho.rows(), rho.cols());
    }
    t.branches.push_back(std::move(tb));
  }
  return t;
}

/// Reduced state of the system register of a branch.
inline ComplexMatrix system_state(const ExecutionTrace& t, const TraceBranch& b, int n_system) {
  std::vector<int> keep(static_cast<std::size_t>(n_system));
  for (int q = 0; q < n_system; ++q) keep[static_cast<std::size_t>(q)] = q;
  return num::partial_trace(b.state, t.n_qubits, keep);
}

/// Multinomial draw over a probability vector by sequential binomials.
template <class Rng>
OutcomeDistribution sample_counts(const OutcomeDistribution& probs, std::uint64_t shots, Rng& rng) {
  OutcomeDistribution out;
  out.is_counts = true;
  out.n_bits = probs.n_bits;
  out.values.assign(probs.size(), 0.0);
  double remaining_p = 0.0;
  for (double p : probs.values) remaining_p += std::max(0.0, p);
  std::uint64_t remaining = shots;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    const double p = std::max(0.0, probs.values[i]);
    std::uint64_t k = remaining;
    if (i + 1 < probs.size() && remaining_p > 0.0) {
      const double q = std::clamp(p / remaining_p, 0.0, 1.0);
      std::binomial_distribution<std::uint64_t> bin(remaining, q);
      k = bin(rng);
    }
    out.values[i] = static_cast<double>(k);
    remaining -= k;
    remaining_p -= p;
  }
  return out;
}

inline OutcomeDistribution sample(const DynamicCircuit& c, const ComplexMatrix& input, const NoiseModel& noise,
                                  std::uint64_t shots, std::uint64_t seed) {
  if (shots == 0) fail(ErrorCode::InvalidArgument, "shots must be positive");
  std::mt19937_64 rng(seed);
  OutcomeDistribution p = run_exact(c, input, noise).distribution();
  return sample_counts(p, shots, rng);
}

inline nlohmann::json trace_to_json(const ExecutionTrace& t) {
  nlohmann::json probs = nlohmann::json::object();
  for (const auto& b : t.branches) probs[to_bitstring(b.reg, t.n_clbits)] = b.probability;
  return {{"n_clbits", t.n_clbits}, {"probabilities", probs}, {"total_probability", t.total_probability()}};
}

inline nlohmann::json noise_to_json(const NoiseModel& m) {
  nlohmann::json ro = nlohmann::json::array();
  for (const auto& r : m.readout) ro.push_back({r.eps0, r.eps1});
  return {{"eps_cnot", m.eps_cnot}, {"eps_idle", m.eps_idle}, {"readout", ro}, {"eps_qnd", m.eps_qnd},
          {"idle_at_measure", m.idle_at_measure}, {"idle_at_feed_forward", m.idle_at_feed_forward},
          {"idle_at_reset", m.idle_at_reset}};
}

inline NoiseModel noise_from_json(const nlohmann::json& j) {
  NoiseModel m;
  try {
    m.eps_cnot = j.value("eps_cnot", 0.0);
    m.eps_idle = j.value("eps_idle", 0.0);
    if (j.contains("readout")) {
      for (const auto& r : j["readout"]) m.readout.push_back({r.at(0).get<double>(), r.at(1).get<double>()});
    }
    if (j.contains("eps_qnd")) m.eps_qnd = j["eps_qnd"].get<std::vector<double>>();
    m.idle_at_measure = j.value("idle_at_measure", true);
    m.idle_at_feed_forward = j.value("idle_at_feed_forward", true);
    m.idle_at_reset = j.value("idle_at_reset", true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("noise model: ") + e.what());
  }
  check_noise(m);
  return m;
}

}  // namespace povmkit

#endif  // POVMKIT_SIMULATOR_HPP
