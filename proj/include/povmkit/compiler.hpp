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

#ifndef POVMKIT_COMPILER_HPP
#define POVMKIT_COMPILER_HPP

// Approximate compilation into a CNOT-budgeted template and closed-form CNOT
// upper bounds for the three schemes.
//
// Template: a rotation Rz Ry Rz on every qubit, then `budget` CNOTs placed
// round-robin over the connectivity edges, each followed by a rotation on
// both of its qubits. Angles minimise the phase-invariant distance
// sqrt(1 - |Tr(V^dagger U)|^2 / D^2) by L-BFGS with an analytic gradient,
// restarted from a fixed list of seeds.

#include <future>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <ceres/ceres.h>

#include "povmkit/circuit.hpp"
#include "povmkit/numkit.hpp"
#include "povmkit/schemes.hpp"

namespace povmkit {

using Edge = std::pair<int, int>;

inline std::vector<Edge> linear_chain(int n_qubits) {
  std::vector<Edge> e;
  for (int q = 0; q + 1 < n_qubits; ++q) e.emplace_back(q, q + 1);
  return e;
}

struct CompileOptions {
  int seeds = 20;
  std::uint64_t seed = 1234;
  int max_iterations = 5000;
  double gradient_tol = 1e-9;
  double stop_distance = 1e-10;  // later seeds are skipped once one gets here
  int jobs = 1;
};

struct CompilationResult {
  CompiledBlock block;
  int cnot_count = 0;
  double distance = 0.0;
  int iterations = 0;
  int seed_index = 0;
};

/// Phase-invariant distance, evaluated without cancellation:
/// 1 - |T|^2/D^2 = (||V - e^{-i arg T} U||^2 / 2D) (1 + |T|/D).
inline double unitary_distance(const ComplexMatrix& v, const ComplexMatrix& u) {
  const double dim = static_cast<double>(u.rows());
  const Complex t = (v.adjoint() * u).trace();
  const Complex phase = std::abs(t) > 0 ? std::conj(t) / std::abs(t) : Complex(1.0);
  const double gap = (v - phase * u).squaredNorm() / (2 * dim) * (1 + std::abs(t) / dim);
  return std::sqrt(std::max(0.0, gap));
}

namespace detail {

struct TemplateSlot {
  bool cx = false;
  int q0 = 0, q1 = 0;
  int param = -1;  // first of three angles for rotations
};

inline std::vector<TemplateSlot> build_template(int n, int budget, const std::vector<Edge>& edges) {
  std::vector<TemplateSlot> slots;
  int p = 0;
  for (int q = 0; q < n; ++q) {
    slots.push_back({false, q, q, p});
    p += 3;
  }
  for (int k = 0; k < budget; ++k) {
    const Edge& e = edges[static_cast<std::size_t>(k) % edges.size()];
    slots.push_back({true, e.first, e.second, -1});
    slots.push_back({false, e.first, e.first, p});
    p += 3;
    slots.push_back({false, e.second, e.second, p});
    p += 3;
  }
  return slots;
}

inline int template_parameters(int n, int budget) { return 3 * n + 6 * budget; }

// m <- g m on qubit q (g is 2x2)
inline void left_1q(ComplexMatrix& m, const ComplexMatrix& g, int q) {
  const Eigen::Index bit = Eigen::Index{1} << q;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i & bit) continue;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const Complex a = m(i, c), b = m(i | bit, c);
      m(i, c) = g(0, 0) * a + g(0, 1) * b;
      m(i | bit, c) = g(1, 0) * a + g(1, 1) * b;
    }
  }
}

// m <- m g on qubit q
inline void right_1q(ComplexMatrix& m, const ComplexMatrix& g, int q) {
  const Eigen::Index bit = Eigen::Index{1} << q;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c & bit) continue;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const Complex a = m(r, c), b = m(r, c | bit);
      m(r, c) = a * g(0, 0) + b * g(1, 0);
      m(r, c | bit) = a * g(0, 1) + b * g(1, 1);
    }
  }
}

inline void left_cx(ComplexMatrix& m, int c, int t) {
  const Eigen::Index cb = Eigen::Index{1} << c, tb = Eigen::Index{1} << t;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if ((i & cb) && !(i & tb)) m.row(i).swap(m.row(i | tb));
  }
}

inline void right_cx(ComplexMatrix& m, int c, int t) {
  const Eigen::Index cb = Eigen::Index{1} << c, tb = Eigen::Index{1} << t;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if ((j & cb) && !(j & tb)) m.col(j).swap(m.col(j | tb));
  }
}

/// Cost 1 - |Tr(V^dagger U)|^2 / D^2 of the template and its gradient.
class TemplateCost final : public ceres::FirstOrderFunction {
 public:
  TemplateCost(ComplexMatrix target, int n, std::vector<TemplateSlot> slots, int n_params)
      : u_(std::move(target)), n_(n), slots_(std::move(slots)), n_params_(n_params) {}

  int NumParameters() const override { return n_params_; }

  bool Evaluate(const double* x, double* cost, double* gradient) const override {
    const Eigen::Index dim = u_.rows();
    const double dd = static_cast<double>(dim);
    std::vector<ComplexMatrix> g(slots_.size());
    for (std::size_t k = 0; k < slots_.size(); ++k) {
      if (!slots_[k].cx) g[k] = rotation_matrix(x[slots_[k].param], x[slots_[k].param + 1], x[slots_[k].param + 2]);
    }
    ComplexMatrix v = ComplexMatrix::Identity(dim, dim);
    for (std::size_t k = 0; k < slots_.size(); ++k) apply_left(v, k, g);
    const Complex t = (v.adjoint() * u_).trace();
    const Complex phase = std::abs(t) > 0 ? std::conj(t) / std::abs(t) : Complex(1.0);
    *cost = (v - phase * u_).squaredNorm() / (2 * dd) * (1 + std::abs(t) / dd);
    if (gradient == nullptr) return true;

    // M_k = A_k^dagger U B_k^dagger with V = A_k G_k B_k; dT = Tr(dG_k^dagger M_k).
    ComplexMatrix m = u_ * v.adjoint();
    apply_right(m, slots_.size() - 1, g);
    const ComplexMatrix z = num::pauli(3), y = num::pauli(2);
    const Complex mhalf_i(0.0, -0.5);
    for (std::size_t kk = slots_.size(); kk-- > 0;) {
      const TemplateSlot& s = slots_[kk];
      if (!s.cx) {
        // reduced 2x2 block of M on qubit q
        ComplexMatrix red = ComplexMatrix::Zero(2, 2);
        const Eigen::Index bit = Eigen::Index{1} << s.q0;
        for (Eigen::Index r = 0; r < dim; ++r) {
          if (r & bit) continue;
          red(0, 0) += m(r, r);
          red(0, 1) += m(r, r | bit);
          red(1, 0) += m(r | bit, r);
          red(1, 1) += m(r | bit, r | bit);
        }
        const double a = x[s.param], b = x[s.param + 1], c = x[s.param + 2];
        const ComplexMatrix ra = rz(a), rb = ry(b), rc = rz(c);
        const std::array<ComplexMatrix, 3> dg = {mhalf_i * z * ra * rb * rc, mhalf_i * ra * y * rb * rc,
                                                  mhalf_i * ra * rb * rc * z};
        for (int j = 0; j < 3; ++j) {
          const Complex dt = (dg[static_cast<std::size_t>(j)].conjugate().cwiseProduct(red)).sum();
          gradient[s.param + j] = -2.0 * (std::conj(t) * dt).real() / (dd * dd);
        }
      }
      if (kk == 0) break;
      apply_left_adjoint(m, kk, g);
      apply_right(m, kk - 1, g);
    }
    return true;
  }

 private:
  void apply_left(ComplexMatrix& m, std::size_t k, const std::vector<ComplexMatrix>& g) const {
    const TemplateSlot& s = slots_[k];
    if (s.cx) {
      left_cx(m, s.q0, s.q1);
    } else {
      left_1q(m, g[k], s.q0);
    }
  }
  void apply_left_adjoint(ComplexMatrix& m, std::size_t k, const std::vector<ComplexMatrix>& g) const {
    const TemplateSlot& s = slots_[k];
    if (s.cx) {
      left_cx(m, s.q0, s.q1);
    } else {
      left_1q(m, g[k].adjoint(), s.q0);
    }
  }
  void apply_right(ComplexMatrix& m, std::size_t k, const std::vector<ComplexMatrix>& g) const {
    const TemplateSlot& s = slots_[k];
    if (s.cx) {
      right_cx(m, s.q0, s.q1);
    } else {
      right_1q(m, g[k], s.q0);
    }
  }

  ComplexMatrix u_;
  int n_;
  std::vector<TemplateSlot> slots_;
  int n_params_;
};

inline CompiledBlock block_from_params(int n, const std::vector<TemplateSlot>& slots, const std::vector<double>& x) {
  CompiledBlock b;
  for (int q = 0; q < n; ++q) b.qubits.push_back(q);
  for (const auto& s : slots) {
    if (s.cx) {
      b.gates.push_back(Gate::cx(s.q0, s.q1));
    } else {
      const auto p = static_cast<std::size_t>(s.param);
      b.gates.push_back(Gate::rot(s.q0, x[p], x[p + 1], x[p + 2]));
    }
  }
  return b;
}

inline void check_connectivity(int n, const std::vector<Edge>& edges) {
  for (const auto& [a, b] : edges) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) fail(ErrorCode::InvalidArgument, "connectivity edge out of range");
  }
  if (n <= 1) return;
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> root = [&](int v) {
    return parent[static_cast<std::size_t>(v)] == v ? v : parent[static_cast<std::size_t>(v)] = root(parent[static_cast<std::size_t>(v)]);
  };
  for (const auto& [a, b] : edges) parent[static_cast<std::size_t>(root(a))] = root(b);
  for (int q = 1; q < n; ++q) {
    if (root(q) != root(0)) fail(ErrorCode::InvalidArgument, "connectivity graph is not connected");
  }
}

struct SeedOutcome {
  std::vector<double> x;
  double distance = 1.0;
  int iterations = 0;
  bool usable = false;
};

inline SeedOutcome run_seed(const ComplexMatrix& target, int n, const std::vector<TemplateSlot>& slots, int n_params,
                            std::uint64_t seed, const CompileOptions& opts) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  std::vector<double> x(static_cast<std::size_t>(n_params));
  for (double& v : x) v = angle(rng);
  SeedOutcome out;
  if (n_params > 0) {
    ceres::GradientProblem problem(new TemplateCost(target, n, slots, n_params));
    ceres::GradientProblemSolver::Options o;
    o.line_search_direction_type = ceres::LBFGS;
    o.max_num_iterations = opts.max_iterations;
    o.gradient_tolerance = opts.gradient_tol;
    o.function_tolerance = 1e-15;
    o.parameter_tolerance = 1e-15;
    o.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(o, problem, x.data(), &summary);
    out.iterations = static_cast<int>(summary.iterations.size());
    out.usable = summary.IsSolutionUsable();
  } else {
    out.usable = true;
  }
  out.distance = unitary_distance(gates_matrix(block_from_params(n, slots, x).gates, n), target);
  out.x = std::move(x);
  return out;
}

}  // namespace detail

/// Best-of-seeds fit of the budgeted template to `target`.
inline CompilationResult approx_compile(const ComplexMatrix& target, int n_qubits, int cnot_budget,
                                        std::vector<Edge> connectivity = {}, const CompileOptions& opts = {}) {
  const Eigen::Index dim = Eigen::Index{1} << n_qubits;
  if (n_qubits < 1 || target.rows() != dim || target.cols() != dim) {
    fail(ErrorCode::DimensionMismatch, "target must be a 2^n x 2^n matrix");
  }
  if (!num::is_unitary(target)) fail(ErrorCode::InvalidArgument, "target is not unitary");
  if (cnot_budget < 0) fail(ErrorCode::InvalidArgument, "CNOT budget must be non-negative");
  if (opts.seeds < 1) fail(ErrorCode::InvalidArgument, "at least one seed is required");
  if (connectivity.empty()) connectivity = linear_chain(n_qubits);
  detail::check_connectivity(n_qubits, connectivity);
  if (cnot_budget > 0 && n_qubits < 2) fail(ErrorCode::InvalidArgument, "CNOTs need at least two qubits");

  const auto slots = detail::build_template(n_qubits, cnot_budget, connectivity);
  const int n_params = detail::template_parameters(n_qubits, cnot_budget);
  std::seed_seq base{opts.seed, static_cast<std::uint64_t>(n_qubits), static_cast<std::uint64_t>(cnot_budget)};
  std::vector<std::uint32_t> stream(static_cast<std::size_t>(opts.seeds));
  base.generate(stream.begin(), stream.end());

  std::vector<detail::SeedOutcome> runs;
  const int jobs = std::max(1, opts.jobs);
  int first_hit = -1;
  for (int start = 0; start < opts.seeds && first_hit < 0; start += jobs) {
    const int stop = std::min(opts.seeds, start + jobs);
    std::vector<std::future<detail::SeedOutcome>> futures;
    for (int s = start; s < stop; ++s) {
      futures.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, [&, s] {
        return detail::run_seed(target, n_qubits, slots, n_params, stream[static_cast<std::size_t>(s)], opts);
      }));
    }
    for (auto& f : futures) runs.push_back(f.get());
    for (int s = start; s < stop; ++s) {
      if (runs[static_cast<std::size_t>(s)].distance < opts.stop_distance) {
        first_hit = s;
        break;
      }
    }
  }
  const int considered = first_hit >= 0 ? first_hit + 1 : static_cast<int>(runs.size());
  int best = -1;
  bool any_usable = false;
  for (int s = 0; s < considered; ++s) {
    const auto& r = runs[static_cast<std::size_t>(s)];
    any_usable = any_usable || r.usable;
    if (best < 0 || r.distance < runs[static_cast<std::size_t>(best)].distance) best = s;
  }
  if (!any_usable) fail(ErrorCode::OptimizerStalled, "no seed produced a usable solution");
  const auto& r = runs[static_cast<std::size_t>(best)];
  CompilationResult out;
  out.block = detail::block_from_params(n_qubits, slots, r.x);
  out.cnot_count = cnot_budget;
  out.distance = r.distance;
  out.iterations = r.iterations;
  out.seed_index = best;
  return out;
}

/// One result per budget; a budget whose fit is worse than a smaller budget's
/// reports the smaller budget's circuit instead.
inline std::vector<CompilationResult> pareto_sweep(const ComplexMatrix& target, int n_qubits, const std::vector<int>& budgets,
                                                   const std::vector<Edge>& connectivity = {},
                                                   const CompileOptions& opts = {}) {
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] < budgets[i - 1]) fail(ErrorCode::InvalidArgument, "budgets must be ascending");
  }
  std::vector<CompilationResult> out;
  for (int b : budgets) {
    CompilationResult r = approx_compile(target, n_qubits, b, connectivity, opts);
    if (!out.empty() && out.back().distance < r.distance) r = out.back();
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string pareto_csv(const std::vector<int>& budgets, const std::vector<CompilationResult>& results) {
  std::ostringstream os;
  os.precision(17);
  os << "budget,distance,iterations\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    os << budgets[i] << ',' << results[i].distance << ',' << results[i].iterations << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Whole-circuit compilation

/// Unitary layer of each op: the number of Measure ops preceding it.
inline std::vector<int> unitary_layers(const DynamicCircuit& c) {
  std::vector<int> layer(c.ops.size(), -1);
  int measures = 0;
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    if (std::holds_alternative<Measure>(c.ops[i])) ++measures;
    if (std::holds_alternative<UnitaryBox>(c.ops[i]) || std::holds_alternative<ConditionalUnitary>(c.ops[i])) {
      layer[i] = measures;
    }
  }
  return layer;
}

/// Split a path budget over `layers` unitary layers as evenly as possible,
/// earlier layers taking the remainder.
inline std::vector<int> split_budget(int budget, int layers) {
  std::vector<int> out(static_cast<std::size_t>(layers), budget / std::max(1, layers));
  for (int i = 0; i < budget % std::max(1, layers); ++i) out[static_cast<std::size_t>(i)]++;
  return out;
}

struct CircuitCompilation {
  DynamicCircuit circuit;
  std::vector<double> distances;  // per replaced op, in op order
  std::vector<int> layer_budgets;
  double max_distance = 0.0;
};

/// Replace every unitary payload by a compiled block. `path_budget` counts
/// CNOTs along one execution path and is shared out over the unitary layers.
inline CircuitCompilation compile_circuit(const DynamicCircuit& c, int path_budget, const CompileOptions& opts = {},
                                          const std::vector<Edge>& connectivity = {}) {
  const std::vector<int> layer = unitary_layers(c);
  int layers = 0;
  for (int l : layer) layers = std::max(layers, l + 1);
  CircuitCompilation out;
  out.layer_budgets = split_budget(path_budget, layers);
  out.circuit = c;
  // Blocks are compiled on local qubit indices, with the chain in local order.
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    if (layer[i] < 0) continue;
    const auto qubits = op_qubits(c.ops[i]);
    const ComplexMatrix* m = nullptr;
    std::optional<Condition> cond;
    if (const auto* u = std::get_if<UnitaryBox>(&c.ops[i])) m = &u->matrix;
    if (const auto* u = std::get_if<ConditionalUnitary>(&c.ops[i])) {
      m = &u->matrix;
      cond = u->cond;
    }
    const int k = static_cast<int>(qubits.size());
    const int b = k > 1 ? out.layer_budgets[static_cast<std::size_t>(layer[i])] : 0;
    CompilationResult r = approx_compile(*m, k, b, connectivity, opts);
    r.block.qubits = qubits;
    r.block.cond = cond;
    out.distances.push_back(r.distance);
    out.max_distance = std::max(out.max_distance, r.distance);
    out.circuit.ops[i] = std::move(r.block);
  }
  out.circuit.metadata["path_cnot_budget"] = path_budget;
  return out;
}

/// Compile at each of the ascending path budgets. Budgets act as upper
/// bounds: an op keeps the block from a smaller budget unless the larger one
/// lowers its distance by more than `keep_tol`.
inline std::vector<CircuitCompilation> compile_circuit_sweep(const DynamicCircuit& c, const std::vector<int>& budgets,
                                                             const CompileOptions& opts = {},
                                                             const std::vector<Edge>& connectivity = {},
                                                             double keep_tol = 1e-6) {
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] < budgets[i - 1]) fail(ErrorCode::InvalidArgument, "budgets must be ascending");
  }
  std::vector<CircuitCompilation> out;
  for (int b : budgets) {
    CircuitCompilation cur = compile_circuit(c, b, opts, connectivity);
    if (!out.empty()) {
      const CircuitCompilation& prev = out.back();
      std::size_t k = 0;
      cur.max_distance = 0.0;
      for (std::size_t i = 0; i < cur.circuit.ops.size(); ++i) {
        if (!std::holds_alternative<CompiledBlock>(cur.circuit.ops[i]) ||
            std::holds_alternative<CompiledBlock>(c.ops[i])) {
          continue;
        }
        if (cur.distances[k] > prev.distances[k] - keep_tol) {
          cur.circuit.ops[i] = prev.circuit.ops[i];
          cur.distances[k] = prev.distances[k];
        }
        cur.max_distance = std::max(cur.max_distance, cur.distances[k]);
        ++k;
      }
    }
    out.push_back(std::move(cur));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Closed-form resource estimates

struct ResourceEstimate {
  Scheme scheme = Scheme::Naimark;
  int n = 0;
  std::uint64_t m = 0;
  std::uint64_t cnot_upper_bound = 0;
  int unitary_layers = 0;
  int mid_circuit_measurements = 0;
  std::uint64_t feed_forward_cases = 0;
};

/// CNOT upper bound by regime (M padded to a power of two):
///   2^n < M <= 2^(n+1):  Naimark 4^(n+1), binary (n+1) 4^(n+1), hybrid 4^(n+1)
///   2^(n+1) < M <= 4^n:  Naimark M^2, binary log2(M) 4^(n+1), hybrid (log2(M) - n) 4^(n+1)
inline ResourceEstimate resource_estimate(Scheme scheme, int n, std::uint64_t m) {
  if (n < 1 || n > 15) fail(ErrorCode::OutOfRegime, "n must lie in [1, 15]");
  const std::uint64_t d = std::uint64_t{1} << n;
  if (m <= d || m > d * d) {
    fail(ErrorCode::OutOfRegime, "M = " + std::to_string(m) + " is outside (2^n, 4^n] for n = " + std::to_string(n));
  }
  const std::uint64_t mp = num::next_power_of_two(m);
  const auto log_m = static_cast<std::uint64_t>(num::log2_exact(mp));
  const std::uint64_t big = std::uint64_t{1} << (2 * (n + 1));  // 4^(n+1)
  const bool low = mp <= 2 * d;
  ResourceEstimate r{scheme, n, m, 0, 0, 0, 0};
  const int hybrid_levels = low ? 0 : num::log2_exact(mp / (2 * d));
  switch (scheme) {
    case Scheme::Naimark:
      r.cnot_upper_bound = low ? big : mp * mp;
      r.unitary_layers = 1;
      break;
    case Scheme::Binary:
      r.cnot_upper_bound = (low ? static_cast<std::uint64_t>(n + 1) : log_m) * big;
      r.unitary_layers = static_cast<int>(log_m);
      r.mid_circuit_measurements = r.unitary_layers - 1;
      r.feed_forward_cases = mp - 2;
      break;
    case Scheme::Hybrid:
      r.cnot_upper_bound = (low ? 1 : log_m - static_cast<std::uint64_t>(n)) * big;
      r.unitary_layers = hybrid_levels + 1;
      r.mid_circuit_measurements = hybrid_levels;
      r.feed_forward_cases = hybrid_levels == 0 ? 0 : (std::uint64_t{2} << hybrid_levels) - 2;
      break;
  }
  return r;
}

inline nlohmann::json resource_to_json(const ResourceEstimate& r) {
  return {{"scheme", to_string(r.scheme)},
          {"n", r.n},
          {"M", r.m},
          {"cnot_upper_bound", r.cnot_upper_bound},
          {"unitary_layers", r.unitary_layers},
          {"mid_circuit_measurements", r.mid_circuit_measurements},
          {"feed_forward_cases", r.feed_forward_cases}};
}

}  // namespace povmkit

#endif  // POVMKIT_COMPILER_HPP
