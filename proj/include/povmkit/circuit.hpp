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

#ifndef POVMKIT_CIRCUIT_HPP
#define POVMKIT_CIRCUIT_HPP

// Dynamic circuits: unitary boxes, mid-circuit measurement, classically
// conditioned unitaries and active reset over a qubit register and a
// classical register.
//
// Conventions. Qubit q is bit q of a basis-state index (little-endian);
// system qubits come first, auxiliary qubits after them. A payload matrix
// acting on qubits {q_0, ..., q_{k-1}} is indexed by sum_j b_j 2^j where b_j
// is the state of q_j. Compiled gates use the same local indices.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"

namespace povmkit {

/// Classical condition: the op fires when (register & mask) == value.
struct Condition {
  std::uint64_t mask = 0;
  std::uint64_t value = 0;

  bool matches(std::uint64_t reg) const { return (reg & mask) == value; }
  std::vector<int> bits() const {
    std::vector<int> b;
    for (int i = 0; i < 64; ++i) {
      if ((mask >> i) & 1) b.push_back(i);
    }
    return b;
  }
  static Condition on_bits(const std::vector<int>& bits, std::uint64_t packed_value) {
    Condition c;
    for (std::size_t j = 0; j < bits.size(); ++j) {
      c.mask |= std::uint64_t{1} << bits[j];
      if ((packed_value >> j) & 1) c.value |= std::uint64_t{1} << bits[j];
    }
    return c;
  }
  bool operator==(const Condition&) const = default;
};

/// Native gate inside a compiled block: CNOT or a generic single-qubit
/// rotation Rz(a) Ry(b) Rz(c).
struct Gate {
  enum class Kind { CX, Rot };
  Kind kind = Kind::Rot;
  std::array<int, 2> qubits{0, 0};  // (control, target) for CX; qubits[0] for Rot
  std::array<double, 3> params{0.0, 0.0, 0.0};

  static Gate cx(int control, int target) { return {Kind::CX, {control, target}, {}}; }
  static Gate rot(int q, double a, double b, double c) { return {Kind::Rot, {q, q}, {a, b, c}}; }
};

struct UnitaryBox {
  std::vector<int> qubits;
  ComplexMatrix matrix;
};

struct Measure {
  int qubit = 0;
  int clbit = 0;
};

struct ConditionalUnitary {
  std::vector<int> qubits;
  ComplexMatrix matrix;
  Condition cond;
};

/// Return a measured qubit to |0>. The active form applies X when cond holds
/// (cond reads the bit the qubit was just measured into); the passive form is
/// an ideal non-unitary reset.
struct Reset {
  int qubit = 0;
  bool via_conditional_x = true;
  Condition cond;
};

struct CompiledBlock {
  std::vector<int> qubits;
  std::vector<Gate> gates;
  std::optional<Condition> cond;
};

using CircuitOp = std::variant<UnitaryBox, Measure, ConditionalUnitary, Reset, CompiledBlock>;

struct DynamicCircuit {
  int n_system = 0;
  int n_aux = 0;
  int n_clbits = 0;
  std::vector<CircuitOp> ops;
  nlohmann::json metadata = nlohmann::json::object();

  int n_qubits() const { return n_system + n_aux; }
};

// ---------------------------------------------------------------------------
// Gate matrices

inline ComplexMatrix rz(double theta) {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 0) = std::polar(1.0, -theta / 2);
  m(1, 1) = std::polar(1.0, theta / 2);
  return m;
}

inline ComplexMatrix ry(double theta) {
  ComplexMatrix m(2, 2);
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  m << c, -s, s, c;
  return m;
}

inline ComplexMatrix rotation_matrix(double a, double b, double c) { return rz(a) * ry(b) * rz(c); }

inline ComplexMatrix x_gate() { return num::pauli(1); }

/// Dense matrix of a gate list on k local qubits.
inline ComplexMatrix gates_matrix(const std::vector<Gate>& gates, int k) {
  const Eigen::Index dim = Eigen::Index{1} << k;
  ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
  for (const Gate& g : gates) {
    if (g.kind == Gate::Kind::CX) {
      const int c = g.qubits[0], t = g.qubits[1];
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (((i >> c) & 1) && !((i >> t) & 1)) u.row(i).swap(u.row(i | (Eigen::Index{1} << t)));
      }
    } else {
      const ComplexMatrix r = rotation_matrix(g.params[0], g.params[1], g.params[2]);
      const int q = g.qubits[0];
      const Eigen::Index bit = Eigen::Index{1} << q;
      for (Eigen::Index i = 0; i < dim; ++i) {
        if (i & bit) continue;
        for (Eigen::Index col = 0; col < dim; ++col) {
          const Complex a0 = u(i, col), a1 = u(i | bit, col);
          u(i, col) = r(0, 0) * a0 + r(0, 1) * a1;
          u(i | bit, col) = r(1, 0) * a0 + r(1, 1) * a1;
        }
      }
    }
  }
  return u;
}

inline ComplexMatrix block_matrix(const CompiledBlock& b) {
  return gates_matrix(b.gates, static_cast<int>(b.qubits.size()));
}

inline int cnot_count(const std::vector<Gate>& gates) {
  int n = 0;
  for (const auto& g : gates) n += g.kind == Gate::Kind::CX;
  return n;
}

// ---------------------------------------------------------------------------
// Structure queries

inline std::vector<int> op_qubits(const CircuitOp& op) {
  return std::visit(
      [](const auto& o) -> std::vector<int> {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, Measure> || std::is_same_v<T, Reset>) {
          return {o.qubit};
        } else {
          return o.qubits;
        }
      },
      op);
}

inline std::optional<Condition> op_condition(const CircuitOp& op) {
  if (const auto* c = std::get_if<ConditionalUnitary>(&op)) return c->cond;
  if (const auto* r = std::get_if<Reset>(&op)) {
    if (r->via_conditional_x) return r->cond;
    return std::nullopt;
  }
  if (const auto* b = std::get_if<CompiledBlock>(&op)) return b->cond;
  return std::nullopt;
}

/// True for classically conditioned unitaries (not resets): one feed-forward case each.
inline bool is_feed_forward(const CircuitOp& op) {
  if (std::holds_alternative<ConditionalUnitary>(op)) return true;
  if (const auto* b = std::get_if<CompiledBlock>(&op)) return b->cond.has_value();
  return false;
}

/// A measurement is mid-circuit when its qubit is touched again later or its
/// bit feeds a later condition.
inline bool is_mid_circuit_measurement(const DynamicCircuit& c, std::size_t index) {
  const auto* m = std::get_if<Measure>(&c.ops[index]);
  if (!m) return false;
  for (std::size_t k = index + 1; k < c.ops.size(); ++k) {
    const auto qs = op_qubits(c.ops[k]);
    if (std::find(qs.begin(), qs.end(), m->qubit) != qs.end()) return true;
    if (auto cond = op_condition(c.ops[k]); cond && ((cond->mask >> m->clbit) & 1)) return true;
  }
  return false;
}

inline std::vector<std::size_t> mid_circuit_measurements(const DynamicCircuit& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    if (is_mid_circuit_measurement(c, i)) out.push_back(i);
  }
  return out;
}

struct CountsReport {
  int cnots = 0;
  int mid_measurements = 0;
  int end_measurements = 0;
  int feed_forward = 0;
  int resets = 0;
  int unitary_boxes = 0;  // UnitaryBox + ConditionalUnitary + CompiledBlock
  bool operator==(const CountsReport&) const = default;
};

inline CountsReport static_counts(const DynamicCircuit& c) {
  CountsReport r;
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const CircuitOp& op = c.ops[i];
    if (std::holds_alternative<Measure>(op)) {
      (is_mid_circuit_measurement(c, i) ? r.mid_measurements : r.end_measurements)++;
    } else if (std::holds_alternative<Reset>(op)) {
      r.resets++;
    } else {
      r.unitary_boxes++;
      if (const auto* b = std::get_if<CompiledBlock>(&op)) r.cnots += cnot_count(b->gates);
      if (is_feed_forward(op)) r.feed_forward++;
    }
  }
  return r;
}

inline nlohmann::json counts_to_json(const CountsReport& r) {
  return {{"cnots", r.cnots},
          {"mid_circuit_measurements", r.mid_measurements},
          {"end_circuit_measurements", r.end_measurements},
          {"feed_forward_cases", r.feed_forward},
          {"resets", r.resets},
          {"unitary_boxes", r.unitary_boxes}};
}

struct CircuitReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

inline CircuitReport validate_circuit(const DynamicCircuit& c, double unitary_tol = 1e-9) {
  CircuitReport rep;
  auto add = [&](std::size_t i, const std::string& s) { rep.violations.push_back("ops[" + std::to_string(i) + "]: " + s); };
  if (c.n_system < 0 || c.n_aux < 0 || c.n_clbits < 0 || c.n_qubits() > 20 || c.n_clbits > 64) {
    rep.violations.push_back("register sizes out of range");
    return rep;
  }
  std::uint64_t written = 0;
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const CircuitOp& op = c.ops[i];
    const auto qs = op_qubits(op);
    for (std::size_t a = 0; a < qs.size(); ++a) {
      if (qs[a] < 0 || qs[a] >= c.n_qubits()) add(i, "qubit " + std::to_string(qs[a]) + " out of range");
      for (std::size_t b = a + 1; b < qs.size(); ++b) {
        if (qs[a] == qs[b]) add(i, "repeated qubit " + std::to_string(qs[a]));
      }
    }
    if (auto cond = op_condition(op)) {
      if ((cond->value & ~cond->mask) != 0) add(i, "condition value has bits outside its mask");
      if (c.n_clbits < 64 && (cond->mask >> c.n_clbits) != 0) add(i, "condition reads a clbit out of range");
      if ((cond->mask & ~written) != 0) add(i, "condition reads a clbit not written by an earlier measurement");
    }
    auto check_payload = [&](const ComplexMatrix& m) {
      const Eigen::Index dim = Eigen::Index{1} << qs.size();
      if (m.rows() != dim || m.cols() != dim) {
        add(i, "payload is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected " +
                   std::to_string(dim) + "x" + std::to_string(dim));
      } else if (!num::all_finite(m) || !num::is_unitary(m, unitary_tol)) {
        add(i, "payload is not unitary");
      }
    };
    if (const auto* u = std::get_if<UnitaryBox>(&op)) check_payload(u->matrix);
    if (const auto* u = std::get_if<ConditionalUnitary>(&op)) check_payload(u->matrix);
    if (const auto* b = std::get_if<CompiledBlock>(&op)) {
      const int k = static_cast<int>(b->qubits.size());
      for (const Gate& g : b->gates) {
        const bool bad = g.qubits[0] < 0 || g.qubits[0] >= k ||
                         (g.kind == Gate::Kind::CX && (g.qubits[1] < 0 || g.qubits[1] >= k || g.qubits[1] == g.qubits[0]));
        if (bad) add(i, "compiled gate addresses a qubit outside its block");
        for (double p : g.params) {
          if (!std::isfinite(p)) add(i, "compiled gate has a non-finite angle");
        }
      }
    }
    if (const auto* m = std::get_if<Measure>(&op)) {
      if (m->clbit < 0 || m->clbit >= c.n_clbits) {
        add(i, "clbit " + std::to_string(m->clbit) + " out of range");
      } else {
        written |= std::uint64_t{1} << m->clbit;
      }
    }
  }
  return rep;
}

inline bool structurally_equal(const DynamicCircuit& a, const DynamicCircuit& b, double tol = 1e-15) {
  if (a.n_system != b.n_system || a.n_aux != b.n_aux || a.n_clbits != b.n_clbits || a.ops.size() != b.ops.size()) return false;
  auto close = [&](const ComplexMatrix& x, const ComplexMatrix& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && (x.size() == 0 || (x - y).cwiseAbs().maxCoeff() <= tol);
  };
  for (std::size_t i = 0; i < a.ops.size(); ++i) {
    if (a.ops[i].index() != b.ops[i].index()) return false;
    const bool same = std::visit(
        [&](const auto& x) -> bool {
          using T = std::decay_t<decltype(x)>;
          const auto& y = std::get<T>(b.ops[i]);
          if constexpr (std::is_same_v<T, UnitaryBox>) {
            return x.qubits == y.qubits && close(x.matrix, y.matrix);
          } else if constexpr (std::is_same_v<T, Measure>) {
            return x.qubit == y.qubit && x.clbit == y.clbit;
          } else if constexpr (std::is_same_v<T, ConditionalUnitary>) {
            return x.qubits == y.qubits && x.cond == y.cond && close(x.matrix, y.matrix);
          } else if constexpr (std::is_same_v<T, Reset>) {
            return x.qubit == y.qubit && x.via_conditional_x == y.via_conditional_x && x.cond == y.cond;
          } else {
            if (x.qubits != y.qubits || x.cond != y.cond || x.gates.size() != y.gates.size()) return false;
            for (std::size_t g = 0; g < x.gates.size(); ++g) {
              const Gate &p = x.gates[g], &q = y.gates[g];
              if (p.kind != q.kind || p.qubits != q.qubits) return false;
              for (int k = 0; k < 3; ++k) {
                if (std::abs(p.params[static_cast<std::size_t>(k)] - q.params[static_cast<std::size_t>(k)]) > tol) return false;
              }
            }
            return true;
          }
        },
        a.ops[i]);
    if (!same) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// JSON serialisation

inline nlohmann::json condition_to_json(const Condition& c) {
  const auto bits = c.bits();
  std::uint64_t packed = 0;
  for (std::size_t j = 0; j < bits.size(); ++j) {
    if ((c.value >> bits[j]) & 1) packed |= std::uint64_t{1} << j;
  }
  return {{"bits", bits}, {"value", packed}};
}

inline nlohmann::json op_to_json(const CircuitOp& op) {
  nlohmann::json j;
  std::visit(
      [&](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, UnitaryBox>) {
          j = {{"type", "unitary"}, {"qubits", o.qubits}, {"matrix", matrix_to_nested_json(o.matrix)}};
        } else if constexpr (std::is_same_v<T, Measure>) {
          j = {{"type", "measure"}, {"qubits", {o.qubit}}, {"clbits", {o.clbit}}};
        } else if constexpr (std::is_same_v<T, ConditionalUnitary>) {
          j = {{"type", "cond_unitary"},
               {"qubits", o.qubits},
               {"matrix", matrix_to_nested_json(o.matrix)},
               {"cond", condition_to_json(o.cond)}};
        } else if constexpr (std::is_same_v<T, Reset>) {
          j = {{"type", "reset"}, {"qubits", {o.qubit}}, {"active", o.via_conditional_x}};
          if (o.via_conditional_x) j["cond"] = condition_to_json(o.cond);
        } else {
          nlohmann::json gates = nlohmann::json::array();
          for (const Gate& g : o.gates) {
            if (g.kind == Gate::Kind::CX) {
              gates.push_back({{"name", "cx"}, {"qubits", {g.qubits[0], g.qubits[1]}}});
            } else {
              gates.push_back({{"name", "rot"}, {"qubits", {g.qubits[0]}}, {"params", g.params}});
            }
          }
          j = {{"type", "compiled"}, {"qubits", o.qubits}, {"gates", gates}};
          if (o.cond) j["cond"] = condition_to_json(*o.cond);
        }
      },
      op);
  return j;
}

inline nlohmann::json circuit_to_json(const DynamicCircuit& c) {
  nlohmann::json j;
  j["n_system"] = c.n_system;
  j["n_aux"] = c.n_aux;
  j["n_clbits"] = c.n_clbits;
  j["ops"] = nlohmann::json::array();
  for (const auto& op : c.ops) j["ops"].push_back(op_to_json(op));
  if (!c.metadata.empty()) j["metadata"] = c.metadata;
  return j;
}

inline std::string serialize(const DynamicCircuit& c) { return circuit_to_json(c).dump(1); }

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name)) fail(ErrorCode::ParseError, where + ": missing field '" + name + "'");
  return j.at(name);
}

inline int int_field(const nlohmann::json& j, const char* name, const std::string& where) {
  const auto& v = field(j, name, where);
  if (!v.is_number_integer()) fail(ErrorCode::ParseError, where + "." + name + ": expected integer");
  return v.get<int>();
}

inline std::vector<int> int_list(const nlohmann::json& j, const char* name, const std::string& where) {
  const auto& v = field(j, name, where);
  if (!v.is_array()) fail(ErrorCode::ParseError, where + "." + name + ": expected array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer()) fail(ErrorCode::ParseError, where + "." + name + ": expected integers");
    out.push_back(e.get<int>());
  }
  return out;
}

inline Condition condition_from_json(const nlohmann::json& j, const std::string& where) {
  const auto bits = int_list(j, "bits", where);
  const auto& v = field(j, "value", where);
  if (!v.is_number_unsigned() && !v.is_number_integer()) fail(ErrorCode::ParseError, where + ".value: expected integer");
  for (int b : bits) {
    if (b < 0 || b >= 64) fail(ErrorCode::ParseError, where + ".bits: bit index out of range");
  }
  return Condition::on_bits(bits, v.get<std::uint64_t>());
}

inline CircuitOp op_from_json(const nlohmann::json& j, const std::string& where) {
  const auto& type_field = field(j, "type", where);
  if (!type_field.is_string()) fail(ErrorCode::ParseError, where + ".type: expected string");
  const std::string type = type_field.get<std::string>();
  const auto qubits = int_list(j, "qubits", where);
  auto payload = [&]() {
    const Eigen::Index dim = Eigen::Index{1} << qubits.size();
    return matrix_from_json(field(j, "matrix", where), dim, dim, where + ".matrix");
  };
  auto single = [&]() {
    if (qubits.size() != 1) fail(ErrorCode::ParseError, where + ".qubits: expected exactly one qubit");
    return qubits[0];
  };
  if (type == "unitary") return UnitaryBox{qubits, payload()};
  if (type == "measure") {
    const auto clbits = int_list(j, "clbits", where);
    if (clbits.size() != 1) fail(ErrorCode::ParseError, where + ".clbits: expected exactly one clbit");
    return Measure{single(), clbits[0]};
  }
  if (type == "cond_unitary") {
    return ConditionalUnitary{qubits, payload(), condition_from_json(field(j, "cond", where), where + ".cond")};
  }
  if (type == "reset") {
    Reset r{single(), true, {}};
    if (j.contains("active")) {
      if (!j["active"].is_boolean()) fail(ErrorCode::ParseError, where + ".active: expected boolean");
      r.via_conditional_x = j["active"].get<bool>();
    }
    if (r.via_conditional_x) r.cond = condition_from_json(field(j, "cond", where), where + ".cond");
    return r;
  }
  if (type == "compiled") {
    CompiledBlock b{qubits, {}, std::nullopt};
    const auto& gates = field(j, "gates", where);
    if (!gates.is_array()) fail(ErrorCode::ParseError, where + ".gates: expected array");
    for (std::size_t g = 0; g < gates.size(); ++g) {
      const std::string gw = where + ".gates[" + std::to_string(g) + "]";
      const auto& name_field = field(gates[g], "name", gw);
      if (!name_field.is_string()) fail(ErrorCode::ParseError, gw + ".name: expected string");
      const std::string name = name_field.get<std::string>();
      const auto gq = int_list(gates[g], "qubits", gw);
      if (name == "cx") {
        if (gq.size() != 2) fail(ErrorCode::ParseError, gw + ".qubits: cx needs two qubits");
        b.gates.push_back(Gate::cx(gq[0], gq[1]));
      } else if (name == "rot") {
        const auto& params = field(gates[g], "params", gw);
        if (gq.size() != 1 || !params.is_array() || params.size() != 3) {
          fail(ErrorCode::ParseError, gw + ": rot needs one qubit and three params");
        }
        for (const auto& p : params) {
          if (!p.is_number()) fail(ErrorCode::ParseError, gw + ".params: expected numbers");
        }
        b.gates.push_back(Gate::rot(gq[0], params[0].get<double>(), params[1].get<double>(), params[2].get<double>()));
      } else {
        fail(ErrorCode::ParseError, gw + ".name: unknown gate '" + name + "'");
      }
    }
    if (j.contains("cond")) b.cond = condition_from_json(j["cond"], where + ".cond");
    return b;
  }
  fail(ErrorCode::ParseError, where + ".type: unknown op type '" + type + "'");
}

}  // namespace detail

inline DynamicCircuit circuit_from_json(const nlohmann::json& j) {
  DynamicCircuit c;
  c.n_system = detail::int_field(j, "n_system", "circuit");
  c.n_aux = detail::int_field(j, "n_aux", "circuit");
  c.n_clbits = detail::int_field(j, "n_clbits", "circuit");
  const auto& ops = detail::field(j, "ops", "circuit");
  if (!ops.is_array()) fail(ErrorCode::ParseError, "circuit.ops: expected array");
  for (std::size_t i = 0; i < ops.size(); ++i) {
    c.ops.push_back(detail::op_from_json(ops[i], "ops[" + std::to_string(i) + "]"));
  }
  if (j.contains("metadata")) c.metadata = j["metadata"];
  return c;
}

inline DynamicCircuit deserialize(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, std::string("malformed circuit document at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  return circuit_from_json(j);
}

}  // namespace povmkit

#endif  // POVMKIT_CIRCUIT_HPP
