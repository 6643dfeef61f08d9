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

#ifndef POVMKIT_IO_HPP
#define POVMKIT_IO_HPP

// File helpers and the state document format:
//   {"ket": [[re, im], ...]}  or  {"rho": <matrix, nested or flat>}

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"

namespace povmkit {

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline nlohmann::json read_json(const std::string& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::ParseError, path + ": " + e.what());
  }
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  f << j.dump(1) << '\n';
}

/// Hermitian, PSD, unit trace within tol.
inline void check_density_matrix(const ComplexMatrix& rho, double tol = 1e-8) {
  if (!num::is_square(rho) || !num::is_power_of_two(static_cast<std::size_t>(rho.rows()))) {
    fail(ErrorCode::InvalidState, "state must be a 2^n x 2^n matrix");
  }
  if (!num::is_hermitian(rho, tol)) fail(ErrorCode::InvalidState, "state is not Hermitian");
  if (std::abs(rho.trace() - Complex(1.0)) > tol) fail(ErrorCode::InvalidState, "state trace is not 1");
  if (num::eigh(rho, 1e-6).eigenvalues.minCoeff() < -tol) fail(ErrorCode::InvalidState, "state is not PSD");
}

inline ComplexMatrix state_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::ParseError, "state document must be an object");
  ComplexMatrix rho;
  if (j.contains("ket")) {
    const auto& k = j["ket"];
    if (!k.is_array() || k.empty()) fail(ErrorCode::ParseError, "state.ket must be a non-empty array");
    ComplexVector v(static_cast<Eigen::Index>(k.size()));
    for (std::size_t i = 0; i < k.size(); ++i) v(static_cast<Eigen::Index>(i)) = complex_from_json(k[i], "state.ket[" + std::to_string(i) + "]");
    if (std::abs(v.norm() - 1.0) > 1e-8) fail(ErrorCode::InvalidState, "state.ket is not normalised");
    rho = v * v.adjoint();
  } else if (j.contains("rho")) {
    const Eigen::Index n = square_side_from_json(j["rho"], "state.rho");
    rho = matrix_from_json(j["rho"], n, n, "state.rho");
  } else {
    fail(ErrorCode::ParseError, "state document needs 'ket' or 'rho'");
  }
  check_density_matrix(rho);
  return rho;
}

/// |b> for a bitstring with qubit 0 rightmost.
inline ComplexMatrix basis_state(const std::string& bits) {
  const std::uint64_t idx = from_bitstring(bits);
  const Eigen::Index d = Eigen::Index{1} << bits.size();
  ComplexMatrix rho = ComplexMatrix::Zero(d, d);
  rho(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)) = 1.0;
  return rho;
}

inline nlohmann::json state_to_json(const ComplexMatrix& rho) { return {{"rho", matrix_to_nested_json(rho)}}; }

}  // namespace povmkit

#endif  // POVMKIT_IO_HPP
