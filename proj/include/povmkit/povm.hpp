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

#ifndef POVMKIT_POVM_HPP
#define POVMKIT_POVM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "povmkit/numkit.hpp"

namespace povmkit {

/// An ordered list of d x d PSD elements. The optional vectors hold psi_i for
/// rank-one elements F_i = |psi_i><psi_i|. Construction through make_povm or
/// povm_from_vectors validates; the raw constructor does not, so that noisy
/// reconstructions can be represented and reported on.
class Povm {
 public:
  Povm() = default;
  Povm(int dim, std::vector<ComplexMatrix> elements, std::optional<std::vector<ComplexVector>> vectors = std::nullopt)
      : dim_(dim), elements_(std::move(elements)), vectors_(std::move(vectors)) {}

  int dim() const { return dim_; }
  std::size_t size() const { return elements_.size(); }
  const std::vector<ComplexMatrix>& elements() const { return elements_; }
  const ComplexMatrix& operator[](std::size_t i) const { return elements_[i]; }
  bool has_vectors() const { return vectors_.has_value(); }
  const std::vector<ComplexVector>& vectors() const { return *vectors_; }

 private:
  int dim_ = 0;
  std::vector<ComplexMatrix> elements_;
  std::optional<std::vector<ComplexVector>> vectors_;
};

/// Dense outcome distribution indexed by outcome label (element index or
/// classical register value). Holds probabilities, or counts when is_counts.
struct OutcomeDistribution {
  std::vector<double> values;
  bool is_counts = false;
  int n_bits = 0;  // label width for bitstring rendering; 0 means plain indices

  std::size_t size() const { return values.size(); }
  double total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  std::vector<double> probabilities() const {
    std::vector<double> p = values;
    const double t = total();
    if (t > 0.0) {
      for (double& x : p) x /= t;
    }
    return p;
  }
};

/// Bitstring with clbit/qubit 0 as the rightmost character.
inline std::string to_bitstring(std::uint64_t value, int n_bits) {
  std::string s(static_cast<std::size_t>(n_bits), '0');
  for (int b = 0; b < n_bits; ++b) {
    if ((value >> b) & 1) s[static_cast<std::size_t>(n_bits - 1 - b)] = '1';
  }
  return s;
}

inline std::uint64_t from_bitstring(const std::string& s) {
  std::uint64_t v = 0;
  for (char c : s) {
    if (c != '0' && c != '1') fail(ErrorCode::ParseError, "invalid bitstring '" + s + "'");
    v = (v << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return v;
}

struct ValidationReport {
  double completeness_residual = 0.0;  // Frobenius norm of sum F_i - I
  std::vector<double> min_eigenvalues;
  std::vector<int> ranks;
  bool complete = false;
  bool psd = false;
  bool rank_one = false;  // every non-zero element has rank one
  bool linearly_independent = false;
  bool valid() const { return complete && psd; }
};

inline constexpr double kCompletenessTol = 1e-9;
inline constexpr double kPsdTol = 1e-10;

inline int numerical_rank(const RealVector& eigenvalues, double tol = 1e-9) {
  const double scale = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
  int r = 0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) r += eigenvalues(i) > tol * scale;
  return r;
}

inline ValidationReport validate(const Povm& povm) {
  ValidationReport rep;
  const int d = povm.dim();
  ComplexMatrix sum = ComplexMatrix::Zero(d, d);
  rep.psd = true;
  rep.rank_one = true;
  std::vector<Eigen::Index> nonzero;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const ComplexMatrix& f = povm[i];
    if (f.rows() != d || f.cols() != d || !num::is_hermitian(f, kPsdTol)) {
      rep.psd = false;
      rep.min_eigenvalues.push_back(-std::numeric_limits<double>::infinity());
      rep.ranks.push_back(-1);
      rep.rank_one = false;
      continue;
    }
    sum += f;
    const num::EighResult e = num::eigh(f, kPsdTol);
    const double mn = e.eigenvalues.size() ? e.eigenvalues.minCoeff() : 0.0;
    rep.min_eigenvalues.push_back(mn);
    if (mn < -kPsdTol) rep.psd = false;
    const int r = numerical_rank(e.eigenvalues);
    rep.ranks.push_back(r);
    if (r > 1) rep.rank_one = false;
    if (r > 0) nonzero.push_back(static_cast<Eigen::Index>(i));
  }
  rep.completeness_residual = (sum - ComplexMatrix::Identity(d, d)).norm();
  rep.complete = rep.completeness_residual <= kCompletenessTol;
  if (rep.rank_one && !nonzero.empty()) {
    ComplexMatrix stacked(d * d, static_cast<Eigen::Index>(nonzero.size()));
    for (std::size_t j = 0; j < nonzero.size(); ++j) {
      const ComplexMatrix& f = povm[static_cast<std::size_t>(nonzero[j])];
      stacked.col(static_cast<Eigen::Index>(j)) = Eigen::Map<const ComplexVector>(f.data(), d * d);
    }
    Eigen::JacobiSVD<ComplexMatrix> svd(stacked);
    const RealVector s = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-9 * s(0);
    rep.linearly_independent = rank == static_cast<int>(nonzero.size());
  }
  return rep;
}

/// Validated construction; throws IncompletePovm or NotPSD.
inline Povm make_povm(int d, std::vector<ComplexMatrix> elements) {
  Povm p(d, std::move(elements));
  const ValidationReport rep = validate(p);
  if (!rep.psd) fail(ErrorCode::NotPSD, "POVM element is not Hermitian PSD");
  if (!rep.complete) fail(ErrorCode::IncompletePovm, "sum of elements deviates from identity by " +
                                                         std::to_string(rep.completeness_residual));
  return p;
}

inline Povm povm_from_vectors(const std::vector<ComplexVector>& vectors) {
  if (vectors.empty()) fail(ErrorCode::InvalidArgument, "no vectors");
  const int d = static_cast<int>(vectors.front().size());
  std::vector<ComplexMatrix> elements;
  for (const auto& v : vectors) {
    if (v.size() != d) fail(ErrorCode::DimensionMismatch, "vectors of different length");
    elements.push_back(v * v.adjoint());
  }
  Povm checked = make_povm(d, elements);
  return Povm(d, checked.elements(), vectors);
}

/// Rank-one factorisation psi_i with F_i = |psi_i><psi_i|, taken from the
/// stored vectors when present, else from the top eigenpair of each element.
inline std::vector<ComplexVector> rank_one_vectors(const Povm& povm) {
  if (povm.has_vectors()) return povm.vectors();
  std::vector<ComplexVector> out;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    const num::EighResult e = num::eigh(povm[i], kPsdTol);
    const int d = povm.dim();
    if (numerical_rank(e.eigenvalues) > 1) {
      fail(ErrorCode::NotRankOne, "element " + std::to_string(i) + " has rank " +
                                      std::to_string(numerical_rank(e.eigenvalues)));
    }
    const double top = std::max(0.0, e.eigenvalues(d - 1));
    out.push_back(std::sqrt(top) * e.eigenvectors.col(d - 1));
  }
  return out;
}

/// Zero-pad to the next power of two; order is preserved.
inline Povm pad_to_power_of_two(const Povm& povm) {
  const std::size_t target = num::next_power_of_two(povm.size());
  std::vector<ComplexMatrix> elements = povm.elements();
  const int d = povm.dim();
  while (elements.size() < target) elements.push_back(ComplexMatrix::Zero(d, d));
  if (!povm.has_vectors()) return Povm(d, std::move(elements));
  std::vector<ComplexVector> vectors = povm.vectors();
  while (vectors.size() < target) vectors.push_back(ComplexVector::Zero(d));
  return Povm(d, std::move(elements), std::move(vectors));
}

/// The trivial POVM {I/M, ..., I/M}: completely random outcomes.
inline Povm uniform_povm(int d, std::size_t m) {
  return Povm(d, std::vector<ComplexMatrix>(m, ComplexMatrix::Identity(d, d) / static_cast<double>(m)));
}

inline Povm computational_basis_povm(int d) {
  std::vector<ComplexVector> v;
  for (int i = 0; i < d; ++i) v.push_back(ComplexVector::Unit(d, i));
  return povm_from_vectors(v);
}

inline constexpr double kProbabilityDust = 1e-9;

/// P(i) = Tr(F_i rho). Entries within 1e-9 of [0,1] are clipped and the
/// vector renormalised; larger violations raise.
inline OutcomeDistribution outcome_probabilities(const Povm& povm, const ComplexMatrix& rho) {
  if (rho.rows() != povm.dim() || rho.cols() != povm.dim()) {
    fail(ErrorCode::DimensionMismatch, "state dimension does not match POVM");
  }
  OutcomeDistribution out;
  out.values.resize(povm.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < povm.size(); ++i) {
    double p = (povm[i] * rho).trace().real();
    if (p < -kProbabilityDust || p > 1.0 + kProbabilityDust) {
      fail(ErrorCode::InvalidState, "probability " + std::to_string(p) + " outside [0,1]");
    }
    p = std::clamp(p, 0.0, 1.0);
    out.values[i] = p;
    sum += p;
  }
  if (std::abs(sum - 1.0) > kProbabilityDust) {
    fail(ErrorCode::IncompletePovm, "probabilities sum to " + std::to_string(sum));
  }
  for (double& p : out.values) p /= sum;
  return out;
}

struct ChoiMatrix {
  int d = 0;
  int m = 0;
  ComplexMatrix matrix;  // (d*m) x (d*m), index (i, k) -> i*m + k
};

/// Normalised Choi matrix of the measurement channel rho -> sum_k Tr(F_k rho)|k><k|.
inline ChoiMatrix povm_choi(const Povm& povm, bool require_complete = true) {
  const int d = povm.dim();
  const int m = static_cast<int>(povm.size());
  if (require_complete && !validate(povm).complete) fail(ErrorCode::IncompletePovm, "Choi of incomplete POVM");
  ChoiMatrix c{d, m, ComplexMatrix::Zero(d * m, d * m)};
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      for (int k = 0; k < m; ++k) {
        // E(|i><j|) = sum_k <j|F_k|i> |k><k|
        c.matrix(i * m + k, j * m + k) = povm[static_cast<std::size_t>(k)](j, i) / static_cast<double>(d);
      }
    }
  }
  return c;
}

/// The Choi matrix above is block diagonal with blocks F_k^T / d. These are
/// the blocks after the trace-preserving eigenvalue rescaling of the whole
/// spectrum, applied only when some eigenvalue is below -tol.
inline std::vector<ComplexMatrix> projected_choi_blocks(const Povm& povm, double tol = kPsdTol,
                                                        double* negative_mass = nullptr) {
  const int d = povm.dim();
  std::vector<num::EighResult> eig;
  RealVector spectrum(static_cast<Eigen::Index>(povm.size()) * d);
  for (std::size_t k = 0; k < povm.size(); ++k) {
    eig.push_back(num::eigh(ComplexMatrix(povm[k].transpose()) / static_cast<double>(d), 1e-8));
    spectrum.segment(static_cast<Eigen::Index>(k) * d, d) = eig.back().eigenvalues;
  }
  double neg = 0.0;
  for (Eigen::Index i = 0; i < spectrum.size(); ++i) neg += std::min(0.0, spectrum(i));
  if (negative_mass) *negative_mass = -neg;
  std::vector<ComplexMatrix> blocks;
  if (spectrum.size() == 0 || spectrum.minCoeff() >= -tol) {
    for (std::size_t k = 0; k < povm.size(); ++k) blocks.push_back(povm[k].transpose() / static_cast<double>(d));
    return blocks;
  }
  const RealVector fixed = num::rescale_eigenvalues(spectrum);
  for (std::size_t k = 0; k < povm.size(); ++k) {
    blocks.push_back(num::from_eigen(eig[k], fixed.segment(static_cast<Eigen::Index>(k) * d, d)));
  }
  return blocks;
}

/// Undo the Choi block mapping: F_k = d * block_k^T.
inline Povm povm_from_choi_blocks(const std::vector<ComplexMatrix>& blocks) {
  const int d = blocks.empty() ? 0 : static_cast<int>(blocks.front().rows());
  std::vector<ComplexMatrix> elements;
  for (const auto& b : blocks) elements.push_back(static_cast<double>(d) * b.transpose());
  return Povm(d, std::move(elements));
}

/// Detector fidelity: state fidelity between normalised Choi matrices, using
/// the block-diagonal structure so each term is a d x d problem.
inline double povm_fidelity(const Povm& target, const Povm& realized) {
  if (target.dim() != realized.dim() || target.size() != realized.size()) {
    fail(ErrorCode::DimensionMismatch, "POVMs differ in dimension or number of elements");
  }
  const std::vector<ComplexMatrix> a = projected_choi_blocks(target);
  const std::vector<ComplexMatrix> b = projected_choi_blocks(realized);
  auto root = [](const ComplexMatrix& m) {
    const num::EighResult e = num::eigh(m, 1e-8);
    RealVector s = e.eigenvalues;
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > 1e-13 ? std::sqrt(s(i)) : 0.0;
    return num::from_eigen(e, s);
  };
  double tra = 0.0, trb = 0.0, nuclear = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    tra += a[k].trace().real();
    trb += b[k].trace().real();
    Eigen::JacobiSVD<ComplexMatrix> svd(ComplexMatrix(root(a[k]) * root(b[k])));
    nuclear += svd.singularValues().sum();
  }
  if (std::abs(tra - 1.0) > 1e-8 || std::abs(trb - 1.0) > 1e-8) {
    fail(ErrorCode::IncompletePovm, "Choi matrix trace differs from 1");
  }
  return nuclear * nuclear;
}

// ---------------------------------------------------------------------------
// JSON: { "d": int, "elements": [ [ [re,im], ... d*d row-major ], ... ] }

inline nlohmann::json matrix_to_flat_json(const ComplexMatrix& m) {
  nlohmann::json flat = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back({m(i, j).real(), m(i, j).imag()});
  }
  return flat;
}

inline nlohmann::json matrix_to_nested_json(const ComplexMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Complex complex_from_json(const nlohmann::json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    fail(ErrorCode::ParseError, where + ": expected [re, im]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

/// Accepts either a nested row list or a flat row-major list of [re,im] pairs.
inline ComplexMatrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols,
                                      const std::string& where) {
  if (!j.is_array()) fail(ErrorCode::ParseError, where + ": matrix must be an array");
  ComplexMatrix m(rows, cols);
  const bool nested = !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array();
  if (nested) {
    if (static_cast<Eigen::Index>(j.size()) != rows) fail(ErrorCode::ParseError, where + ": wrong row count");
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& row = j[static_cast<std::size_t>(i)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
        fail(ErrorCode::ParseError, where + ": row " + std::to_string(i) + " has wrong length");
      }
      for (Eigen::Index k = 0; k < cols; ++k) {
        m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)], where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
      }
    }
  } else {
    if (static_cast<Eigen::Index>(j.size()) != rows * cols) fail(ErrorCode::ParseError, where + ": wrong entry count");
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index k = 0; k < cols; ++k) {
        m(i, k) = complex_from_json(j[static_cast<std::size_t>(i * cols + k)], where);
      }
    }
  }
  return m;
}

/// Infers the side length of a square matrix stored in either layout.
inline Eigen::Index square_side_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(ErrorCode::ParseError, where + ": empty matrix");
  if (j[0].is_array() && !j[0].empty() && j[0][0].is_array()) return static_cast<Eigen::Index>(j.size());
  const auto n = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(j.size()))));
  if (n * n != static_cast<Eigen::Index>(j.size())) fail(ErrorCode::ParseError, where + ": not a square matrix");
  return n;
}

inline nlohmann::json povm_to_json(const Povm& povm) {
  nlohmann::json j;
  j["d"] = povm.dim();
  j["elements"] = nlohmann::json::array();
  for (const auto& f : povm.elements()) j["elements"].push_back(matrix_to_flat_json(f));
  if (povm.has_vectors()) {
    j["vectors"] = nlohmann::json::array();
    for (const auto& v : povm.vectors()) j["vectors"].push_back(matrix_to_flat_json(v));
  }
  return j;
}

/// Parses and validates (completeness and positivity) a POVM document.
inline Povm povm_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("d") || !j.contains("elements")) {
    fail(ErrorCode::ParseError, "POVM document needs 'd' and 'elements'");
  }
  if (!j["d"].is_number_integer() || j["d"].get<int>() <= 0) fail(ErrorCode::ParseError, "'d' must be a positive integer");
  const int d = j["d"].get<int>();
  if (!j["elements"].is_array() || j["elements"].empty()) fail(ErrorCode::ParseError, "'elements' must be a non-empty array");
  std::vector<ComplexMatrix> elements;
  for (std::size_t i = 0; i < j["elements"].size(); ++i) {
    elements.push_back(matrix_from_json(j["elements"][i], d, d, "elements[" + std::to_string(i) + "]"));
  }
  Povm checked = make_povm(d, std::move(elements));
  if (!j.contains("vectors")) return checked;
  std::vector<ComplexVector> vectors;
  for (std::size_t i = 0; i < j["vectors"].size(); ++i) {
    vectors.push_back(matrix_from_json(j["vectors"][i], d, 1, "vectors[" + std::to_string(i) + "]"));
  }
  if (vectors.size() != checked.size()) fail(ErrorCode::ParseError, "'vectors' length differs from 'elements'");
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if ((vectors[i] * vectors[i].adjoint() - checked[i]).cwiseAbs().maxCoeff() > 1e-10) {
      fail(ErrorCode::ParseError, "vector " + std::to_string(i) + " does not match its element");
    }
  }
  return Povm(d, checked.elements(), std::move(vectors));
}

}  // namespace povmkit

#endif  // POVMKIT_POVM_HPP
