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

#ifndef POVMKIT_TOMOGRAPHY_HPP
#define POVMKIT_TOMOGRAPHY_HPP

// Linear-inversion detector and state tomography in the Pauli operator basis,
// plus multinomial bootstrap.
//
// Pauli order: sigma_k = P_{c_{n-1}} (x) ... (x) P_{c_0} with k = sum_q c_q 4^q
// and P_0..P_3 = I, X, Y, Z. Preparations: per qubit |0>, |1>, |+>, |->,
// |+i>, |-i>; state index sum_q s_q 6^q.

#include <array>
#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"
#include "povmkit/simulator.hpp"

namespace povmkit {

/// Tensor product over qubits with factors[q] acting on qubit q.
inline ComplexMatrix tensor_qubits(const std::vector<ComplexMatrix>& factors) {
  ComplexMatrix out = factors.back();
  for (std::size_t q = factors.size() - 1; q-- > 0;) out = num::kron(out, factors[q]);
  return out;
}

inline std::vector<ComplexMatrix> pauli_basis(int n) {
  std::vector<ComplexMatrix> out;
  const int count = 1 << (2 * n);
  for (int k = 0; k < count; ++k) {
    std::vector<ComplexMatrix> f;
    for (int q = 0; q < n; ++q) f.push_back(num::pauli((k >> (2 * q)) & 3));
    out.push_back(tensor_qubits(f));
  }
  return out;
}

inline std::vector<ComplexVector> single_qubit_pauli_states() {
  const double s = 1 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  std::vector<ComplexVector> v(6, ComplexVector(2));
  v[0] << 1, 0;
  v[1] << 0, 1;
  v[2] << s, s;
  v[3] << s, -s;
  v[4] << s, s * i;
  v[5] << s, -s * i;
  return v;
}

inline std::vector<ComplexMatrix> pauli_preparation_set(int n) {
  if (n < 1 || n > 4) fail(ErrorCode::InvalidArgument, "preparation sets are provided for 1 to 4 qubits");
  const auto single = single_qubit_pauli_states();
  std::vector<ComplexMatrix> out;
  int total = 1;
  for (int q = 0; q < n; ++q) total *= 6;
  for (int idx = 0; idx < total; ++idx) {
    std::vector<ComplexMatrix> f;
    int r = idx;
    for (int q = 0; q < n; ++q) {
      const auto& v = single[static_cast<std::size_t>(r % 6)];
      f.push_back(v * v.adjoint());
      r /= 6;
    }
    out.push_back(tensor_qubits(f));
  }
  return out;
}

/// S(i, k) = Tr(sigma_k rho_i).
inline RealMatrix design_matrix(const std::vector<ComplexMatrix>& preparations) {
  if (preparations.empty()) fail(ErrorCode::RankDeficientDesign, "no preparations");
  const int d = static_cast<int>(preparations.front().rows());
  const int n = num::log2_exact(static_cast<std::size_t>(d));
  const auto basis = pauli_basis(n);
  RealMatrix s(static_cast<Eigen::Index>(preparations.size()), static_cast<Eigen::Index>(basis.size()));
  for (std::size_t i = 0; i < preparations.size(); ++i) {
    if (preparations[i].rows() != d || preparations[i].cols() != d) fail(ErrorCode::DimensionMismatch, "preparations differ in dimension");
    for (std::size_t k = 0; k < basis.size(); ++k) {
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (basis[k] * preparations[i]).trace().real();
    }
  }
  return s;
}

inline int matrix_rank(const RealMatrix& a, double rel_tol = 1e-10) {
  Eigen::JacobiSVD<RealMatrix> svd(a);
  const RealVector s = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > rel_tol * std::max(1.0, s(0));
  return r;
}

struct DetectorResult {
  Povm raw;        // least-squares estimate
  Povm estimate;   // after the Choi-level PSD rescaling (identical to raw when not needed)
  double residual_norm = 0.0;   // ||S f_m - p_m|| summed in quadrature over outcomes
  double negative_mass = 0.0;   // magnitude of negative Choi spectrum before rescaling
  double completeness_residual = 0.0;  // of the estimate
};

/// Reusable detector-tomography solver: the pseudo-inverse of the design is
/// computed once for a fixed preparation set.
class DetectorTomography {
 public:
  explicit DetectorTomography(std::vector<ComplexMatrix> preparations)
      : preparations_(std::move(preparations)), s_(design_matrix(preparations_)) {
    const int d = static_cast<int>(preparations_.front().rows());
    d_ = d;
    basis_ = pauli_basis(num::log2_exact(static_cast<std::size_t>(d)));
    if (matrix_rank(s_) < d * d) {
      fail(ErrorCode::RankDeficientDesign, "preparation set spans " + std::to_string(matrix_rank(s_)) + " of " +
                                               std::to_string(d * d) + " operator directions");
    }
    s_pinv_ = num::pinv(s_);
  }

  const std::vector<ComplexMatrix>& preparations() const { return preparations_; }
  const RealMatrix& design() const { return s_; }

  /// counts[i] is the outcome distribution (counts or probabilities) for preparation i.
  DetectorResult reconstruct(const std::vector<OutcomeDistribution>& counts) const {
    if (counts.size() != preparations_.size()) {
      fail(ErrorCode::DimensionMismatch, "need one outcome distribution per preparation");
    }
    const std::size_t m = counts.front().size();
    RealMatrix p(static_cast<Eigen::Index>(counts.size()), static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i].size() != m) fail(ErrorCode::DimensionMismatch, "outcome counts differ in length");
      const double total = counts[i].total();
      if (!(total > 0)) fail(ErrorCode::InvalidArgument, "empty outcome distribution for preparation " + std::to_string(i));
      for (std::size_t k = 0; k < m; ++k) p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = counts[i].values[k] / total;
    }
    const RealMatrix f = s_pinv_ * p;  // column k: F_k = sum_j f(j,k) sigma_j
    DetectorResult r;
    r.residual_norm = (s_ * f - p).norm();
    std::vector<ComplexMatrix> elements;
    for (std::size_t k = 0; k < m; ++k) {
      ComplexMatrix e = ComplexMatrix::Zero(d_, d_);
      for (std::size_t j = 0; j < basis_.size(); ++j) e += f(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) * basis_[j];
      elements.push_back(e);
    }
    r.raw = Povm(d_, elements);
    r.estimate = povm_from_choi_blocks(projected_choi_blocks(r.raw, kPsdTol, &r.negative_mass));
    ComplexMatrix sum = ComplexMatrix::Zero(d_, d_);
    for (const auto& e : r.estimate.elements()) sum += e;
    r.completeness_residual = (sum - ComplexMatrix::Identity(d_, d_)).norm();
    return r;
  }

 private:
  std::vector<ComplexMatrix> preparations_;
  RealMatrix s_;
  RealMatrix s_pinv_;
  std::vector<ComplexMatrix> basis_;
  int d_ = 0;
};

inline DetectorResult detector_tomography(const std::vector<OutcomeDistribution>& counts,
                                          const std::vector<ComplexMatrix>& preparations) {
  return DetectorTomography(preparations).reconstruct(counts);
}

struct StateResult {
  ComplexMatrix raw;
  ComplexMatrix estimate;
  double residual_norm = 0.0;
  double negative_mass = 0.0;
};

/// Linear inversion of P(i) = Tr(F_i rho) for a known, informationally
/// complete measurement, followed by unit-trace normalisation and eigenvalue
/// rescaling.
class StateTomography {
 public:
  explicit StateTomography(const Povm& ideal) : d_(ideal.dim()) {
    basis_ = pauli_basis(num::log2_exact(static_cast<std::size_t>(d_)));
    a_.resize(static_cast<Eigen::Index>(ideal.size()), static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t i = 0; i < ideal.size(); ++i) {
      for (std::size_t k = 0; k < basis_.size(); ++k) {
        a_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (ideal[i] * basis_[k]).trace().real() / d_;
      }
    }
    if (matrix_rank(a_) < d_ * d_) {
      fail(ErrorCode::NotInformationallyComplete, "measurement spans " + std::to_string(matrix_rank(a_)) + " of " +
                                                      std::to_string(d_ * d_) + " operator directions");
    }
    a_pinv_ = num::pinv(a_);
  }

  /// Frequencies aligned with the POVM elements (may be a stack of several
  /// settings, each pre-weighted by 1/settings).
  StateResult reconstruct_frequencies(const RealVector& freq) const {
    const RealVector r = a_pinv_ * freq;
    StateResult out;
    out.residual_norm = (a_ * r - freq).norm();
    ComplexMatrix rho = ComplexMatrix::Zero(d_, d_);
    for (std::size_t k = 0; k < basis_.size(); ++k) rho += r(static_cast<Eigen::Index>(k)) * basis_[k];
    rho /= static_cast<double>(d_);
    rho = 0.5 * (rho + rho.adjoint());
    out.raw = rho;
    const double tr = rho.trace().real();
    if (!(std::abs(tr) > 1e-12)) fail(ErrorCode::InvalidState, "reconstructed state has zero trace");
    rho /= tr;
    const num::EighResult e = num::eigh(rho, 1e-8);
    for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) out.negative_mass -= std::min(0.0, e.eigenvalues(i));
    out.estimate = e.eigenvalues.minCoeff() < -kPsdTol ? num::from_eigen(e, num::rescale_eigenvalues(e.eigenvalues)) : rho;
    return out;
  }

  StateResult reconstruct(const OutcomeDistribution& counts) const {
    if (static_cast<Eigen::Index>(counts.size()) != a_.rows()) fail(ErrorCode::DimensionMismatch, "outcome count mismatch");
    const double total = counts.total();
    if (!(total > 0)) fail(ErrorCode::InvalidArgument, "empty outcome distribution");
    RealVector f(a_.rows());
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) = counts.values[static_cast<std::size_t>(i)] / total;
    return reconstruct_frequencies(f);
  }

 private:
  int d_;
  std::vector<ComplexMatrix> basis_;
  RealMatrix a_;
  RealMatrix a_pinv_;
};

inline StateResult state_tomography(const OutcomeDistribution& counts, const Povm& ideal) {
  return StateTomography(ideal).reconstruct(counts);
}

// ---------------------------------------------------------------------------
// Pauli-settings state tomography (3^n product bases), the usual baseline.

/// Setting s: qubit q measured in basis (s / 3^q) % 3 with 0,1,2 = X,Y,Z.
/// Outcome projectors of all settings, stacked (setting-major, then outcome).
inline Povm pauli_settings_projectors(int n) {
  const auto single = single_qubit_pauli_states();
  // eigenbases: X -> (|+>, |->), Y -> (|+i>, |-i>), Z -> (|0>, |1>)
  const std::array<std::array<int, 2>, 3> basis_states = {{{2, 3}, {4, 5}, {0, 1}}};
  int settings = 1;
  for (int q = 0; q < n; ++q) settings *= 3;
  const int d = 1 << n;
  std::vector<ComplexMatrix> elements;
  for (int s = 0; s < settings; ++s) {
    for (int out = 0; out < d; ++out) {
      std::vector<ComplexMatrix> f;
      int r = s;
      for (int q = 0; q < n; ++q) {
        const auto& v = single[static_cast<std::size_t>(basis_states[static_cast<std::size_t>(r % 3)][static_cast<std::size_t>((out >> q) & 1)])];
        f.push_back(v * v.adjoint());
        r /= 3;
      }
      elements.push_back(tensor_qubits(f) / static_cast<double>(settings));
    }
  }
  return Povm(d, elements);
}

/// Draw `shots` measurements split evenly over the 3^n settings and
/// reconstruct by linear inversion on the stacked projectors. shots == 0
/// uses exact probabilities.
template <class Rng>
StateResult pauli_settings_tomography(const ComplexMatrix& rho, std::uint64_t shots, Rng& rng,
                                      const StateTomography& solver, int n) {
  const Povm proj = pauli_settings_projectors(n);
  const std::size_t d = static_cast<std::size_t>(1) << n;
  const std::size_t settings = proj.size() / d;
  RealVector freq(static_cast<Eigen::Index>(proj.size()));
  for (std::size_t s = 0; s < settings; ++s) {
    const std::uint64_t n_s = shots / settings + (s < shots % settings ? 1 : 0);
    OutcomeDistribution p;
    p.values.resize(d);
    for (std::size_t o = 0; o < d; ++o) {
      p.values[o] = std::max(0.0, (proj[s * d + o] * rho).trace().real() * static_cast<double>(settings));
    }
    const OutcomeDistribution c = n_s > 0 ? sample_counts(p, n_s, rng) : p;
    const double tot = n_s > 0 ? static_cast<double>(n_s) : 1.0;
    for (std::size_t o = 0; o < d; ++o) freq(static_cast<Eigen::Index>(s * d + o)) = c.values[o] / tot / static_cast<double>(settings);
  }
  return solver.reconstruct_frequencies(freq);
}

// ---------------------------------------------------------------------------
// Bootstrap

struct BootstrapResult {
  double mean = 0.0;
  double std = 0.0;
  int samples = 0;
};

/// Resample every distribution multinomially (its own total, its own
/// frequencies) B times and summarise metric over the resamples. Exact
/// probabilities (is_counts == false) resample to themselves.
inline BootstrapResult bootstrap(const std::vector<OutcomeDistribution>& counts, int b, std::uint64_t seed,
                                 const std::function<double(const std::vector<OutcomeDistribution>&)>& metric) {
  if (b < 2) fail(ErrorCode::InvalidArgument, "bootstrap needs B >= 2");
  std::mt19937_64 rng(seed);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(b));
  for (int k = 0; k < b; ++k) {
    std::vector<OutcomeDistribution> re;
    re.reserve(counts.size());
    for (const auto& c : counts) {
      if (!c.is_counts) {
        re.push_back(c);
        continue;
      }
      OutcomeDistribution p = c;
      const double total = c.total();
      for (double& v : p.values) v /= total;
      re.push_back(sample_counts(p, static_cast<std::uint64_t>(std::llround(total)), rng));
    }
    values.push_back(metric(re));
  }
  BootstrapResult r;
  r.samples = b;
  for (double v : values) r.mean += v;
  r.mean /= b;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(ss / (b - 1));
  return r;
}

// ---------------------------------------------------------------------------
// I/O

/// CSV rows `state_index,outcome_bitstring,count`; zero counts are omitted.
inline std::string counts_to_csv(const std::vector<OutcomeDistribution>& counts, int n_bits) {
  std::ostringstream os;
  os.precision(17);
  os << "state_index,outcome_bitstring,count\n";
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t k = 0; k < counts[i].size(); ++k) {
      if (counts[i].values[k] != 0.0) os << i << ',' << to_bitstring(k, n_bits) << ',' << counts[i].values[k] << '\n';
    }
  }
  return os.str();
}

/// Parse the CSV above into n_states dense distributions of 2^n_bits entries.
inline std::vector<OutcomeDistribution> counts_from_csv(const std::string& text, std::size_t n_states = 0) {
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  struct Row {
    std::size_t state;
    std::uint64_t outcome;
    double count;
  };
  std::vector<Row> rows;
  int bits = -1;
  std::size_t max_state = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("state_index", 0) == 0)) continue;
    std::istringstream ls(line);
    std::string a, b, c;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',') || !std::getline(ls, c)) {
      fail(ErrorCode::ParseError, "counts CSV line " + std::to_string(line_no) + ": expected 3 fields");
    }
    try {
      std::size_t pos = 0;
      const unsigned long st = std::stoul(a, &pos);
      if (pos != a.size()) throw std::invalid_argument("state");
      const double cnt = std::stod(c, &pos);
      if (pos != c.size() || cnt < 0) throw std::invalid_argument("count");
      if (bits >= 0 && static_cast<int>(b.size()) != bits) throw std::invalid_argument("width");
      bits = static_cast<int>(b.size());
      rows.push_back({st, from_bitstring(b), cnt});
      max_state = std::max<std::size_t>(max_state, st);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseError, "counts CSV line " + std::to_string(line_no) + ": malformed field");
    }
  }
  if (rows.empty()) fail(ErrorCode::ParseError, "counts CSV has no data rows");
  const std::size_t states = std::max(n_states, max_state + 1);
  std::vector<OutcomeDistribution> out(states);
  for (auto& o : out) {
    o.is_counts = true;
    o.n_bits = bits;
    o.values.assign(std::size_t{1} << bits, 0.0);
  }
  for (const auto& r : rows) out[r.state].values[r.outcome] += r.count;
  return out;
}

inline nlohmann::json detector_result_to_json(const DetectorResult& r, double fidelity,
                                              const BootstrapResult* boot = nullptr) {
  nlohmann::json j;
  j["fidelity"] = fidelity;
  j["residual_norm"] = r.residual_norm;
  j["negative_mass"] = r.negative_mass;
  j["completeness_residual"] = r.completeness_residual;
  j["povm"] = povm_to_json(r.estimate);
  if (boot) j["bootstrap"] = {{"mean", boot->mean}, {"std", boot->std}, {"B", boot->samples}};
  return j;
}

}  // namespace povmkit

#endif  // POVMKIT_TOMOGRAPHY_HPP
