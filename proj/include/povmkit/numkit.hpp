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

#ifndef POVMKIT_NUMKIT_HPP
#define POVMKIT_NUMKIT_HPP

// Dense complex linear algebra shared by the rest of the library. Matrices
// here are small (at most a few hundred rows), so everything is built on
// eigendecompositions and SVDs rather than iterative schemes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "povmkit/error.hpp"

namespace povmkit {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace num {

struct EighResult {
  RealVector eigenvalues;      // ascending
  ComplexMatrix eigenvectors;  // columns orthonormal
};

inline bool is_square(const ComplexMatrix& a) { return a.rows() == a.cols(); }

inline bool all_finite(const ComplexMatrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a.data()[i].real()) || !std::isfinite(a.data()[i].imag())) return false;
  }
  return true;
}

/// Largest |A - A^dagger| entry, scaled by max(1, |A|_max).
inline double hermiticity_residual(const ComplexMatrix& a) {
  if (!is_square(a)) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline bool is_hermitian(const ComplexMatrix& a, double tol = 1e-10) {
  return hermiticity_residual(a) <= tol;
}

inline bool is_unitary(const ComplexMatrix& u, double tol = 1e-9) {
  if (!is_square(u)) return false;
  const auto n = u.rows();
  return (u.adjoint() * u - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff() <= tol;
}

inline EighResult eigh(const ComplexMatrix& a, double tol = 1e-10) {
  if (!is_square(a)) fail(ErrorCode::NotHermitian, "matrix is not square");
  if (!all_finite(a)) fail(ErrorCode::NotHermitian, "matrix has non-finite entries");
  if (hermiticity_residual(a) > tol) fail(ErrorCode::NotHermitian, "matrix is not Hermitian within tolerance");
  const ComplexMatrix sym = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) fail(ErrorCode::NotHermitian, "eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline ComplexMatrix from_eigen(const EighResult& e, const RealVector& values) {
  return e.eigenvectors * values.cast<Complex>().asDiagonal() * e.eigenvectors.adjoint();
}

/// Principal square root of a PSD matrix. Eigenvalues in [-tol, 0) are
/// clamped, and those at roundoff level (below 1e-14 of the largest) are
/// taken as exact zeros so that sqrt does not amplify them.
inline ComplexMatrix hermitian_sqrt(const ComplexMatrix& a, double tol = 1e-10) {
  const EighResult e = eigh(a, tol);
  if (e.eigenvalues.size() == 0) return a;
  if (e.eigenvalues.minCoeff() < -tol) {
    fail(ErrorCode::NotPSD, "negative eigenvalue " + std::to_string(e.eigenvalues.minCoeff()));
  }
  const double floor = 1e-14 * std::max(1.0, e.eigenvalues.cwiseAbs().maxCoeff());
  RealVector s = e.eigenvalues;
  for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > floor ? std::sqrt(s(i)) : 0.0;
  return from_eigen(e, s);
}

/// Moore-Penrose pseudo-inverse; singular values below rel_tol * sigma_max are dropped.
inline ComplexMatrix pinv(const ComplexMatrix& a, double rel_tol = 1e-10) {
  if (rel_tol <= 0.0 || rel_tol >= 1.0) fail(ErrorCode::InvalidArgument, "pinv rel_tol must lie in (0,1)");
  if (a.size() == 0) return ComplexMatrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<ComplexMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (smax == 0.0) return ComplexMatrix::Zero(a.cols(), a.rows());
  RealVector inv = RealVector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.cast<Complex>().asDiagonal() * svd.matrixU().adjoint();
}

inline RealMatrix pinv(const RealMatrix& a, double rel_tol = 1e-10) {
  if (rel_tol <= 0.0 || rel_tol >= 1.0) fail(ErrorCode::InvalidArgument, "pinv rel_tol must lie in (0,1)");
  if (a.size() == 0) return RealMatrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<RealMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  if (smax == 0.0) return RealMatrix::Zero(a.cols(), a.rows());
  RealVector inv = RealVector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > rel_tol * smax) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Extend r orthonormal rows of length M to an MxM unitary. Missing rows come
/// from Gram-Schmidt over the canonical basis e_0, e_1, ... in index order;
/// candidates whose residual norm falls below dependency_tol are skipped.
inline ComplexMatrix complete_to_unitary(const ComplexMatrix& partial, double gram_tol = 1e-9,
                                         double dependency_tol = 1e-8) {
  const auto r = partial.rows();
  const auto m = partial.cols();
  if (r > m) fail(ErrorCode::RowsNotOrthonormal, "more rows than columns");
  const ComplexMatrix gram = partial * partial.adjoint();
  if (r > 0 && (gram - ComplexMatrix::Identity(r, r)).cwiseAbs().maxCoeff() > gram_tol) {
    fail(ErrorCode::RowsNotOrthonormal, "rows are not orthonormal within tolerance");
  }
  ComplexMatrix u(m, m);
  u.topRows(r) = partial;
  // Work with the rows as vectors v_i in C^M under <a,b> = sum conj(a_k) b_k.
  Eigen::Index filled = r;
  for (Eigen::Index k = 0; k < m && filled < m; ++k) {
    ComplexVector cand = ComplexVector::Zero(m);
    cand(k) = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < filled; ++j) {
        const ComplexVector row = u.row(j).transpose();
        cand -= row.dot(cand) * row;  // Eigen's dot conjugates its left operand
      }
    }
    const double norm = cand.norm();
    if (norm < dependency_tol) continue;
    u.row(filled++) = (cand / norm).transpose();
  }
  if (filled != m) fail(ErrorCode::RowsNotOrthonormal, "canonical completion ran out of candidates");
  return u;
}

/// Eigenvalue rescaling onto the PSD cone with the trace preserved: drop the
/// most negative eigenvalues and spread their mass evenly over the rest.
inline RealVector rescale_eigenvalues(const RealVector& values) {
  const auto n = values.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values(a) > values(b); });
  RealVector out = values;
  double acc = 0.0;
  Eigen::Index keep = n;
  while (keep > 0) {
    const double mu = values(order[static_cast<std::size_t>(keep - 1)]);
    if (mu + acc / static_cast<double>(keep) >= 0.0) break;
    acc += mu;
    out(order[static_cast<std::size_t>(keep - 1)]) = 0.0;
    --keep;
  }
  for (Eigen::Index j = 0; j < keep; ++j) {
    out(order[static_cast<std::size_t>(j)]) = values(order[static_cast<std::size_t>(j)]) + acc / static_cast<double>(keep);
  }
  return out;
}

inline ComplexMatrix project_to_psd(const ComplexMatrix& a, double tol = 1e-10) {
  const EighResult e = eigh(a, tol);
  if (e.eigenvalues.size() == 0 || e.eigenvalues.minCoeff() >= 0.0) return a;
  return from_eigen(e, rescale_eigenvalues(e.eigenvalues));
}

/// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2, evaluated as the
/// squared nuclear norm of sqrt(rho) sqrt(sigma). Eigenvalues below
/// rank_floor are treated as exact zeros so that rank-deficient inputs do not
/// pick up sqrt(roundoff) contributions.
inline double state_fidelity(const ComplexMatrix& rho, const ComplexMatrix& sigma, double tol = 1e-8,
                             double rank_floor = 1e-13) {
  if (!is_square(rho) || !is_square(sigma) || rho.rows() != sigma.rows()) {
    fail(ErrorCode::InvalidState, "states must be square matrices of equal dimension");
  }
  auto root = [&](const ComplexMatrix& m) {
    if (!is_hermitian(m, tol)) fail(ErrorCode::InvalidState, "state is not Hermitian");
    if (std::abs(m.trace() - Complex(1.0)) > tol) fail(ErrorCode::InvalidState, "state trace is not 1");
    const EighResult e = eigh(m, tol);
    if (e.eigenvalues.minCoeff() < -tol) fail(ErrorCode::InvalidState, "state is not PSD");
    RealVector s = e.eigenvalues;
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > rank_floor ? std::sqrt(s(i)) : 0.0;
    return from_eigen(e, s);
  };
  const ComplexMatrix prod = root(rho) * root(sigma);
  Eigen::JacobiSVD<ComplexMatrix> svd(prod);
  const double nuclear = svd.singularValues().sum();
  return nuclear * nuclear;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline RealMatrix kron(const RealMatrix& a, const RealMatrix& b) {
  RealMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline ComplexMatrix outer(const ComplexVector& a, const ComplexVector& b) { return a * b.adjoint(); }

inline double frobenius(const ComplexMatrix& a) { return a.norm(); }

inline bool is_power_of_two(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t x) {
  std::size_t p = 1;
  while (p < x) p <<= 1;
  return p;
}

inline int log2_exact(std::size_t x) {
  if (!is_power_of_two(x)) fail(ErrorCode::InvalidArgument, std::to_string(x) + " is not a power of two");
  int k = 0;
  while ((std::size_t{1} << k) < x) ++k;
  return k;
}

/// Keep the listed qubits (little-endian: qubit q is bit q of the basis index)
/// and trace out the rest. The kept qubits keep their relative order.
inline ComplexMatrix partial_trace(const ComplexMatrix& rho, int n_qubits, const std::vector<int>& keep) {
  const auto dim = std::int64_t{1} << n_qubits;
  if (rho.rows() != dim || rho.cols() != dim) fail(ErrorCode::DimensionMismatch, "partial_trace dimension");
  const int nk = static_cast<int>(keep.size());
  std::vector<int> rest;
  for (int q = 0; q < n_qubits; ++q) {
    if (std::find(keep.begin(), keep.end(), q) == keep.end()) rest.push_back(q);
  }
  auto scatter = [](std::int64_t bits, const std::vector<int>& qubits) {
    std::int64_t idx = 0;
    for (std::size_t j = 0; j < qubits.size(); ++j) {
      if ((bits >> j) & 1) idx |= std::int64_t{1} << qubits[j];
    }
    return idx;
  };
  const std::int64_t dk = std::int64_t{1} << nk;
  const std::int64_t dr = std::int64_t{1} << rest.size();
  ComplexMatrix out = ComplexMatrix::Zero(dk, dk);
  for (std::int64_t a = 0; a < dk; ++a) {
    const auto ia = scatter(a, keep);
    for (std::int64_t b = 0; b < dk; ++b) {
      const auto ib = scatter(b, keep);
      Complex s = 0.0;
      for (std::int64_t r = 0; r < dr; ++r) {
        const auto ir = scatter(r, rest);
        s += rho(ia | ir, ib | ir);
      }
      out(a, b) = s;
    }
  }
  return out;
}

// Single-qubit constants.
inline ComplexMatrix pauli(int which) {
  ComplexMatrix p(2, 2);
  switch (which) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, Complex(0, -1), Complex(0, 1), 0; break;
    default: p << 1, 0, 0, -1; break;
  }
  return p;
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the phase fix.
template <class Rng>
ComplexMatrix haar_unitary(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = Complex(normal(rng), normal(rng));
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double ad = std::abs(d);
    if (ad > 0) q.col(j) *= d / ad;
  }
  return q;
}

/// Full-rank random density matrix (Hilbert-Schmidt measure).
template <class Rng>
ComplexMatrix random_density_matrix(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(dim, dim);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = Complex(normal(rng), normal(rng));
  ComplexMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return 0.5 * (rho + rho.adjoint());
}

template <class Rng>
ComplexVector random_state_vector(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexVector v(dim);
  for (Eigen::Index i = 0; i < dim; ++i) v(i) = Complex(normal(rng), normal(rng));
  return v / v.norm();
}

}  // namespace num
}  // namespace povmkit

#endif  // POVMKIT_NUMKIT_HPP
