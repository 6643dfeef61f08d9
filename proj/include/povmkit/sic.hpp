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

#ifndef POVMKIT_SIC_HPP
#define POVMKIT_SIC_HPP

// SIC-POVMs for one and two qubits. The qubit SIC is the regular
// tetrahedron with phi_0 = |0>. For d = 4 the fiducial is found numerically
// on the Weyl-Heisenberg orbit X^p Z^q |psi>; a previously found fiducial is
// cached below and re-verified on every use.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "povmkit/numkit.hpp"
#include "povmkit/povm.hpp"

namespace povmkit {

/// D_(p,q) = X^p Z^q with Z|k> = w^k |k>, X|k> = |k+1 mod d>.
inline ComplexMatrix weyl_heisenberg(int d, int p, int q) {
  const double tau = 2.0 * std::numbers::pi / d;
  ComplexMatrix z = ComplexMatrix::Zero(d, d), x = ComplexMatrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    z(k, k) = std::polar(1.0, tau * k);
    x((k + 1) % d, k) = 1.0;
  }
  ComplexMatrix out = ComplexMatrix::Identity(d, d);
  for (int i = 0; i < p; ++i) out = x * out;
  ComplexMatrix zq = ComplexMatrix::Identity(d, d);
  for (int i = 0; i < q; ++i) zq = z * zq;
  return out * zq;
}

/// Normalised orbit vectors, index p*d + q.
inline std::vector<ComplexVector> weyl_heisenberg_orbit(const ComplexVector& fiducial) {
  const int d = static_cast<int>(fiducial.size());
  const ComplexVector f = fiducial / fiducial.norm();
  std::vector<ComplexVector> out;
  for (int p = 0; p < d; ++p) {
    for (int q = 0; q < d; ++q) out.push_back(weyl_heisenberg(d, p, q) * f);
  }
  return out;
}

/// Largest | |<phi_i|phi_j>|^2 - 1/(d+1) | over i != j, for normalised phi.
inline double sic_overlap_deviation(const std::vector<ComplexVector>& phis) {
  if (phis.empty()) return 0.0;
  const double target = 1.0 / (static_cast<double>(phis.front().size()) + 1.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    for (std::size_t j = 0; j < phis.size(); ++j) {
      if (i == j) continue;
      const double ov = std::norm(phis[i].dot(phis[j])) / (phis[i].squaredNorm() * phis[j].squaredNorm());
      worst = std::max(worst, std::abs(ov - target));
    }
  }
  return worst;
}

namespace detail {

// Residuals r_p = |<x|D_p|x>|^2 / <x|x>^2 - 1/(d+1) over p != 0 with their
// gradients in the real coordinates (Re x, Im x).
struct SicResiduals {
  explicit SicResiduals(int d) : d(d) {
    for (int p = 0; p < d; ++p) {
      for (int q = 0; q < d; ++q) {
        if (p == 0 && q == 0) continue;
        ops.push_back(weyl_heisenberg(d, p, q));
      }
    }
  }

  void evaluate(const double* params, RealVector& r, RealMatrix* jac) const {
    ComplexVector x(d);
    for (int k = 0; k < d; ++k) x(k) = Complex(params[k], params[d + k]);
    const double s = x.squaredNorm();
    const double target = 1.0 / (d + 1.0);
    r.resize(static_cast<Eigen::Index>(ops.size()));
    if (jac) jac->resize(static_cast<Eigen::Index>(ops.size()), 2 * d);
    for (std::size_t i = 0; i < ops.size(); ++i) {
      const ComplexVector dx = ops[i] * x;
      const Complex u = x.dot(dx);
      const double mag = std::norm(u);
      r(static_cast<Eigen::Index>(i)) = mag / (s * s) - target;
      if (jac) {
        // Wirtinger derivative of |u|^2/s^2 with respect to conj(x).
        const ComplexVector w = (std::conj(u) * dx + u * (ops[i].adjoint() * x)) / (s * s) - (2.0 * mag / (s * s * s)) * x;
        for (int k = 0; k < d; ++k) {
          (*jac)(static_cast<Eigen::Index>(i), k) = 2.0 * w(k).real();
          (*jac)(static_cast<Eigen::Index>(i), d + k) = 2.0 * w(k).imag();
        }
      }
    }
  }

  int d;
  std::vector<ComplexMatrix> ops;
};

class SicObjective final : public ceres::FirstOrderFunction {
 public:
  explicit SicObjective(int d) : res_(d) {}
  bool Evaluate(const double* params, double* cost, double* gradient) const override {
    RealVector r;
    RealMatrix jac;
    res_.evaluate(params, r, gradient ? &jac : nullptr);
    *cost = r.squaredNorm();
    if (gradient) {
      const RealVector g = 2.0 * jac.transpose() * r;
      for (Eigen::Index k = 0; k < g.size(); ++k) gradient[k] = g(k);
    }
    return true;
  }
  int NumParameters() const override { return 2 * res_.d; }

 private:
  SicResiduals res_;
};

}  // namespace detail

struct SicSearchOptions {
  int starts = 64;
  std::uint64_t seed = 20240501;
  double objective_tol = 1e-10;  // on sum_{i != j} (|<phi_i|phi_j>|^2 - 1/(d+1))^2
  int max_iterations = 2000;
};

struct SicSearchResult {
  ComplexVector fiducial;
  double objective = 0.0;
  int start = 0;
};

/// Multi-start search for a Weyl-Heisenberg fiducial: L-BFGS on the squared
/// overlap residuals, then Gauss-Newton polishing to machine precision.
inline SicSearchResult find_sic_fiducial(int d, const SicSearchOptions& opts = {}) {
  detail::SicResiduals res(d);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int start = 0; start < opts.starts; ++start) {
    std::vector<double> x(static_cast<std::size_t>(2 * d));
    for (double& v : x) v = normal(rng);
    ceres::GradientProblem problem(new detail::SicObjective(d));
    ceres::GradientProblemSolver::Options options;
    options.max_num_iterations = opts.max_iterations;
    options.function_tolerance = 1e-16;
    options.gradient_tolerance = 1e-14;
    options.parameter_tolerance = 1e-14;
    options.logging_type = ceres::SILENT;
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);
    RealVector r;
    res.evaluate(x.data(), r, nullptr);
    // Each shift p != 0 appears d^2 times among the ordered pairs.
    if (d * d * r.squaredNorm() > opts.objective_tol) continue;
    for (int it = 0; it < 30; ++it) {
      RealMatrix jac;
      res.evaluate(x.data(), r, &jac);
      if (r.cwiseAbs().maxCoeff() < 1e-15) break;
      const RealVector step = num::pinv(jac, 1e-10) * r;
      for (int k = 0; k < 2 * d; ++k) x[static_cast<std::size_t>(k)] -= step(k);
    }
    res.evaluate(x.data(), r, nullptr);
    ComplexVector f(d);
    for (int k = 0; k < d; ++k) f(k) = Complex(x[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(d + k)]);
    f /= f.norm();
    // Fix the global phase so the first non-negligible component is real positive.
    for (int k = 0; k < d; ++k) {
      if (std::abs(f(k)) > 1e-6) {
        f *= std::conj(f(k)) / std::abs(f(k));
        break;
      }
    }
    return {f, d * d * r.squaredNorm(), start};
  }
  fail(ErrorCode::FiducialSearchFailed, "no start reached the objective tolerance for d=" + std::to_string(d));
}

/// Cached d = 4 fiducial produced by find_sic_fiducial(4) with default options.
inline std::optional<ComplexVector> cached_sic_fiducial(int d) {
  if (d != 4) return std::nullopt;
  static constexpr std::array<std::array<double, 2>, 4> kFiducial4 = {{
      {{0.48571221409126397, 0.0}},
      {{0.74269551036289605, -0.10644596661905316}},
      {{-6.9388939039072284e-18, 0.20118858648686591}},
      {{0.25698329627163191, -0.30763455310591897}},
  }};
  ComplexVector f(4);
  for (int k = 0; k < 4; ++k) f(k) = Complex(kFiducial4[static_cast<std::size_t>(k)][0], kFiducial4[static_cast<std::size_t>(k)][1]);
  return f / f.norm();
}

inline std::vector<ComplexVector> tetrahedron_states() {
  std::vector<ComplexVector> v;
  ComplexVector zero(2);
  zero << 1.0, 0.0;
  v.push_back(zero);
  for (int k = 0; k < 3; ++k) {
    ComplexVector s(2);
    s << 1.0 / std::sqrt(3.0), std::sqrt(2.0 / 3.0) * std::polar(1.0, 2.0 * std::numbers::pi * k / 3.0);
    v.push_back(s);
  }
  return v;
}

/// SIC states phi_i for d = 2^n_qubits (n_qubits in {1,2}).
inline std::vector<ComplexVector> sic_states(int n_qubits) {
  if (n_qubits == 1) return tetrahedron_states();
  if (n_qubits != 2) fail(ErrorCode::InvalidArgument, "sic_povm supports 1 or 2 qubits");
  constexpr int d = 4;
  if (auto cached = cached_sic_fiducial(d)) {
    auto orbit = weyl_heisenberg_orbit(*cached);
    if (sic_overlap_deviation(orbit) < 1e-12) return orbit;
  }
  return weyl_heisenberg_orbit(find_sic_fiducial(d).fiducial);
}

/// F_i = (1/d)|phi_i><phi_i|, stored with vectors psi_i = phi_i / sqrt(d).
inline Povm sic_povm(int n_qubits) {
  const auto phis = sic_states(n_qubits);
  const double d = static_cast<double>(phis.front().size());
  std::vector<ComplexVector> psis;
  for (const auto& phi : phis) psis.push_back(phi / std::sqrt(d));
  return povm_from_vectors(psis);
}

}  // namespace povmkit

#endif  // POVMKIT_SIC_HPP
