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

// Walks a two-qubit SIC measurement through the library: build the three
// circuits, simulate them, reconstruct one by detector tomography and
// mitigate readout errors on a small dynamic circuit. Writes its inputs and
// outputs to the directory given as the first argument (default "demo_out").

#include <filesystem>
#include <iomanip>
#include <iostream>
#include <random>

#include "povmkit/povmkit.hpp"

using namespace povmkit;

namespace {

std::vector<OutcomeDistribution> detector_counts(const SchemeOutput& so, const std::vector<ComplexMatrix>& preps,
                                                 std::uint64_t shots, std::mt19937_64& rng) {
  std::vector<OutcomeDistribution> counts;
  for (const auto& rho : preps) {
    OutcomeDistribution p = element_distribution(so, run_exact(so.circuit, rho).distribution());
    counts.push_back(sample_counts(p, shots, rng));
  }
  return counts;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path dir = argc > 1 ? argv[1] : "demo_out";
  std::filesystem::create_directories(dir);
  std::cout << std::setprecision(6);
  try {
    const Povm sic1 = sic_povm(1);
    const Povm sic2 = sic_povm(2);
    write_json((dir / "sic1.json").string(), povm_to_json(sic1));
    write_json((dir / "sic2.json").string(), povm_to_json(sic2));

    std::cout << "scheme   unitary boxes          mid  feed-forward  max|P-Tr(F rho)|\n";
    std::mt19937_64 rng(2024);
    const ComplexMatrix rho = num::random_density_matrix(4, rng);
    for (Scheme s : {Scheme::Naimark, Scheme::Binary, Scheme::Hybrid}) {
      const SchemeOutput so = build_scheme(s, sic2);
      const auto counts = static_counts(so.circuit);
      const OutcomeDistribution e = element_distribution(so, run_exact(so.circuit, rho).distribution());
      double err = 0.0;
      for (std::size_t i = 0; i < sic2.size(); ++i) {
        err = std::max(err, std::abs(e.values[i] - (sic2[i] * rho).trace().real()));
      }
      std::cout << std::left << std::setw(9) << to_string(s) << std::setw(23) << counts.unitary_boxes << std::setw(5)
                << counts.mid_measurements << std::setw(14) << counts.feed_forward << err << '\n';
      write_json((dir / (to_string(s) + "_sic2.json")).string(), circuit_to_json(so.circuit));
    }

    // Detector tomography of the one-qubit hybrid circuit from 20000 shots per state.
    const SchemeOutput h1 = build_scheme(Scheme::Hybrid, sic1);
    write_json((dir / "hybrid_sic1.json").string(), circuit_to_json(h1.circuit));
    const auto preps = pauli_preparation_set(1);
    const auto det = detector_counts(h1, preps, 20000, rng);
    write_text((dir / "detector_counts.csv").string(), counts_to_csv(det, 2));
    const DetectorTomography tomo(preps);
    const DetectorResult r = tomo.reconstruct(det);
    const BootstrapResult boot = bootstrap(det, 100, 7, [&](const std::vector<OutcomeDistribution>& c) {
      return povm_fidelity(sic1, tomo.reconstruct(c).estimate);
    });
    std::cout << "\ndetector tomography (1-qubit hybrid, 20000 shots/state): fidelity "
              << povm_fidelity(sic1, r.estimate) << " +- " << boot.std << '\n';

    // State tomography with the same measurement: counts for |0>, |+> and |+i>.
    std::vector<OutcomeDistribution> st;
    for (int k : {0, 2, 4}) st.push_back(det[static_cast<std::size_t>(k)]);
    write_text((dir / "state_counts.csv").string(), counts_to_csv(st, 2));
    const StateTomography stomo(sic1);
    std::cout << "state tomography of |+> from the same counts: fidelity "
              << num::state_fidelity(preps[2], stomo.reconstruct(st[1]).estimate) << '\n';

    // Readout mitigation of the two-qubit feed-forward model circuit.
    const DynamicCircuit model = crem_model_circuit(11);
    const NoiseModel noise = crem_model_noise(0.05, 0.0);
    write_json((dir / "crem_circuit.json").string(), circuit_to_json(model));
    write_json((dir / "calibration.json").string(), calibration_to_json(noise));
    write_json((dir / "state00.json").string(), nlohmann::json{{"ket", {1, 0, 0, 0}}});
    const ComplexMatrix zero = basis_state("00");
    const CremEnsemble ens = build_calibration_ensemble(model);
    std::vector<OutcomeDistribution> p;
    for (const auto& v : ens.variants) p.push_back(run_exact(v, zero, noise).distribution());
    const CremResult m = crem_mitigate(ens, p, confusion_for_circuit(model, noise));
    const OutcomeDistribution ideal = run_exact(model, zero).distribution();
    std::cout << "\nreadout mitigation (eps = 0.05): Hellinger raw " << hellinger(ideal, p[0]) << ", standard "
              << hellinger(ideal, standard_rem(p[0], confusion_for_circuit(model, noise))) << ", conditional "
              << hellinger(ideal, m.q) << '\n';

    std::cout << "\nresource estimate, hybrid n=2 M=16: "
              << resource_estimate(Scheme::Hybrid, 2, 16).cnot_upper_bound << " CNOTs\n";
    std::cout << "files written to " << dir.string() << '\n';
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  return 0;
}
