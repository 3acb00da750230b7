// Copyright 2026 The donorsim Authors
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

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "donorsim/circuit.h"
#include "donorsim/lab.h"
#include "donorsim/pulse_engine.h"

namespace donorsim {

enum class Basis : uint8_t {
    kX,
    kY,
    kZ,
    kEquator,  // cos(phase) X + sin(phase) Y
};

/// One measurement setting: a basis per qubit. Outcome character k belongs to qubit k and
/// '0' is the +1 eigenvalue (down for z).
struct Setting {
    std::vector<Basis> bases;
    double phase = 0;

    /// "xzy" style; equatorial settings read "phi0.785".
    std::string label() const;
    bool operator==(const Setting &) const = default;
};

struct TomographySpec {
    std::vector<size_t> qubits;
    std::vector<Setting> settings;
    size_t shots = 2000;
    /// Prepend a verification readout of every data nucleus and keep only shots that read down.
    bool postselect = true;
    /// Below this acceptance a warning is attached to the data.
    double min_acceptance = 0.5;
    /// Fold projection pulses into a trailing Y/2 of the state circuit.
    bool merge = true;

    /// All 3^N settings.
    static TomographySpec full(std::vector<size_t> qubits);
    /// z on every qubit plus N parity settings at phase k pi / N.
    static TomographySpec reduced_ghz(std::vector<size_t> qubits);
    /// Throws ConfigError.
    void validate() const;
};

/// Projection of one qubit onto a basis appended to a state circuit.
struct ProjectionEdit {
    size_t removed = 0;         // state-circuit rotations dropped by the merge
    size_t added_physical = 0;  // physical rotations appended
};

/// Appends the projection for `basis` on nucleus `qubit`: x -> -Y/2, y -> X/2, z -> none,
/// equator(phi) -> R(pi/2, phi - pi/2). With `merge` and a trailing Y/2 on the qubit (no later
/// op touching it): x removes the Y/2, y replaces Y/2 + X/2 by virtual Z(-pi/2) + Y/2 and z
/// keeps it. Throws CircuitError for electrons.
ProjectionEdit append_projection(Circuit &circuit, const DeviceModel &model, size_t qubit, Basis basis,
                                 double phase = 0, bool merge = true);

/// State circuit plus projections and readout for one setting.
Circuit tomography_circuit(const Circuit &state, const DeviceModel &model, const TomographySpec &spec,
                           const Setting &setting, bool postselect);

struct TomographyData {
    TomographySpec spec;
    /// Per setting outcome probabilities (post-selected).
    std::vector<std::map<std::string, double>> probabilities;
    /// Per setting counts; empty when collected exactly.
    std::vector<CountsTable> counts;
    std::vector<double> acceptance;
    std::vector<std::string> warnings;
    bool exact = false;
};

/// Runs every setting in the lab. `exact` evaluates outcome probabilities without sampling
/// (no post-selection, no clock-consuming shots beyond the equivalent count).
TomographyData collect_tomography(Lab &lab, const Circuit &state, const TomographySpec &spec, bool exact = false);

/// Outcome probabilities of a setting for a density matrix over N qubits.
std::map<std::string, double> setting_probabilities(const Eigen::MatrixXcd &rho, const Setting &setting);
/// Ideal data set for a density matrix (oracle input).
TomographyData synthetic_tomography(const Eigen::MatrixXcd &rho, const TomographySpec &spec);

/// Linear least squares over the Pauli coefficients. With per-setting shot counts the rows
/// carry Gaussian (binomial) weights. A non-physical solution is replaced by the weighted
/// least-squares fit over physical states rho = T T^dag / Tr (up to 4 qubits; beyond that the
/// Frobenius projection). Throws ReconstructionError naming missing settings when the design is
/// rank deficient.
Eigen::MatrixXcd reconstruct_density_matrix(const std::vector<std::map<std::string, double>> &probabilities,
                                            const std::vector<Setting> &settings, size_t num_qubits,
                                            const std::vector<double> &shots = {});
Eigen::MatrixXcd reconstruct_density_matrix(const TomographyData &data);

/// Closest unit-trace positive semidefinite matrix in Frobenius norm (eigenvalue truncation with
/// the clipped weight spread evenly over the kept eigenvalues).
Eigen::MatrixXcd project_physical(const Eigen::MatrixXcd &rho);

/// <psi|rho|psi> for a normalized pure target. Throws ShapeError on dimension mismatch.
double state_fidelity(const Eigen::MatrixXcd &rho, const Eigen::VectorXcd &psi);

/// Reduced density matrix of `qubits` (bit k = qubits[k]) from a full-register state.
Eigen::MatrixXcd reduced_density_matrix(const StateVector &state, const std::vector<size_t> &qubits);
/// Amplitudes restricted to the qubits (other spins must be in a product basis state).
Eigen::VectorXcd restrict_state(const std::vector<Complex> &full, const std::vector<size_t> &qubits);

/// (|0..0> + |1..1>) / sqrt(2) on N qubits.
Eigen::VectorXcd ghz_vector(size_t num_qubits);

struct FidelityEstimate {
    double fidelity = 0;
    double sigma = 0;
    /// Reduced estimator parts: (P_0..0 + P_1..1) / 2 and the parity amplitude C.
    double populations = 0;
    double coherence = 0;
    bool entangled = false;  // fidelity > 0.5
};

/// F = (P_0..0 + P_1..1) / 2 + C / 2 with C = (1/N) sum_k (-1)^k <parity_k>. The settings must
/// be z and the N equatorial settings at k pi / N. Throws ReconstructionError if one is missing.
FidelityEstimate ghz_fidelity_reduced(const std::vector<std::map<std::string, double>> &probabilities,
                                      const std::vector<Setting> &settings, size_t num_qubits);
/// Same with a multinomial bootstrap sigma when counts are present.
FidelityEstimate ghz_fidelity_reduced(const TomographyData &data, size_t resamples = 200, uint64_t seed = 1);

/// Full-tomography fidelity to a pure target with a multinomial bootstrap sigma (counts only).
FidelityEstimate tomography_fidelity(const TomographyData &data, const Eigen::VectorXcd &target,
                                     size_t resamples = 200, uint64_t seed = 1);

}  // namespace donorsim
