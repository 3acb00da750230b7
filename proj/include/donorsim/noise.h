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

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "donorsim/circuit.h"
#include "donorsim/spin_model.h"

namespace donorsim {

/// Bistable defect shifting every ESR line of one register by `amplitude_hz` while up.
struct TlsDefect {
    size_t register_index = 0;
    double amplitude_hz = 0;
    double rate_up_per_s = 0;
    double rate_down_per_s = 0;
    bool state = false;

    bool operator==(const TlsDefect &) const = default;
};

/// Nuclei whose NMR lines jump together (hyperfine jump of `magnitude_hz` on each member).
struct CorrelatedJumpGroup {
    std::vector<size_t> members;
    double magnitude_hz = 0;
    double rate_per_s = 0;

    bool operator==(const CorrelatedJumpGroup &) const = default;
};

struct DriftModel {
    /// Per register, white (point-to-point) collective ESR offset.
    std::vector<double> collective_sigma_hz;
    /// Per spin, linear hyperfine drift; entries for electrons are ignored.
    std::vector<double> nmr_drift_hz_per_hour;
    std::vector<CorrelatedJumpGroup> groups;
    double exchange_sigma_hz = 0;

    bool operator==(const DriftModel &) const = default;
};

/// Piecewise-linear shift curve through (0, 0) and the configured samples.
struct ShiftCurve {
    std::vector<double> amplitude_v;
    std::vector<double> shift_hz;

    /// Throws RangeError beyond the last sample, DomainError for negative amplitude.
    double eval(double amplitude_v) const;
    bool operator==(const ShiftCurve &) const = default;
};

struct MicrowaveLoadModel {
    /// Per spin quadratic NMR-on-NMR coefficient; entries for electrons are ignored.
    std::vector<double> nmr_on_nmr_hz_per_v2;
    ShiftCurve esr_on_nmr;
    ShiftCurve nmr_on_esr;
    ShiftCurve esr_on_esr;
    double nmr_filler_hz = 50e6;
    double esr_filler_hz = 38.86e9;
    double nmr_filler_amplitude_v = 5.421e-3;
    double esr_filler_amplitude_v = 4e-3;
    /// Amplitude used for real ESR tones (amplitude-matched to the filler).
    double esr_drive_amplitude_v = 4e-3;
    /// Apply slice-dependent shifts inside the engine.
    bool enabled = false;

    bool operator==(const MicrowaveLoadModel &) const = default;
};

struct ReadoutErrorModel {
    double electron_read_up = 0.7;    // P(read up | up)
    double electron_read_down = 0.8;  // P(read down | down)
    double nuclear_flip_up_to_down = 5e-4;
    double nuclear_flip_down_to_up = 5e-4;
    double electron_init_error = 0.0;
    double nuclear_init_error = 1e-3;
    size_t qnd_shot_cap = 300;

    bool operator==(const ReadoutErrorModel &) const = default;
};

struct CoherenceModel {
    /// Per spin; 0 disables the channel.
    std::vector<double> t2_star_s;
    std::vector<double> t2_hahn_s;

    bool operator==(const CoherenceModel &) const = default;
};

struct NoiseModel {
    DriftModel drift;
    std::vector<TlsDefect> tls;
    MicrowaveLoadModel load;
    ReadoutErrorModel readout;
    CoherenceModel coherence;
    /// Phase picked up by the non-driven exchange branch of ESR tones that address one branch.
    double crot_phase_error_rad = 0;
    /// Dead time per shot (init and readout) used to advance the simulated clock.
    double shot_overhead_s = 2e-3;

    /// All-zero model of matching shape with perfect readout.
    static NoiseModel ideal(const DeviceModel &model);
    void validate(const DeviceModel &model) const;
    bool operator==(const NoiseModel &) const = default;
};

/// Quasi-static frequency offsets valid for one run.
struct LineOffsets {
    std::vector<double> collective_esr_hz;   // per register
    std::vector<double> hyperfine_drift_hz;  // per spin
    double exchange_hz = 0;

    static LineOffsets zero(const DeviceModel &model);
    bool operator==(const LineOffsets &) const = default;
};

/// Everything the engine needs to simulate one run under noise.
struct NoiseContext {
    LineOffsets offsets;
    std::vector<double> t2_star_s;
    std::vector<double> t2_hahn_s;
    double electron_read_up = 1;
    double electron_read_down = 1;
    double electron_init_error = 0;
    double nuclear_read_error = 0;
    double nuclear_init_error = 0;
    double crot_phase_error_rad = 0;
    MicrowaveLoadModel load;

    static NoiseContext ideal(const DeviceModel &model);
};

/// Per-run offsets from the drift model and TLS states at time `t_s`.
LineOffsets sample_offsets(const DeviceModel &model, const DriftModel &drift, const std::vector<TlsDefect> &tls,
                           double t_s, std::mt19937_64 &rng);

/// Shift of a victim line (channel `victim`, spin `victim_spin`) under a drive on `driven`.
double microwave_shift(const MicrowaveLoadModel &load, Channel driven, Channel victim, size_t victim_spin,
                       double amplitude_v);

/// Gaussian quasi-static detuning with sigma = 1 / (sqrt(2) pi T2*).
double dephasing_sigma_hz(double t2_star_s);
double dephasing_offset(double t2_star_s, std::mt19937_64 &rng);

/// Telegraph TLS states, accumulated correlated jumps and the simulated clock.
class DriftProcess {
   public:
    DriftProcess() = default;
    DriftProcess(const DeviceModel &model, const NoiseModel &noise);

    double time_s() const {
        return time_s_;
    }
    const std::vector<TlsDefect> &tls() const {
        return tls_;
    }
    const std::vector<double> &jump_offsets_hz() const {
        return jump_offsets_hz_;
    }

    /// Forces a defect into a state (scenario setup).
    void set_tls_state(size_t index, bool up);

    /// Evolves TLS states and jump groups exactly over the interval.
    void advance(double dt_s, std::mt19937_64 &rng);
    LineOffsets sample(std::mt19937_64 &rng) const;

   private:
    const DeviceModel *model_ = nullptr;
    DriftModel drift_;
    std::vector<TlsDefect> tls_;
    std::vector<double> jump_offsets_hz_;
    double time_s_ = 0;
};

/// Builds a run context from a noise model, the run's offsets and the effective nuclear
/// classification error.
NoiseContext make_noise_context(const DeviceModel &model, const NoiseModel &noise, LineOffsets offsets,
                                double nuclear_read_error);

struct QndMarkovParams {
    double p_flip_up_to_down = 0;
    double p_flip_down_to_up = 0;
    double p_read_up = 1;    // P(read up | electron up)
    double p_read_down = 1;  // P(read down | electron down)
};

struct QndMarkovResult {
    size_t shots = 0;
    /// Support -N..N of the up-count difference; index d + N.
    std::vector<double> diff_given_up;
    std::vector<double> diff_given_down;
    double error = 0;
    double error_postselected = 0;
    double acceptance = 1;
};

/// Exact forward propagation of the nuclear two-state chain with binomial electron readout.
/// Classifies up when the up-count difference is >= 0; `reject_band` applies to |dP|.
QndMarkovResult qnd_markov_exact(const QndMarkovParams &params, size_t shots, double reject_band = 0);

/// Unconditioned misclassification for every N in [1, n_max] from one propagation.
std::vector<double> qnd_error_curve(const QndMarkovParams &params, size_t n_max);

/// Folds an electron init error into effective readout probabilities.
QndMarkovParams fold_init_error(QndMarkovParams params, double init_error);

struct QndOperatingPoint {
    size_t shots = 1;
    double error = 0;
};

/// Shot count minimizing the misclassification over [1, cap], ties to the smaller count. With
/// both flip probabilities zero the error never grows with N and the cap is returned.
QndOperatingPoint qnd_operating_point(const QndMarkovParams &params, size_t cap);
/// Same, from a readout model with its electron init error folded in.
QndOperatingPoint qnd_operating_point(const ReadoutErrorModel &readout);

}  // namespace donorsim
