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
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "donorsim/circuit.h"
#include "donorsim/frequency_table.h"
#include "donorsim/noise.h"
#include "donorsim/spin_model.h"
#include "donorsim/state_vector.h"

namespace donorsim {

/// Flip probability of a detuned rectangular drive:
///   P = f_rabi^2 / (f_rabi^2 + df^2) * sin^2(pi t sqrt(f_rabi^2 + df^2)).
double spin_flip_probability(double f_rabi_hz, double delta_f_hz, double t_s);

/// Rabi frequency at which a rotation by `rotation_angle` leaves a line detuned by `delta_f_hz`
/// at the n-th node: delta_f / sqrt((2 pi n / angle)^2 - 1).
double optimal_rabi(int n, double delta_f_hz, double rotation_angle);

enum class DriveMode : uint8_t {
    kIdeal,      // each tone drives only its selected line
    kRealistic,  // each tone drives every line of its channel within the bandwidth
};

struct EngineOptions {
    DriveMode mode = DriveMode::kIdeal;
    double esr_rabi_hz = 430e3;
    /// NMR Rabi frequency as a fraction of the line frequency.
    double nmr_rabi_ratio = 1.46e-4;
    /// Realistic mode: lines within bandwidth_factor * f_rabi of the drive are driven.
    double bandwidth_factor = 50;
    double norm_tolerance = 1e-9;
    size_t threads = 1;

    bool operator==(const EngineOptions &) const = default;
};

struct ShotRecord {
    std::string bits;
    std::vector<std::pair<std::string, int>> tallies;
    bool accepted = true;
    double duration_s = 0;
    /// Probability that the `truth_pattern` holds in the final state (ground truth).
    double truth_probability = 0;

    int tally(const std::string &name) const;
};

class CountsTable {
   public:
    std::map<std::string, uint64_t> counts;
    uint64_t rejected = 0;

    uint64_t total() const;
    double probability(const std::string &bits) const;
    std::map<std::string, double> probabilities() const;
    void add(const std::string &bits, uint64_t n = 1);
    std::string to_csv() const;
    static CountsTable from_csv(const std::string &text);

    bool operator==(const CountsTable &) const = default;
};

struct RunOptions {
    size_t shots = 1;
    uint64_t seed = 0;
    /// Optional ground-truth pattern evaluated on the final state of each shot.
    std::vector<Control> truth_pattern;
    /// Initial full-basis state; nuclear init errors are applied on top.
    uint64_t initial_state = 0;
};

struct CompiledCircuit;

/// Evolves circuits on the spins they touch. The state lives in the interaction picture of
/// the true diagonal Hamiltonian of each shot, so idle evolution is the identity and every
/// drive tone acts only on the pairs of the line(s) it addresses.
class Simulator {
   public:
    Simulator(DeviceModel truth, FrequencyTable table, EngineOptions options = {});
    ~Simulator();
    Simulator(const Simulator &) = delete;
    Simulator &operator=(const Simulator &) = delete;

    const DeviceModel &model() const {
        return truth_;
    }
    const FrequencyTable &table() const {
        return table_;
    }
    const EngineOptions &options() const {
        return options_;
    }

    std::shared_ptr<const CompiledCircuit> compile(const Circuit &circuit) const;

    std::vector<ShotRecord> run_shots(const Circuit &circuit, const NoiseContext &noise,
                                      const RunOptions &run) const;
    std::vector<ShotRecord> run_shots(const CompiledCircuit &compiled, const NoiseContext &noise,
                                      const RunOptions &run) const;
    CountsTable run(const Circuit &circuit, const NoiseContext &noise, size_t shots, uint64_t seed) const;

    /// Outcome distribution without sampling. Tones run deterministically with the context's
    /// offsets (no per-shot dephasing); measurements must be terminal; readout errors from the
    /// context are applied exactly.
    std::map<std::string, double> exact_probabilities(const Circuit &circuit, const NoiseContext &noise) const;

    /// Full-register state after the unitary part of a circuit (ideal, no measurements), in the
    /// logical frame: pending virtual-Z rotations are applied.
    StateVector final_state(const Circuit &circuit, const NoiseContext &noise,
                            const StateVector *initial = nullptr) const;

    /// Simulated duration of one pass of the circuit (sum of tone and idle durations).
    double duration_s(const Circuit &circuit) const;

   private:
    DeviceModel truth_;
    FrequencyTable table_;
    FrequencyTable model_lines_;
    EngineOptions options_;
};

/// Applies a single gate to a full-register state.
StateVector apply_gate(const StateVector &state, const GateOp &op, const DeviceModel &model,
                       const FrequencyTable &table, const NoiseContext *noise = nullptr,
                       const EngineOptions &options = {});

/// Line shift (Hz, per spin) produced by the microwave load of one time slice, relative to a
/// slice carrying only the two filler tones. Uses `op.drives` when present; otherwise the op's
/// own tone. `nmr_f_rabi_hz` overrides the NMR tone's Rabi frequency when positive.
std::vector<double> microwave_slice_shifts(const GateOp &op, const DeviceModel &model, const FrequencyTable &table,
                                           const MicrowaveLoadModel &load, double nmr_rabi_ratio,
                                           double nmr_f_rabi_hz = 0);

/// Independent substream seed for shot `index`.
uint64_t substream_seed(uint64_t master, uint64_t index);

}  // namespace donorsim
