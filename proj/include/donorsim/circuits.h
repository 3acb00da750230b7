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
#include <string>
#include <vector>

#include "donorsim/circuit.h"
#include "donorsim/clifford.h"
#include "donorsim/spin_model.h"
#include "donorsim/state_vector.h"

namespace donorsim {

enum class BellState : uint8_t { kPhiPlus, kPhiMinus, kPsiPlus, kPsiMinus };

const char *bell_state_name(BellState s);
BellState parse_bell_state(const std::string &name);

/// Target ket of a Bell state on (q1, q2) as amplitudes over the full register.
std::vector<Complex> bell_target(const DeviceModel &model, size_t q1, size_t q2, BellState s);
/// (|down...down> + |up...up>) / sqrt(2) over `qubits`.
std::vector<Complex> ghz_target(const DeviceModel &model, const std::vector<size_t> &qubits);

/// Nuclear rotation, driven on the line with the register electron down.
void append_nuclear_rotation(Circuit &c, const DeviceModel &model, size_t nucleus, double angle, double phase);

/// Geometric CZ between two nuclei. `up_a` and `up_b` list every nucleus correlated with `a` and
/// `b` respectively (they are conditioned up along with them); the other nuclei of the involved
/// registers are conditioned down. Local pairs use one 2X tone; cross-register pairs use
/// X(e_a) 2X(e_b) X(e_a, phase pi).
void append_cz(Circuit &c, const DeviceModel &model, size_t a, size_t b, const std::vector<size_t> &up_a = {},
               const std::vector<size_t> &up_b = {});

/// Bell-state preparation (local when both nuclei share a register).
Circuit bell_circuit(const DeviceModel &model, size_t q1, size_t q2, BellState s);
/// GHZ preparation over `order`; each added qubit costs a -Y/2, CZ, Y/2 block.
Circuit ghz_circuit(const DeviceModel &model, const std::vector<size_t> &order);
/// First `n` nuclei of the default GHZ order n4, n6, n9, n5, n1, n7, n2, n8, n3.
std::vector<size_t> default_ghz_order(const DeviceModel &model, size_t n);

/// Two pi/2 pulses detuned by `detuning_hz`, separated by `tau_s`, then readout.
Circuit ramsey_circuit(const DeviceModel &model, size_t target, double tau_s, double detuning_hz);
/// X/2, tau, X, tau, X/2, then readout. Ideal outcome: down.
Circuit hahn_circuit(const DeviceModel &model, size_t target, double tau_s);

/// Single-nucleus QND readout: `cycles` repetitions of a down-conditioned block and an
/// up-conditioned block (2^{k-1} electron tones each, then a measurement), followed by the
/// nuclear flip channel. Tallies "down" and "up"; every measurement is also an output bit.
Circuit qnd_circuit(const DeviceModel &model, size_t nucleus, size_t cycles, double p_flip_up_to_down,
                    double p_flip_down_to_up, bool outputs = true);
/// Register-pattern QND readout: one tone on the target pattern (tally "target") and one block
/// over all other patterns (tally "other") per cycle.
Circuit qnd_state_circuit(const DeviceModel &model, size_t register_index, uint32_t pattern, size_t cycles,
                          bool outputs = false);

/// Electron state transfer towards `pattern` for every nucleus of a register.
Circuit est_circuit(const DeviceModel &model, size_t register_index, uint32_t pattern, size_t repetitions);

/// X^n tracking of an ESR line: n pi pulses detuned by `detuning_hz`, then readout.
Circuit esr_track_circuit(const DeviceModel &model, size_t register_index, uint32_t pattern, double detuning_hz,
                          size_t rotations, double f_rabi_hz);
/// Exchange-gap tracking on e2: CROT branch (e1 flipped first) or zCROT branch (matching idle).
/// Outputs e2 then e1.
Circuit j_track_circuit(const DeviceModel &model, bool crot_branch, double detuning_hz, size_t rotations,
                        double f_rabi_hz, double control_pi_s);
/// Ramsey probe of the controlled-phase error of the pi gate on `register_index` in branch
/// `branch` (other electron state). The probe runs in the opposite branch.
Circuit phase_cal_circuit(const DeviceModel &model, size_t register_index, SpinState branch, double phase);

/// Random-benchmarking sequence of Clifford indices on `qubits` using a native set.
/// `recovery_up` appends X on every qubit after the recovery element. A depolarizing channel
/// of parameter `depolarizing` follows every random Clifford and one of parameter
/// `interleaved_depolarizing` follows every interleaved element (1 disables either).
Circuit rb_sequence_circuit(const DeviceModel &model, const std::vector<size_t> &qubits,
                            const std::vector<size_t> &cliffords, NativeSet set, bool recovery_up,
                            double depolarizing = 1.0, int interleaved = -1, double interleaved_depolarizing = 1.0);
/// Primitive sequence mapped to circuit ops on `qubits`.
void append_primitives(Circuit &c, const DeviceModel &model, const std::vector<size_t> &qubits,
                       const std::vector<Primitive> &seq);

struct StandardCircuitParams {
    std::vector<std::string> qubits;
    BellState bell = BellState::kPhiPlus;
    size_t n = 0;
    double tau_s = 0;
    double detuning_hz = 0;
    double phase = 0;
    size_t cycles = 1;
    size_t repetitions = 1;
    size_t register_index = 0;
    uint32_t pattern = 0;
    size_t rotations = 9;
    double f_rabi_hz = 0;
    bool crot_branch = true;
    double control_pi_s = 0;
    std::vector<size_t> cliffords;
};

/// Dispatches on kind: bell_local, bell_nonlocal, ghz, ramsey, hahn, rb_sequence, qnd_read,
/// est_init, esr_track, j_track, phase_cal. Throws CircuitError on unknown kinds or invalid
/// qubit selections.
Circuit build_standard_circuit(const std::string &kind, const StandardCircuitParams &params,
                               const DeviceModel &model);

}  // namespace donorsim
