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
#include <optional>
#include <string>
#include <vector>

#include "donorsim/spin_model.h"

namespace donorsim {

enum class OpKind : uint8_t {
    kEsr,             // conditional rotation of an electron
    kNmr,             // conditional rotation of a nucleus
    kVirtualZ,        // frame advance on one spin
    kInitElectron,    // measure-and-reset to down
    kMeasureElectron,
    kReadNucleus,     // effective QND readout: projective plus classification error
    kIdle,
    kBarrier,
    kDepolarize,      // with probability 1 - param, a uniformly random Pauli on the targets
    kNuclearFlip,     // flip channel: param = P(up->down), param2 = P(down->up)
};

enum class Channel : uint8_t { kEsr, kNmr };

struct Control {
    size_t spin;
    SpinState state;

    bool operator==(const Control &) const = default;
};

/// Physical description of one drive tone, filled in by schedulers. Bookkeeping only.
struct PulseEvent {
    Channel channel = Channel::kNmr;
    double frequency_hz = 0;
    double f_rabi_hz = 0;
    double phase_rad = 0;
    double duration_s = 0;
    double amplitude_v = 0;
    /// f_rabi / f for NMR tones scheduled at constant absorption; 0 if unknown.
    double absorption_ratio = 0;
    bool filler = false;

    bool operator==(const PulseEvent &) const = default;
};

struct GateOp {
    OpKind kind = OpKind::kBarrier;
    std::vector<size_t> targets;
    double angle = 0;
    double phase = 0;
    std::vector<Control> condition;
    /// Offset of the drive from the calibrated line frequency.
    double detuning_hz = 0;
    /// Rabi frequency override; 0 selects the engine default for the line.
    double f_rabi_hz = 0;
    double duration_s = 0;
    double param = 0;
    double param2 = 0;
    /// Measurements: appended to the output bitstring.
    bool output = false;
    /// Measurements: number of up outcomes is added to this tally.
    std::string tally;
    /// Measurements: -1 none, otherwise the shot is rejected unless the outcome matches.
    int postselect = -1;
    std::vector<PulseEvent> drives;

    size_t target() const;
    bool operator==(const GateOp &) const = default;
};

/// ops[begin, end) executed `count` times.
struct RepeatBlock {
    size_t begin;
    size_t end;
    size_t count;
    std::string label;

    bool operator==(const RepeatBlock &) const = default;
};

class Circuit {
   public:
    std::string label;
    std::vector<GateOp> ops;
    std::vector<RepeatBlock> repeat_blocks;

    Circuit() = default;
    explicit Circuit(std::string label) : label(std::move(label)) {
    }

    Circuit &append(GateOp op);
    Circuit &append(const Circuit &other);

    /// Rotations. `condition` lists required control states.
    Circuit &esr(size_t electron, double angle, double phase, std::vector<Control> condition = {});
    Circuit &nmr(size_t nucleus, double angle, double phase, std::vector<Control> condition = {});
    Circuit &virtual_z(size_t spin, double angle);
    Circuit &init_electron(size_t electron);
    Circuit &measure_electron(size_t electron, bool output = true, std::string tally = {});
    Circuit &read_nucleus(size_t nucleus, bool output = true, int postselect = -1);
    Circuit &idle(double duration_s);
    Circuit &barrier();
    Circuit &depolarize(std::vector<size_t> spins, double p);
    Circuit &nuclear_flip(size_t nucleus, double p_up_to_down, double p_down_to_up);

    /// Wraps ops[begin, end) into a repeat block.
    Circuit &repeat(size_t begin, size_t end, size_t count, std::string label = {});

    /// Ops with repeat blocks expanded.
    std::vector<GateOp> flattened() const;

    /// Checks spin indices, condition coupling rules and block nesting. Throws CircuitError.
    void validate(const DeviceModel &model) const;

    /// Count of physical rotation ops (ESR and NMR), before expansion of repeat blocks.
    size_t physical_op_count() const;

    /// Line-oriented text form; parse_circuit inverts it.
    std::string to_text(const DeviceModel &model) const;

    bool operator==(const Circuit &) const = default;
};

Circuit parse_circuit(const std::string &text, const DeviceModel &model);

const char *op_kind_name(OpKind kind);

}  // namespace donorsim
