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

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "donorsim/spin_model.h"

namespace donorsim {

struct EsrLine {
    size_t register_index;
    uint32_t pattern;
    SpinState other_electron;
    double frequency_hz;
    double offset_hz;
};

struct NmrLine {
    size_t register_index;
    size_t nucleus_index;
    SpinState electron;
    double frequency_hz;
};

/// Calibration state of the device. ESR lines are stored as one reference frequency per register
/// plus fixed offsets for every nuclear pattern on the zCROT branch; CROT lines are always the
/// zCROT line plus the stored exchange J.
class FrequencyTable {
   public:
    struct Register {
        std::string label;
        size_t num_nuclei = 0;
        double reference_hz = 0;
        std::vector<double> offsets_hz;            // indexed by nuclear pattern, offsets_hz[0] == 0
        std::vector<std::array<double, 2>> nmr_hz;  // [nucleus][electron state]
        double calibrated_at_s = 0;

        bool operator==(const Register &) const = default;
    };

    std::vector<Register> registers;
    double exchange_hz = 0;
    double exchange_calibrated_at_s = 0;

    double esr(size_t register_index, uint32_t pattern, SpinState other_electron) const;
    double nmr(size_t register_index, size_t nucleus_index, SpinState electron) const;

    /// 2^k per register without exchange branches, doubled with them.
    size_t esr_line_count(bool with_exchange_branches) const;
    size_t nmr_line_count() const;
    std::vector<EsrLine> esr_lines() const;
    std::vector<NmrLine> nmr_lines() const;

    bool operator==(const FrequencyTable &) const = default;
};

}  // namespace donorsim
