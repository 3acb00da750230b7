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

#include "donorsim/frequency_table.h"

#include "donorsim/errors.h"

namespace donorsim {

double FrequencyTable::esr(size_t register_index, uint32_t pattern, SpinState other_electron) const {
    if (register_index >= registers.size()) {
        throw ShapeError("register index " + std::to_string(register_index) + " out of range");
    }
    const auto &reg = registers[register_index];
    if (pattern >= reg.offsets_hz.size()) {
        throw ShapeError("nuclear pattern out of range for register " + reg.label);
    }
    const double f = reg.reference_hz + reg.offsets_hz[pattern];
    return other_electron == SpinState::kUp ? f + exchange_hz : f;
}

double FrequencyTable::nmr(size_t register_index, size_t nucleus_index, SpinState electron) const {
    if (register_index >= registers.size() || nucleus_index >= registers[register_index].nmr_hz.size()) {
        throw ShapeError("NMR line index out of range");
    }
    return registers[register_index].nmr_hz[nucleus_index][electron == SpinState::kUp ? 1 : 0];
}

size_t FrequencyTable::esr_line_count(bool with_exchange_branches) const {
    size_t n = 0;
    for (const auto &r : registers) {
        n += r.offsets_hz.size();
    }
    return with_exchange_branches ? 2 * n : n;
}

size_t FrequencyTable::nmr_line_count() const {
    size_t n = 0;
    for (const auto &r : registers) {
        n += 2 * r.nmr_hz.size();
    }
    return n;
}

std::vector<EsrLine> FrequencyTable::esr_lines() const {
    std::vector<EsrLine> out;
    for (size_t r = 0; r < registers.size(); ++r) {
        for (SpinState other : {SpinState::kDown, SpinState::kUp}) {
            for (uint32_t p = 0; p < registers[r].offsets_hz.size(); ++p) {
                const double f = esr(r, p, other);
                out.push_back({r, p, other, f, f - registers[r].reference_hz});
            }
        }
    }
    return out;
}

std::vector<NmrLine> FrequencyTable::nmr_lines() const {
    std::vector<NmrLine> out;
    for (size_t r = 0; r < registers.size(); ++r) {
        for (size_t i = 0; i < registers[r].nmr_hz.size(); ++i) {
            for (SpinState e : {SpinState::kDown, SpinState::kUp}) {
                out.push_back({r, i, e, nmr(r, i, e)});
            }
        }
    }
    return out;
}

}  // namespace donorsim
