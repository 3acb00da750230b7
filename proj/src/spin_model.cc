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

#include "donorsim/spin_model.h"

#include <cmath>
#include <set>

#include "donorsim/errors.h"
#include "donorsim/frequency_table.h"

namespace donorsim {

namespace {

std::string reg_field(size_t r, const char *name) {
    return "registers[" + std::to_string(r) + "]." + name;
}

}  // namespace

void DeviceModel::validate() const {
    if (!(b_field_t > 0) || !std::isfinite(b_field_t)) {
        throw ConfigError("b_field_T", "must be positive");
    }
    if (!(gamma_e_hz_per_t > 0)) {
        throw ConfigError("gamma_e_Hz_per_T", "must be positive");
    }
    if (!(gamma_n_hz_per_t > 0)) {
        throw ConfigError("gamma_n_Hz_per_T", "must be positive");
    }
    if (registers.empty() || registers.size() > 2) {
        throw ConfigError("registers", "expected one or two registers");
    }
    std::set<std::string> names{"e1", "e2"};
    for (size_t r = 0; r < registers.size(); ++r) {
        const auto &reg = registers[r];
        const size_t k = reg.hyperfine_hz.size();
        if (k < 1 || k > 8) {
            throw ConfigError(reg_field(r, "hyperfine_Hz"), "nucleus count must be in [1, 8]");
        }
        if (reg.stark_eff_hz_per_v.size() != k) {
            throw ConfigError(reg_field(r, "stark_eff_Hz_per_V"), "length differs from hyperfine_Hz");
        }
        if (reg.nucleus_labels.size() != k) {
            throw ConfigError(reg_field(r, "nucleus_labels"), "length differs from hyperfine_Hz");
        }
        for (size_t i = 0; i < k; ++i) {
            if (!std::isfinite(reg.hyperfine_hz[i]) || !(reg.hyperfine_hz[i] > 0)) {
                throw ConfigError(reg_field(r, "hyperfine_Hz") + "[" + std::to_string(i) + "]",
                                  "must be finite and positive");
            }
            if (!std::isfinite(reg.stark_eff_hz_per_v[i])) {
                throw ConfigError(reg_field(r, "stark_eff_Hz_per_V") + "[" + std::to_string(i) + "]",
                                  "must be finite");
            }
            if (!names.insert(reg.nucleus_labels[i]).second) {
                throw ConfigError(reg_field(r, "nucleus_labels") + "[" + std::to_string(i) + "]",
                                  "duplicate spin label '" + reg.nucleus_labels[i] + "'");
            }
        }
    }
    for (size_t j = 0; j < exchange_table.size(); ++j) {
        const std::string field = "exchange_table[" + std::to_string(j) + "]";
        if (!(exchange_table[j].exchange_hz > 0) || !std::isfinite(exchange_table[j].exchange_hz)) {
            throw ConfigError(field, "J must be positive");
        }
        if (j > 0 && !(exchange_table[j].detuning_v > exchange_table[j - 1].detuning_v)) {
            throw ConfigError(field, "detunings must be strictly increasing");
        }
    }
    if (registers.size() == 2 && exchange_table.empty()) {
        throw ConfigError("exchange_table", "two registers need an exchange table");
    }
    if (!exchange_table.empty() &&
        (detuning_v < exchange_table.front().detuning_v || detuning_v > exchange_table.back().detuning_v)) {
        throw ConfigError("detuning_V", "outside the exchange table range");
    }
}

double interpolate_exchange(std::span<const ExchangeSample> table, double detuning_v) {
    if (table.empty()) {
        return 0.0;
    }
    if (detuning_v < table.front().detuning_v || detuning_v > table.back().detuning_v) {
        throw RangeError("detuning " + std::to_string(detuning_v) + " V outside exchange table [" +
                         std::to_string(table.front().detuning_v) + ", " +
                         std::to_string(table.back().detuning_v) + "] V");
    }
    for (size_t j = 0; j < table.size(); ++j) {
        if (table[j].detuning_v == detuning_v) {
            return table[j].exchange_hz;
        }
    }
    size_t hi = 1;
    while (table[hi].detuning_v < detuning_v) {
        ++hi;
    }
    const auto &a = table[hi - 1];
    const auto &b = table[hi];
    const double w = (detuning_v - a.detuning_v) / (b.detuning_v - a.detuning_v);
    return std::exp((1 - w) * std::log(a.exchange_hz) + w * std::log(b.exchange_hz));
}

double DeviceModel::exchange_at(double eps) const {
    return interpolate_exchange(exchange_table, eps);
}

double DeviceModel::exchange_hz() const {
    return exchange_at(detuning_v);
}

size_t DeviceModel::num_nuclei(size_t register_index) const {
    if (register_index >= registers.size()) {
        throw ShapeError("register index " + std::to_string(register_index) + " out of range");
    }
    return registers[register_index].num_nuclei();
}

size_t DeviceModel::num_spins() const {
    size_t n = 0;
    for (const auto &r : registers) {
        n += 1 + r.num_nuclei();
    }
    return n;
}

size_t DeviceModel::electron_spin(size_t register_index) const {
    if (register_index >= registers.size()) {
        throw ShapeError("register index " + std::to_string(register_index) + " out of range");
    }
    size_t s = 0;
    for (size_t r = 0; r < register_index; ++r) {
        s += 1 + registers[r].num_nuclei();
    }
    return s;
}

size_t DeviceModel::nucleus_spin(size_t register_index, size_t nucleus_index) const {
    if (nucleus_index >= num_nuclei(register_index)) {
        throw ShapeError("nucleus index " + std::to_string(nucleus_index) + " out of range for register " +
                         registers[register_index].label);
    }
    return electron_spin(register_index) + 1 + nucleus_index;
}

SpinRef DeviceModel::spin_ref(size_t spin) const {
    size_t base = 0;
    for (size_t r = 0; r < registers.size(); ++r) {
        const size_t k = registers[r].num_nuclei();
        if (spin == base) {
            return {SpinKind::kElectron, r, 0};
        }
        if (spin <= base + k) {
            return {SpinKind::kNucleus, r, spin - base - 1};
        }
        base += 1 + k;
    }
    throw ShapeError("spin index " + std::to_string(spin) + " out of range");
}

std::string DeviceModel::spin_name(size_t spin) const {
    const SpinRef ref = spin_ref(spin);
    if (ref.kind == SpinKind::kElectron) {
        return "e" + std::to_string(ref.register_index + 1);
    }
    return registers[ref.register_index].nucleus_labels[ref.nucleus_index];
}

size_t DeviceModel::find_spin(std::string_view name) const {
    for (size_t s = 0; s < num_spins(); ++s) {
        if (spin_name(s) == name) {
            return s;
        }
    }
    throw ShapeError("unknown spin '" + std::string(name) + "'");
}

double DeviceModel::energy_hz(uint64_t basis) const {
    const double zeeman_e = gamma_e_hz_per_t * b_field_t;
    const double zeeman_n = gamma_n_hz_per_t * b_field_t;
    double e = 0;
    size_t s = 0;
    std::vector<double> m_electron;
    for (const auto &reg : registers) {
        const double me = (basis >> s) & 1 ? 0.5 : -0.5;
        m_electron.push_back(me);
        e += zeeman_e * me;
        for (size_t i = 0; i < reg.num_nuclei(); ++i) {
            const double mi = (basis >> (s + 1 + i)) & 1 ? 0.5 : -0.5;
            e += zeeman_n * mi + reg.hyperfine_hz[i] * me * mi;
        }
        s += 1 + reg.num_nuclei();
    }
    if (m_electron.size() == 2) {
        e += exchange_hz() * m_electron[0] * m_electron[1];
    }
    return e;
}

double esr_frequency(const DeviceModel &model, size_t register_index, uint32_t nuclear_pattern,
                     SpinState other_electron) {
    const size_t k = model.num_nuclei(register_index);
    if (k < 32 && (nuclear_pattern >> k) != 0) {
        throw ShapeError("nuclear pattern has bits beyond the register's " + std::to_string(k) + " nuclei");
    }
    const auto &reg = model.registers[register_index];
    double f = model.gamma_e_hz_per_t * model.b_field_t;
    for (size_t i = 0; i < k; ++i) {
        f += reg.hyperfine_hz[i] * ((nuclear_pattern >> i) & 1 ? 0.5 : -0.5);
    }
    if (model.num_registers() == 2) {
        f += (other_electron == SpinState::kUp ? 0.5 : -0.5) * model.exchange_hz();
    }
    return f;
}

double esr_frequency(const DeviceModel &model, size_t register_index, std::span<const SpinState> nuclei,
                     SpinState other_electron) {
    if (nuclei.size() != model.num_nuclei(register_index)) {
        throw ShapeError("pattern length " + std::to_string(nuclei.size()) + " does not match register " +
                         model.registers[register_index].label);
    }
    uint32_t pattern = 0;
    for (size_t i = 0; i < nuclei.size(); ++i) {
        if (nuclei[i] == SpinState::kUp) {
            pattern |= 1u << i;
        }
    }
    return esr_frequency(model, register_index, pattern, other_electron);
}

double nmr_frequency(const DeviceModel &model, size_t register_index, size_t nucleus_index, SpinState electron) {
    if (nucleus_index >= model.num_nuclei(register_index)) {
        throw ShapeError("nucleus index " + std::to_string(nucleus_index) + " out of range");
    }
    const double a = model.registers[register_index].hyperfine_hz[nucleus_index];
    return std::abs(model.gamma_n_hz_per_t * model.b_field_t + a * spin_projection(electron));
}

FrequencyTable enumerate_lines(const DeviceModel &model) {
    FrequencyTable table;
    table.exchange_hz = model.num_registers() == 2 ? model.exchange_hz() : 0.0;
    for (size_t r = 0; r < model.num_registers(); ++r) {
        FrequencyTable::Register reg;
        reg.label = model.registers[r].label;
        reg.num_nuclei = model.num_nuclei(r);
        reg.reference_hz = esr_frequency(model, r, 0u, SpinState::kDown);
        const uint32_t n_patterns = 1u << reg.num_nuclei;
        reg.offsets_hz.resize(n_patterns);
        for (uint32_t p = 0; p < n_patterns; ++p) {
            reg.offsets_hz[p] = esr_frequency(model, r, p, SpinState::kDown) - reg.reference_hz;
        }
        for (size_t i = 0; i < reg.num_nuclei; ++i) {
            reg.nmr_hz.push_back({nmr_frequency(model, r, i, SpinState::kDown),
                                  nmr_frequency(model, r, i, SpinState::kUp)});
        }
        table.registers.push_back(std::move(reg));
    }
    return table;
}

DeviceModel apply_detuning(const DeviceModel &model, double detuning_v) {
    if (!model.exchange_table.empty()) {
        (void)interpolate_exchange(model.exchange_table, detuning_v);
    }
    DeviceModel out = model;
    const double shift = detuning_v - model.detuning_v;
    for (auto &reg : out.registers) {
        for (size_t i = 0; i < reg.num_nuclei(); ++i) {
            reg.hyperfine_hz[i] += reg.stark_eff_hz_per_v[i] * shift;
        }
    }
    out.detuning_v = detuning_v;
    return out;
}

double stark_normalize(double eta_eff_hz_per_v, double d_gate_m, double lever_arm) {
    if (!(d_gate_m > 0)) {
        throw DomainError("gate distance must be positive");
    }
    if (!(lever_arm > 0)) {
        throw DomainError("lever arm must be positive");
    }
    return eta_eff_hz_per_v * d_gate_m / lever_arm;
}

double hyperfine_from_nmr_down(double nmr_down_hz, double gamma_n_hz_per_t, double b_field_t) {
    return 2.0 * (nmr_down_hz + gamma_n_hz_per_t * b_field_t);
}

}  // namespace donorsim
