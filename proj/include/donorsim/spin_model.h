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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace donorsim {

class FrequencyTable;

enum class SpinState : uint8_t { kDown = 0, kUp = 1 };

inline constexpr double spin_projection(SpinState s) {
    return s == SpinState::kUp ? 0.5 : -0.5;
}
inline constexpr SpinState flipped(SpinState s) {
    return s == SpinState::kUp ? SpinState::kDown : SpinState::kUp;
}

/// One multi-nuclear donor register: a single electron hyperfine-coupled to k nuclei.
struct RegisterModel {
    std::string label;
    std::vector<double> hyperfine_hz;
    std::vector<double> stark_eff_hz_per_v;
    std::vector<std::string> nucleus_labels;

    size_t num_nuclei() const {
        return hyperfine_hz.size();
    }
    bool operator==(const RegisterModel &) const = default;
};

struct ExchangeSample {
    double detuning_v;
    double exchange_hz;

    bool operator==(const ExchangeSample &) const = default;
};

/// Spin state of every electron and nucleus, register by register.
struct SpinConfiguration {
    std::vector<SpinState> electrons;
    std::vector<std::vector<SpinState>> nuclei;
};

enum class SpinKind : uint8_t { kElectron, kNucleus };

struct SpinRef {
    SpinKind kind;
    size_t register_index;
    size_t nucleus_index = 0;
};

/// Static physical description of the device in the secular (diagonal) approximation:
///
///   E = sum_r [ gamma_e B m_e + sum_i ( gamma_n B m_i + A_i m_e m_i ) ] + J m_e1 m_e2
///
/// Spins are ordered register by register, electron first: (e1, n1..n4, e2, n5..n9) for the
/// reference device. Basis index bit `s` holds the state of spin `s` (1 = up).
///
/// Hyperfine values are those at `detuning_v`; `apply_detuning` produces shifted models.
class DeviceModel {
   public:
    double b_field_t = 1.39;
    double gamma_e_hz_per_t = 27.97e9;
    double gamma_n_hz_per_t = 17.235e6;
    std::vector<RegisterModel> registers;
    std::vector<ExchangeSample> exchange_table;
    double detuning_v = 0.0;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    double exchange_hz() const;
    double exchange_at(double detuning_v) const;

    size_t num_registers() const {
        return registers.size();
    }
    size_t num_nuclei(size_t register_index) const;
    size_t num_spins() const;
    size_t electron_spin(size_t register_index) const;
    size_t nucleus_spin(size_t register_index, size_t nucleus_index) const;
    SpinRef spin_ref(size_t spin) const;
    std::string spin_name(size_t spin) const;
    /// Accepts "e1"/"e2" and nucleus labels ("n4"). Throws ShapeError if unknown.
    size_t find_spin(std::string_view name) const;
    bool is_electron(size_t spin) const {
        return spin_ref(spin).kind == SpinKind::kElectron;
    }

    /// Diagonal energy (Hz) of a full computational basis state.
    double energy_hz(uint64_t basis) const;

    bool operator==(const DeviceModel &) const = default;
};

/// ESR line of the register electron for a nuclear pattern (bit i = nucleus i up) with the other
/// electron in `other_electron`.
double esr_frequency(const DeviceModel &model, size_t register_index, uint32_t nuclear_pattern,
                     SpinState other_electron);
double esr_frequency(const DeviceModel &model, size_t register_index, std::span<const SpinState> nuclei,
                     SpinState other_electron);

/// NMR line of one nucleus conditional on its register electron: |gamma_n B + A_i m_e|.
double nmr_frequency(const DeviceModel &model, size_t register_index, size_t nucleus_index,
                     SpinState electron);

/// Every ESR and NMR line of the model with offsets from each register's reference line
/// (all nuclei down, other electron down).
FrequencyTable enumerate_lines(const DeviceModel &model);

/// Moves the model to a new gate detuning: hyperfine couplings shift by their Stark
/// coefficients, J follows the exchange table. Throws RangeError outside the table.
DeviceModel apply_detuning(const DeviceModel &model, double detuning_v);

/// Log-linear interpolation of J over the exchange table. Throws RangeError outside it.
double interpolate_exchange(std::span<const ExchangeSample> table, double detuning_v);

/// Converts an effective Stark coefficient (Hz per volt of detuning) into an electric-field
/// coefficient (Hz per V/m) using the gate separation and lever arm.
double stark_normalize(double eta_eff_hz_per_v, double d_gate_m, double lever_arm);

/// Hyperfine coupling that makes the electron-down NMR line of a nucleus sit at `nmr_down_hz`,
/// taking the branch A/2 > gamma_n B.
double hyperfine_from_nmr_down(double nmr_down_hz, double gamma_n_hz_per_t, double b_field_t);

}  // namespace donorsim
