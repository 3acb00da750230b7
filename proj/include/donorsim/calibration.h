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
#include <functional>
#include <memory>
#include <vector>

#include "donorsim/circuit.h"
#include "donorsim/fitting.h"
#include "donorsim/frequency_table.h"
#include "donorsim/lab.h"
#include "donorsim/noise.h"
#include "donorsim/spin_model.h"

namespace donorsim {

struct TrackResult {
    /// Fitted line frequency (table value plus fitted detuning).
    double frequency_hz = 0;
    /// Fitted detuning from the table value.
    double offset_hz = 0;
    GaussianFit fit;
    size_t widenings = 0;
    std::vector<double> detunings_hz;
    std::vector<double> signal;
};

/// Sweeps a tracking circuit over detuning and fits the peak of P(first output bit = 1): a coarse
/// sweep over widen_factor times the span locates the envelope (widening up to
/// `policy.max_widenings` more times), then a base-span sweep around it gives the estimate.
/// Throws CalibrationLost if no peak is found. Uses one context for the
/// whole sweep (`ctx` or a fresh sample). `contrast` is the readout contrast of the signal
/// (0 selects the electron readout contrast of the context).
TrackResult track_line(Lab &lab, double table_frequency_hz, const std::function<Circuit(double)> &circuit_at,
                       const NoiseContext *ctx = nullptr, double contrast = 0);

/// X^n sweep of a register's reference line (all nuclei down, other electron down).
TrackResult track_reference(Lab &lab, size_t register_index, const NoiseContext *ctx = nullptr);

/// Moves every ESR line of every register rigidly with its measured reference. Offsets are not
/// touched. Throws DomainError unless exactly one measurement per register is supplied.
FrequencyTable collective_recalibrate(const FrequencyTable &table, const std::vector<double> &measured_refs_hz,
                                      double time_s = 0);

struct ExchangeResult {
    double exchange_hz = 0;
    TrackResult zcrot;
    TrackResult crot;
};

/// Tracks the zCROT and CROT branches of e2 (nuclei down) and returns their gap.
ExchangeResult track_exchange(Lab &lab, const NoiseContext *ctx = nullptr);
FrequencyTable apply_exchange(const FrequencyTable &table, double exchange_hz, double time_s = 0);

/// Tracks one NMR line (electron down) with a single detuned pi pulse and a QND readout.
TrackResult track_nmr(Lab &lab, size_t nucleus, double span_hz, double step_hz, double rabi_hz,
                      const NoiseContext *ctx = nullptr);

/// Smooth Rabi-coupling curve (Hz of Rabi frequency per volt of amplitude) versus NMR
/// frequency: a monotone piecewise-cubic (PCHIP) interpolant through the anchors.
class RabiCouplingFit {
   public:
    RabiCouplingFit(std::vector<double> f_nmr_hz, std::vector<double> coupling_hz_per_v);
    /// Anchored so that the constant-ratio schedule reproduces the nine drive-table amplitudes
    /// and the 50 MHz filler amplitude.
    static const RabiCouplingFit &shipped();

    /// Throws RangeError outside [min_hz, max_hz].
    double coupling(double f_nmr_hz) const;
    double min_hz() const {
        return f_.front();
    }
    double max_hz() const {
        return f_.back();
    }

   private:
    struct Impl;
    std::vector<double> f_;
    std::shared_ptr<const Impl> impl_;
};

struct NmrSchedule {
    double f_rabi_hz = 0;
    double amplitude_v = 0;
    double ratio = 0;
};

/// f_rabi = ratio * f_nmr and the amplitude that produces it under the coupling fit.
NmrSchedule constant_absorption_schedule(double f_nmr_hz, const RabiCouplingFit &fit = RabiCouplingFit::shipped(),
                                         double ratio = 1.46e-4);

struct PowerBudget {
    double f_off_nmr_hz = 50e6;
    double f_off_esr_hz = 38.86e9;
    double nmr_filler_amplitude_v = 5.421e-3;
    double esr_filler_amplitude_v = 4e-3;
    double esr_drive_amplitude_v = 4e-3;
    double ratio = 1.46e-4;
};

/// Gives every drive slice (ESR, NMR, idle) exactly one ESR-band and one NMR-band tone,
/// adding off-resonant fillers where a channel is silent. NMR tones are scheduled at constant
/// absorption. Throws SchedulingError when an op would put two real tones on one channel.
Circuit compensate_power_budget(const Circuit &circuit, const DeviceModel &model, const FrequencyTable &table,
                                const PowerBudget &budget = {});

/// Load-induced line shift of every spin in every drive slice.
std::vector<std::vector<double>> slice_shifts(const Circuit &circuit, const DeviceModel &model,
                                              const FrequencyTable &table, const MicrowaveLoadModel &load,
                                              double nmr_rabi_ratio = 1.46e-4);
/// max - min over slices of the shift of `spin`.
double differential_shift(const std::vector<std::vector<double>> &shifts, size_t spin);

/// Controlled-phase error per (register of the target electron, control branch of the gate).
struct CrotPhaseCalibration {
    std::array<std::array<double, 2>, 2> phase_rad{};
    std::array<std::array<double, 2>, 2> contrast{};
};

/// Ramsey fringe over the phase of the second pi/2 pulse around each conditional pi gate,
/// referenced to the same fringe on an ideal device. Throws CalibrationLost when the fringe
/// contrast is below `min_contrast` of the readout contrast.
CrotPhaseCalibration calibrate_crot_phase(Lab &lab, size_t points = 16, double min_contrast = 0.3,
                                          const NoiseContext *ctx = nullptr);

/// Compensates every pi ESR op that fixes the other electron: virtual Z by theta/2 on the
/// target before and after the pulse, and by -+theta/2 on the control (CROT / zCROT).
Circuit apply_crot_phase_correction(const Circuit &circuit, const DeviceModel &model,
                                    const CrotPhaseCalibration &cal);

}  // namespace donorsim
