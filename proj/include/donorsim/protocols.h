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

#include "donorsim/calibration.h"
#include "donorsim/circuits.h"
#include "donorsim/lab.h"
#include "donorsim/noise.h"
#include "donorsim/tomography.h"

namespace donorsim {

struct QndSpec {
    enum class Mode : uint8_t { kNucleus, kPattern };

    Mode mode = Mode::kNucleus;
    /// Spin index of the nucleus (nucleus mode).
    size_t nucleus = 0;
    /// Register and nuclear pattern (pattern mode; bit i = nucleus i up).
    size_t register_index = 0;
    uint32_t pattern = 0;
    /// 0 selects the lab's optimal shot count.
    size_t shots = 0;
    /// Outcomes with |dP| below this are flagged as rejected.
    double reject_band = 0.2;

    static QndSpec nucleus_mode(size_t nucleus, size_t shots = 0);
    static QndSpec pattern_mode(size_t register_index, uint32_t pattern, size_t shots = 0);
    /// Throws ConfigError.
    void validate(const DeviceModel &model) const;
};

struct QndReadout {
    /// Nucleus mode: nucleus up. Pattern mode: register in the target pattern.
    bool up = false;
    double delta_p = 0;
    bool rejected = false;
    size_t shots = 0;
    /// Probability that the nucleus (pattern) is unchanged by the readout (ground truth).
    double preserved = 0;
};

/// One QND readout on a register prepared in `initial_state` (full basis index). Uses `ctx` or a
/// freshly sampled context.
QndReadout qnd_read(Lab &lab, const QndSpec &spec, uint64_t initial_state = 0, const NoiseContext *ctx = nullptr);

/// Markov parameters of the lab's readout model (electron init error folded in).
QndMarkovParams qnd_markov_params(const ReadoutErrorModel &readout);

/// argmin over [1, cap] of the exact misclassification; ties go to the smaller count.
size_t optimal_qnd_shots(const QndMarkovParams &params, size_t cap = 300);

struct QndMonteCarlo {
    size_t shots = 0;
    size_t trials = 0;
    double error = 0;
    double sigma = 0;
    double error_postselected = 0;
    double acceptance = 0;
    /// Counts of the up-count difference, index d + shots, for each prepared state.
    std::vector<uint64_t> diff_given_up;
    std::vector<uint64_t> diff_given_down;
};

/// Circuit-level Monte Carlo of single-nucleus QND classification, half of the trials prepared up
/// and half down. The context defaults to zero line offsets with the lab's readout model and
/// no nuclear init error.
QndMonteCarlo qnd_monte_carlo(Lab &lab, size_t nucleus, size_t shots, size_t trials, double reject_band = 0.2,
                              const NoiseContext *ctx = nullptr);

struct EstSpec {
    size_t register_index = 0;
    uint32_t pattern = 0;
    size_t repetitions = 1;
    /// Gate acceptance on a pattern-mode QND readout.
    bool verify = false;
    double reject_band = 0.2;
    /// Verification readout length; 0 selects the lab's optimal shot count.
    size_t qnd_shots = 0;

    void validate(const DeviceModel &model) const;
};

struct EstResult {
    bool success = true;
    /// Ground-truth probability that the register holds the target pattern.
    double fidelity = 0;
    double verify_delta_p = 0;
};

/// Electron state transfer on a register prepared in `initial_state`, optionally verified.
EstResult est_initialize(Lab &lab, const EstSpec &spec, uint64_t initial_state = 0,
                         const NoiseContext *ctx = nullptr);

struct EstCampaign {
    size_t trials = 0;
    size_t accepted = 0;
    /// Mean ground-truth fidelity over accepted trials.
    double fidelity = 0;
    double sigma = 0;
};

/// Repeats est_initialize from uniformly random nuclear patterns, sampling one context per
/// trial block.
EstCampaign est_campaign(Lab &lab, const EstSpec &spec, size_t trials);

enum class CampaignKind : uint8_t { kEsrRef, kEsrOffsets, kJGap, kNmr };

const char *campaign_kind_name(CampaignKind kind);
/// Throws ConfigError for unknown names.
CampaignKind parse_campaign_kind(const std::string &name);

struct CampaignOptions {
    double duration_s = 3600;
    double cadence_s = 60;
    /// Registers tracked by esr_ref and esr_offsets; empty selects all.
    std::vector<size_t> registers;
    /// Nuclei tracked by nmr; empty selects all.
    std::vector<size_t> nuclei;
    double nmr_span_hz = 20e3;
    double nmr_step_hz = 1e3;
    double nmr_rabi_hz = 2e3;
    /// Histogram bin width of every trace.
    double bin_hz = 1e3;

    void validate() const;
};

struct LineStats {
    std::string label;
    size_t register_index = 0;
    double mean_hz = 0;
    double stddev_hz = 0;
    double min_hz = 0;
    double q1_hz = 0;
    double median_hz = 0;
    double q3_hz = 0;
    double max_hz = 0;
};

struct Histogram {
    double origin_hz = 0;
    double bin_hz = 0;
    std::vector<uint64_t> counts;

    /// Centers of local maxima with at least `min_count` entries.
    std::vector<double> modes(uint64_t min_count = 1) const;
};

struct CampaignResult {
    CampaignKind kind = CampaignKind::kEsrRef;
    std::vector<double> times_s;
    std::vector<std::string> labels;
    /// values[line][point]; NaN where tracking was lost.
    std::vector<std::vector<double>> values_hz;
    std::vector<LineStats> stats;
    std::vector<Histogram> histograms;
    /// Mean of the per-line standard deviations, per register.
    std::vector<double> sigma_bar_hz;
    std::vector<std::string> lost_events;

    double peak_to_peak_hz(size_t line) const;
};

/// Tracks lines every `cadence_s` of simulated time for `duration_s`:
///   esr_ref     reference-line offset from the table, per register
///   esr_offsets every ESR line (other electron down) relative to its register reference
///   j_gap       exchange gap from the zCROT and CROT branches
///   nmr         NMR line frequencies (electron down)
/// Lost tracking is recorded and the point left NaN.
CampaignResult stability_campaign(Lab &lab, CampaignKind kind, const CampaignOptions &options = {});

Histogram make_histogram(const std::vector<double> &values, double bin_hz);
LineStats line_stats(const std::string &label, size_t register_index, const std::vector<double> &values);

struct BellRow {
    size_t q1 = 0;
    size_t q2 = 0;
    double fidelity = 0;
    double sigma = 0;
};

/// Full two-qubit tomography of a Bell state for every pair.
std::vector<BellRow> bell_campaign(Lab &lab, const std::vector<std::pair<size_t, size_t>> &pairs, BellState state,
                                   size_t shots = 2000, size_t resamples = 200, bool exact = false);

struct GhzRow {
    size_t n = 0;
    bool reduced = true;
    FidelityEstimate estimate;
};

/// GHZ fidelity for every size in `sizes` along the default preparation order.
std::vector<GhzRow> ghz_campaign(Lab &lab, const std::vector<size_t> &sizes, bool reduced, size_t shots = 2000,
                                 size_t resamples = 200, bool exact = false);

}  // namespace donorsim
