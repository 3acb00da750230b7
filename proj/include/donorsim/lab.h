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
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "donorsim/circuit.h"
#include "donorsim/frequency_table.h"
#include "donorsim/noise.h"
#include "donorsim/pulse_engine.h"
#include "donorsim/spin_model.h"

namespace donorsim {

struct CalibrationPolicy {
    /// Recalibrate after this many runs or this much simulated time, whichever comes first.
    size_t interval_runs = 12;
    double interval_s = 450;
    /// Odd number of pi rotations in a tracking sweep.
    size_t rotations = 9;
    double span_hz = 40e3;
    double step_hz = 1e3;
    /// Shots per sweep point; 0 evaluates exact outcome probabilities.
    size_t shots = 50;
    /// Rabi frequency of tracking pulses.
    double track_rabi_hz = 40e3;
    /// Span multiplier and retry budget when no peak is found.
    double widen_factor = 4;
    size_t max_widenings = 2;
    /// Minimum fitted peak height relative to the electron readout contrast.
    double min_contrast = 0.3;
    /// Also track the exchange gap on every recalibration.
    bool track_exchange = false;

    void validate() const;
    bool operator==(const CalibrationPolicy &) const = default;
};

struct RecalibrationReport {
    double time_s = 0;
    std::vector<double> measured_refs_hz;
    size_t measurements = 0;
    double exchange_hz = 0;
    bool lost = false;
    std::string message;
};

/// A simulated device session: the true model and noise, the drifting environment, the
/// simulated clock and the calibration table that drives every tone.
class Lab {
   public:
    Lab(DeviceModel truth, NoiseModel noise, uint64_t seed, EngineOptions engine = {}, CalibrationPolicy policy = {});
    Lab(DeviceModel truth, NoiseModel noise, FrequencyTable table, uint64_t seed, EngineOptions engine = {},
        CalibrationPolicy policy = {});
    Lab(const Lab &) = delete;
    Lab &operator=(const Lab &) = delete;

    const DeviceModel &truth() const {
        return truth_;
    }
    const NoiseModel &noise() const {
        return noise_;
    }
    const FrequencyTable &table() const {
        return table_;
    }
    void set_table(FrequencyTable table);
    const EngineOptions &engine() const {
        return engine_;
    }
    const CalibrationPolicy &policy() const {
        return policy_;
    }
    double time_s() const {
        return drift_.time_s();
    }
    const DriftProcess &drift() const {
        return drift_;
    }
    std::mt19937_64 &rng() {
        return rng_;
    }
    size_t tracking_measurements() const {
        return tracking_measurements_;
    }
    void count_tracking_measurement() {
        ++tracking_measurements_;
    }
    const std::vector<RecalibrationReport> &recalibrations() const {
        return recalibrations_;
    }

    /// Effective classification error of one nuclear readout at the optimal QND shot count.
    double nuclear_read_error() const {
        return qnd_.error;
    }
    size_t qnd_shots() const {
        return qnd_.shots;
    }

    /// Offsets of the environment right now (one run point).
    NoiseContext sample_context();
    /// Context with every offset zero and perfect readout.
    NoiseContext ideal_context() const;

    /// Runs `shots` shots; advances the clock by shots * (duration + overhead).
    std::vector<ShotRecord> run_shots(const Circuit &circuit, const NoiseContext &ctx, size_t shots,
                                      RunOptions run = {});
    CountsTable run(const Circuit &circuit, const NoiseContext &ctx, size_t shots);
    /// Samples a fresh context, runs, and counts the run towards the recalibration policy.
    CountsTable run(const Circuit &circuit, size_t shots);
    /// Exact outcome distribution; the clock advances as if `equivalent_shots` had run.
    std::map<std::string, double> exact(const Circuit &circuit, const NoiseContext &ctx, size_t equivalent_shots = 0);
    StateVector final_state(const Circuit &circuit, const NoiseContext &ctx) const;
    double duration_s(const Circuit &circuit) const;

    void advance(double dt_s);
    void set_tls_state(size_t index, bool up) {
        drift_.set_tls_state(index, up);
    }

    /// Counts a completed run; recalibrates when the policy says so. Returns true if it did.
    bool note_run();
    /// Tracks every register reference (and J if configured) and rigidly updates the table.
    RecalibrationReport recalibrate();

   private:
    DeviceModel truth_;
    NoiseModel noise_;
    FrequencyTable table_;
    EngineOptions engine_;
    CalibrationPolicy policy_;
    DriftProcess drift_;
    std::mt19937_64 rng_;
    QndOperatingPoint qnd_;
    size_t runs_since_cal_ = 0;
    double last_cal_s_ = 0;
    size_t tracking_measurements_ = 0;
    bool in_calibration_ = false;
    std::vector<RecalibrationReport> recalibrations_;
};

}  // namespace donorsim
