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

#include "donorsim/lab.h"

#include <cmath>

#include "donorsim/calibration.h"
#include "donorsim/errors.h"

namespace donorsim {

void CalibrationPolicy::validate() const {
    if (interval_runs < 1) throw ConfigError("calibration.interval_runs", "must be >= 1");
    if (!(interval_s > 0)) throw ConfigError("calibration.interval_s", "must be > 0");
    if (rotations < 1 || rotations % 2 == 0) throw ConfigError("calibration.rotations", "must be odd and >= 1");
    if (!(span_hz > 0)) throw ConfigError("calibration.span_Hz", "must be > 0");
    if (!(step_hz > 0) || step_hz * 4 > span_hz) throw ConfigError("calibration.step_Hz", "must be > 0 and <= span/4");
    if (!(track_rabi_hz > 0)) throw ConfigError("calibration.track_rabi_Hz", "must be > 0");
    if (!(widen_factor > 1)) throw ConfigError("calibration.widen_factor", "must be > 1");
    if (!(min_contrast >= 0 && min_contrast <= 1)) throw ConfigError("calibration.min_contrast", "must be in [0, 1]");
}

Lab::Lab(DeviceModel truth, NoiseModel noise, uint64_t seed, EngineOptions engine, CalibrationPolicy policy)
    : Lab(truth, noise, enumerate_lines(truth), seed, engine, policy) {
}

Lab::Lab(DeviceModel truth, NoiseModel noise, FrequencyTable table, uint64_t seed, EngineOptions engine,
         CalibrationPolicy policy)
    : truth_(std::move(truth)),
      noise_(std::move(noise)),
      table_(std::move(table)),
      engine_(engine),
      policy_(policy),
      rng_(seed) {
    truth_.validate();
    noise_.validate(truth_);
    policy_.validate();
    drift_ = DriftProcess(truth_, noise_);
    qnd_ = qnd_operating_point(noise_.readout);
}

void Lab::set_table(FrequencyTable table) {
    table_ = std::move(table);
}

NoiseContext Lab::sample_context() {
    return make_noise_context(truth_, noise_, drift_.sample(rng_), qnd_.error);
}

NoiseContext Lab::ideal_context() const {
    return NoiseContext::ideal(truth_);
}

void Lab::advance(double dt_s) {
    drift_.advance(dt_s, rng_);
}

std::vector<ShotRecord> Lab::run_shots(const Circuit &circuit, const NoiseContext &ctx, size_t shots,
                                       RunOptions run) {
    if (shots < 1) throw DomainError("a run needs at least one shot");
    const Simulator sim(truth_, table_, engine_);
    run.shots = shots;
    run.seed = rng_();
    auto out = sim.run_shots(circuit, ctx, run);
    double t = 0;
    for (const ShotRecord &r : out) t += r.duration_s + noise_.shot_overhead_s;
    advance(t);
    return out;
}

CountsTable Lab::run(const Circuit &circuit, const NoiseContext &ctx, size_t shots) {
    CountsTable table;
    for (const ShotRecord &r : run_shots(circuit, ctx, shots)) {
        if (r.accepted) {
            table.add(r.bits);
        } else {
            ++table.rejected;
        }
    }
    return table;
}

CountsTable Lab::run(const Circuit &circuit, size_t shots) {
    const NoiseContext ctx = sample_context();
    CountsTable out = run(circuit, ctx, shots);
    note_run();
    return out;
}

std::map<std::string, double> Lab::exact(const Circuit &circuit, const NoiseContext &ctx, size_t equivalent_shots) {
    const Simulator sim(truth_, table_, engine_);
    auto out = sim.exact_probabilities(circuit, ctx);
    if (equivalent_shots > 0) {
        advance(static_cast<double>(equivalent_shots) * (sim.duration_s(circuit) + noise_.shot_overhead_s));
    }
    return out;
}

StateVector Lab::final_state(const Circuit &circuit, const NoiseContext &ctx) const {
    const Simulator sim(truth_, table_, engine_);
    return sim.final_state(circuit, ctx);
}

double Lab::duration_s(const Circuit &circuit) const {
    const Simulator sim(truth_, table_, engine_);
    return sim.duration_s(circuit);
}

bool Lab::note_run() {
    if (in_calibration_) return false;
    ++runs_since_cal_;
    if (runs_since_cal_ < policy_.interval_runs && time_s() - last_cal_s_ < policy_.interval_s) return false;
    recalibrate();
    return true;
}

RecalibrationReport Lab::recalibrate() {
    in_calibration_ = true;
    struct Reset {
        bool &flag;
        ~Reset() {
            flag = false;
        }
    } reset{in_calibration_};
    RecalibrationReport rep;
    rep.time_s = time_s();
    try {
        const NoiseContext ctx = sample_context();
        for (size_t r = 0; r < truth_.num_registers(); ++r) {
            rep.measured_refs_hz.push_back(track_reference(*this, r, &ctx).frequency_hz);
            ++rep.measurements;
        }
        FrequencyTable next = collective_recalibrate(table_, rep.measured_refs_hz, time_s());
        if (policy_.track_exchange && truth_.num_registers() == 2) {
            table_ = next;
            const ExchangeResult ex = track_exchange(*this, &ctx);
            rep.exchange_hz = ex.exchange_hz;
            rep.measurements += 2;
            next = apply_exchange(table_, ex.exchange_hz, time_s());
        } else {
            rep.exchange_hz = next.exchange_hz;
        }
        table_ = std::move(next);
    } catch (const CalibrationLost &e) {
        rep.lost = true;
        rep.message = e.what();
    }
    runs_since_cal_ = 0;
    last_cal_s_ = time_s();
    recalibrations_.push_back(rep);
    return rep;
}

}  // namespace donorsim
