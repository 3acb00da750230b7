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
#include <string>
#include <vector>

#include "donorsim/clifford.h"
#include "donorsim/lab.h"
#include "donorsim/pulse_engine.h"

namespace donorsim {

struct RbConfig {
    size_t variations = 10;
    /// Ascending sequence lengths (Cliffords per sequence, recovery excluded).
    std::vector<size_t> lengths = {1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};
    size_t shots = 200;
    size_t bootstrap_resamples = 200;
    uint64_t seed = 1;
    /// Injected depolarizing parameter after every random Clifford (1 = none).
    double depolarizing = 1;
    /// Injected depolarizing parameter after every interleaved target (1 = none).
    double interleaved_depolarizing = 1;
    /// Interleaved runs draw the same random sets as the reference run.
    bool reuse_sets = true;

    /// 10 variations up to 1024 Cliffords, 200 shots.
    static RbConfig one_qubit();
    /// 20 variations up to 256 Cliffords; 200 shots for electrons, 50 for nuclei.
    static RbConfig two_qubit(bool nuclear);

    /// Throws ConfigError with the offending field.
    void validate() const;
};

struct RbPoint {
    size_t length = 0;
    double f_up = 0;    // P(all up) with the recovery targeting all up
    double f_down = 0;  // P(all up) with the recovery targeting all down
    double f = 0;       // f_up - f_down
};

struct RbResult {
    size_t num_qubits = 0;
    NativeSet native_set = NativeSet::kEuler1q;
    std::vector<RbPoint> points;
    double amplitude = 0;
    double p = 0;
    double f_c = 0;
    double f_p = 0;
    double n_bar = 1;
    double sigma_amplitude = 0;
    double sigma_p = 0;
    double sigma_f_c = 0;
    double sigma_f_p = 0;
    bool fit_ok = false;
    std::string diagnostic;
    /// Raw counts indexed [direction (0 = up, 1 = down)][length][variation].
    std::vector<std::vector<std::vector<CountsTable>>> counts;
};

struct InterleavedRbResult {
    RbResult reference;
    RbResult interleaved;
    size_t target = 0;
    double ratio = 0;  // p_i / p
    double f_i = 0;
    double sigma_f_i = 0;
    bool clamped = false;
    std::string warning;
};

/// Clifford-averaged fidelity from a depolarizing parameter: (1 + (d - 1) p) / d.
double clifford_fidelity(double p, size_t num_qubits);
/// 1 - (1 - F_C) / n_bar.
double primitive_fidelity(double f_c, double n_bar);
/// Interleaved gate fidelity from p_i / p: (1 + (d - 1) ratio) / d.
double interleaved_fidelity(double ratio, size_t num_qubits);

/// Native set used for a qubit selection: Euler for one qubit, CROT for two electrons, CZ for
/// two nuclei. Throws CircuitError for mixed pairs.
NativeSet rb_native_set(const DeviceModel &model, const std::vector<size_t> &qubits);

/// Standard RB on one or two qubits of the lab device. Every (direction, length, variation)
/// circuit is one lab run, so the lab's recalibration policy fires during the experiment.
RbResult run_rb(Lab &lab, const std::vector<size_t> &qubits, const RbConfig &config, int interleaved = -1);

/// Interleaved RB against `target` (a Clifford index). Runs the reference unless one is given.
InterleavedRbResult run_interleaved_rb(Lab &lab, const std::vector<size_t> &qubits, const RbConfig &config,
                                       size_t target, const RbResult *reference = nullptr);

/// Fits the per-length points of a result in place (A, p, F_C, F_P, flags).
void fit_rb(RbResult &result);

/// Multinomial bootstrap: every count table is resampled with its own total, the statistic is
/// recomputed per resample, and the sample standard deviation of each component is returned.
/// Non-finite statistic values are dropped. Throws DomainError for empty input or fewer than
/// 100 resamples.
std::vector<double> bootstrap_errors(const std::vector<CountsTable> &counts, size_t resamples,
                                     const std::function<std::vector<double>(const std::vector<CountsTable> &)> &statistic,
                                     uint64_t seed);
double bootstrap_error(const std::vector<CountsTable> &counts, size_t resamples,
                       const std::function<double(const std::vector<CountsTable> &)> &statistic, uint64_t seed);

}  // namespace donorsim
