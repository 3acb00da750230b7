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

#include <gtest/gtest.h>

#include <cmath>

#include "donorsim/device.h"
#include "donorsim/errors.h"
#include "donorsim/rb.h"

namespace donorsim {
namespace {

RbConfig quick(double depolarizing) {
    RbConfig c;
    c.variations = 4;
    c.lengths = {1, 4, 16, 64};
    c.shots = 100;
    c.bootstrap_resamples = 100;
    c.depolarizing = depolarizing;
    return c;
}

CountsTable binary(uint64_t ones, uint64_t zeros) {
    CountsTable t;
    if (ones) t.add("1", ones);
    if (zeros) t.add("0", zeros);
    return t;
}

TEST(RbFormulas, Algebra) {
    EXPECT_DOUBLE_EQ(clifford_fidelity(0.99, 1), 0.995);
    EXPECT_DOUBLE_EQ(clifford_fidelity(0.99, 2), (1 + 3 * 0.99) / 4);
    EXPECT_DOUBLE_EQ(primitive_fidelity(0.99, 2.0), 0.995);
    EXPECT_DOUBLE_EQ(interleaved_fidelity(0.98, 2), 0.985);
    EXPECT_DOUBLE_EQ(interleaved_fidelity(0.98, 1), 0.99);
    EXPECT_THROW(primitive_fidelity(0.9, 0), DomainError);
}

TEST(RbConfig, Validation) {
    RbConfig c;
    c.validate();
    c.lengths = {4, 2};
    EXPECT_THROW(c.validate(), ConfigError);
    c = RbConfig{};
    c.shots = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = RbConfig{};
    c.bootstrap_resamples = 20;
    EXPECT_THROW(c.validate(), ConfigError);
    const RbConfig two = RbConfig::two_qubit(true);
    EXPECT_EQ(two.variations, 20u);
    EXPECT_EQ(two.lengths.back(), 256u);
    EXPECT_EQ(two.shots, 50u);
    EXPECT_EQ(RbConfig::one_qubit().lengths.back(), 1024u);
}

TEST(RbNativeSet, Selection) {
    const DeviceModel m = reference_device();
    EXPECT_EQ(rb_native_set(m, {m.find_spin("n5")}), NativeSet::kEuler1q);
    EXPECT_EQ(rb_native_set(m, {m.electron_spin(0), m.electron_spin(1)}), NativeSet::kCrot2q);
    EXPECT_EQ(rb_native_set(m, {m.find_spin("n6"), m.find_spin("n9")}), NativeSet::kNuclearCz2q);
    EXPECT_THROW(rb_native_set(m, {m.electron_spin(0), m.find_spin("n1")}), CircuitError);
}

TEST(RunRb, NoiselessDecayIsFlat) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 1);
    const RbResult r = run_rb(lab, {m.electron_spin(0)}, quick(1.0));
    ASSERT_TRUE(r.fit_ok) << r.diagnostic;
    EXPECT_NEAR(r.p, 1.0, 1e-12);
    EXPECT_NEAR(r.f_c, 1.0, 1e-12);
    for (const RbPoint &pt : r.points) {
        EXPECT_EQ(pt.f_up, 1.0);
        EXPECT_EQ(pt.f_down, 0.0);
    }
    EXPECT_GE(r.sigma_p, 0.0);
}

TEST(RunRb, DepolarizingRecovered) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 2);
    const RbResult r = run_rb(lab, {m.electron_spin(1)}, quick(0.95));
    ASSERT_TRUE(r.fit_ok);
    EXPECT_NEAR(r.p, 0.95, 4 * r.sigma_p + 1e-3);
    EXPECT_GT(r.sigma_p, 0);
    EXPECT_DOUBLE_EQ(r.f_c, (1 + r.p) / 2);
    EXPECT_DOUBLE_EQ(r.f_p, r.f_c);
}

TEST(RunRb, TwoQubitNuclearUsesMeanPrimitiveCount) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 3);
    RbConfig c = quick(0.97);
    c.lengths = {1, 4, 16};
    c.variations = 3;
    const RbResult r = run_rb(lab, {m.find_spin("n6"), m.find_spin("n9")}, c);
    ASSERT_TRUE(r.fit_ok);
    EXPECT_NEAR(r.n_bar, CliffordGroup::get(2).mean_physical_count(NativeSet::kNuclearCz2q), 1e-12);
    EXPECT_DOUBLE_EQ(r.f_c, (1 + 3 * r.p) / 4);
    EXPECT_DOUBLE_EQ(r.f_p, 1 - (1 - r.f_c) / r.n_bar);
    EXPECT_NEAR(r.p, 0.97, 0.02);
}

TEST(RunRb, RecalibrationHookFires) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 4);
    RbConfig c = quick(1.0);
    c.bootstrap_resamples = 0;
    run_rb(lab, {m.electron_spin(0)}, c);
    // 4 lengths x 4 variations x 2 directions = 32 runs.
    EXPECT_EQ(lab.recalibrations().size(), 32u / lab.policy().interval_runs);
}

TEST(RunRb, FitFailureFlagged) {
    RbResult r;
    r.num_qubits = 1;
    for (size_t n : {1, 2, 4}) r.points.push_back({n, 0.5, 0.5, 0.0});
    fit_rb(r);
    EXPECT_FALSE(r.fit_ok);
    EXPECT_TRUE(std::isnan(r.p));
    EXPECT_TRUE(std::isnan(r.f_c));
    EXPECT_FALSE(r.diagnostic.empty());
}

TEST(InterleavedRb, IdentityTargetGivesUnitFidelity) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 5);
    const InterleavedRbResult r = run_interleaved_rb(lab, {m.electron_spin(0)}, quick(0.97), 0);
    EXPECT_NEAR(r.f_i, 1.0, 3 * r.sigma_f_i + 2e-3);
}

TEST(InterleavedRb, InjectedTargetErrorRecovered) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 6);
    RbConfig c = quick(0.99);
    c.interleaved_depolarizing = 0.95;
    c.variations = 6;
    const InterleavedRbResult r = run_interleaved_rb(lab, {m.electron_spin(0)}, c, 5);
    EXPECT_NEAR(r.ratio, 0.95, 3 * 2 * r.sigma_f_i + 1e-3);
    EXPECT_NEAR(r.f_i, (1 + 0.95) / 2, 3 * r.sigma_f_i + 1e-3);
    EXPECT_FALSE(r.clamped);
}

TEST(Bootstrap, ZeroVariance) {
    const std::vector<CountsTable> c = {binary(200, 0)};
    const double s = bootstrap_error(c, 200, [](const std::vector<CountsTable> &t) { return t[0].probability("1"); }, 1);
    EXPECT_EQ(s, 0.0);
}

TEST(Bootstrap, BinomialStddev) {
    const auto freq = [](const std::vector<CountsTable> &t) { return t[0].probability("1"); };
    const double s = bootstrap_error({binary(100, 100)}, 2000, freq, 2);
    EXPECT_NEAR(s, std::sqrt(0.25 / 200), 0.1 * std::sqrt(0.25 / 200));
    double r = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        r += bootstrap_error({binary(200, 200)}, 1000, freq, seed) / bootstrap_error({binary(100, 100)}, 1000, freq, seed);
    }
    EXPECT_NEAR(r / 5, 1 / std::sqrt(2.0), 0.05);
}

TEST(Bootstrap, Deterministic) {
    const auto freq = [](const std::vector<CountsTable> &t) { return t[0].probability("1"); };
    EXPECT_EQ(bootstrap_error({binary(30, 70)}, 100, freq, 9), bootstrap_error({binary(30, 70)}, 100, freq, 9));
}

TEST(Bootstrap, Errors) {
    const auto freq = [](const std::vector<CountsTable> &t) { return t[0].probability("1"); };
    EXPECT_THROW(bootstrap_error({}, 200, freq, 1), DomainError);
    EXPECT_THROW(bootstrap_error({CountsTable{}}, 200, freq, 1), DomainError);
    EXPECT_THROW(bootstrap_error({binary(1, 1)}, 50, freq, 1), DomainError);
}

}  // namespace
}  // namespace donorsim
