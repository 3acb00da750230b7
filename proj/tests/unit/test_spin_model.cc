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
#include "donorsim/frequency_table.h"
#include "donorsim/spin_model.h"

namespace donorsim {
namespace {

TEST(SpinModel, ReferenceLineCounts) {
    const DeviceModel m = reference_device();
    const FrequencyTable t = enumerate_lines(m);
    EXPECT_EQ(t.esr_line_count(false), 48u);
    EXPECT_EQ(t.esr_line_count(true), 96u);
    EXPECT_EQ(t.nmr_line_count(), 18u);
    EXPECT_EQ(m.num_spins(), 11u);
}

TEST(SpinModel, NmrRoundTripForEveryDriveRow) {
    const DeviceModel m = reference_device();
    for (const auto &row : nmr_drive_table()) {
        const size_t s = m.find_spin(row.nucleus);
        const SpinRef ref = m.spin_ref(s);
        EXPECT_NEAR(nmr_frequency(m, ref.register_index, ref.nucleus_index, SpinState::kDown), row.f_nmr_hz, 1e-6)
            << row.nucleus;
    }
}

TEST(SpinModel, ExchangeBranchIdentity) {
    DeviceModel m = reference_device();
    EXPECT_DOUBLE_EQ(m.exchange_hz(), 1.69e6);
    for (size_t r = 0; r < 2; ++r) {
        for (uint32_t p = 0; p < (1u << m.num_nuclei(r)); ++p) {
            const double up = esr_frequency(m, r, p, SpinState::kUp);
            const double down = esr_frequency(m, r, p, SpinState::kDown);
            EXPECT_NEAR(up - down, 1.69e6, 1e-6);
        }
    }
}

TEST(SpinModel, HyperfineLinearity) {
    const DeviceModel m = reference_device();
    for (size_t r = 0; r < 2; ++r) {
        const size_t k = m.num_nuclei(r);
        double sum = 0;
        for (double a : m.registers[r].hyperfine_hz) sum += a;
        const double all_up = esr_frequency(m, r, (1u << k) - 1, SpinState::kDown);
        const double all_down = esr_frequency(m, r, 0u, SpinState::kDown);
        EXPECT_NEAR(all_up - all_down, sum, 1e-4);
        for (size_t i = 0; i < k; ++i) {
            const double d = esr_frequency(m, r, 1u << i, SpinState::kDown) - all_down;
            EXPECT_NEAR(d, m.registers[r].hyperfine_hz[i], 1e-4);
        }
    }
}

TEST(SpinModel, SingleNucleusShift) {
    DeviceModel m;
    m.registers = {{"A", {100e6}, {0.0}, {"n1"}}};
    m.validate();
    EXPECT_NEAR(esr_frequency(m, 0, 1u, SpinState::kDown) - esr_frequency(m, 0, 0u, SpinState::kDown), 100e6, 1e-6);
    const FrequencyTable t = enumerate_lines(m);
    EXPECT_EQ(t.esr_line_count(false), 2u);
}

TEST(SpinModel, ThreeNucleusBruteForce) {
    DeviceModel m;
    m.registers = {{"A", {11e6, 37e6, 90e6}, {0, 0, 0}, {"a", "b", "c"}}};
    m.validate();
    const FrequencyTable t = enumerate_lines(m);
    ASSERT_EQ(t.registers[0].offsets_hz.size(), 8u);
    const double base = m.gamma_e_hz_per_t * m.b_field_t;
    for (uint32_t p = 0; p < 8; ++p) {
        double f = base;
        for (int i = 0; i < 3; ++i) f += m.registers[0].hyperfine_hz[i] * (((p >> i) & 1) ? 0.5 : -0.5);
        EXPECT_NEAR(t.registers[0].reference_hz + t.registers[0].offsets_hz[p], f, 1e-3);
    }
}

TEST(SpinModel, LineCountLawUpToFive) {
    for (size_t k1 = 1; k1 <= 5; ++k1) {
        for (size_t k2 = 1; k2 <= 5; ++k2) {
            DeviceModel m;
            RegisterModel a{"A", {}, {}, {}}, b{"B", {}, {}, {}};
            for (size_t i = 0; i < k1; ++i) {
                a.hyperfine_hz.push_back(50e6 + 1e6 * i);
                a.stark_eff_hz_per_v.push_back(0);
                a.nucleus_labels.push_back("a" + std::to_string(i));
            }
            for (size_t i = 0; i < k2; ++i) {
                b.hyperfine_hz.push_back(60e6 + 1e6 * i);
                b.stark_eff_hz_per_v.push_back(0);
                b.nucleus_labels.push_back("b" + std::to_string(i));
            }
            m.registers = {a, b};
            m.exchange_table = {{0.0, 1e6}};
            m.validate();
            const FrequencyTable t = enumerate_lines(m);
            EXPECT_EQ(t.esr_line_count(true), 2 * ((1u << k1) + (1u << k2)));
        }
    }
}

TEST(SpinModel, LogLinearExchange) {
    const std::vector<ExchangeSample> table = {{0.0, 1e6}, {1.0, 4e6}};
    EXPECT_NEAR(interpolate_exchange(table, 0.5), 2e6, 1e-6);
    EXPECT_DOUBLE_EQ(interpolate_exchange(table, 1.0), 4e6);
    EXPECT_THROW(interpolate_exchange(table, 1.5), RangeError);
}

TEST(SpinModel, DetuningMovesHyperfineOnly) {
    const DeviceModel m = reference_device();
    const DeviceModel d = apply_detuning(m, 0.0);
    EXPECT_DOUBLE_EQ(d.exchange_hz(), 1.55e6);
    const size_t n4 = m.find_spin("n4");
    const SpinRef ref = m.spin_ref(n4);
    EXPECT_NEAR(d.registers[0].hyperfine_hz[ref.nucleus_index] - m.registers[0].hyperfine_hz[ref.nucleus_index],
                -1.194e7 * (0.0 - 0.005), 1e-6);
    EXPECT_DOUBLE_EQ(d.registers[1].hyperfine_hz[0], m.registers[1].hyperfine_hz[0]);
    const FrequencyTable a = enumerate_lines(m), b = enumerate_lines(d);
    EXPECT_DOUBLE_EQ(a.registers[1].offsets_hz[5], b.registers[1].offsets_hz[5]);
    EXPECT_THROW(apply_detuning(m, 0.01), RangeError);
}

TEST(SpinModel, StarkNormalization) {
    EXPECT_DOUBLE_EQ(stark_normalize(7, 2, 0.5), 28);
    EXPECT_DOUBLE_EQ(stark_normalize(0, 2, 0.5), 0);
    const double eta = stark_normalize(-1.194e7, 146.6e-9, 0.07);
    EXPECT_NEAR(eta, -25.0, 0.1);  // Hz per V/m equals MHz per MV/m
    EXPECT_THROW(stark_normalize(1, 0, 0.5), DomainError);
}

TEST(SpinModel, ValidateNamesField) {
    DeviceModel m = reference_device();
    m.b_field_t = -1;
    try {
        m.validate();
        FAIL();
    } catch (const ConfigError &e) {
        EXPECT_EQ(e.field(), "b_field_T");
    }
}

TEST(SpinModel, ZeroHyperfineDegenerateNmr) {
    DeviceModel m;
    m.registers = {{"A", {1e-9}, {0}, {"n"}}};
    EXPECT_NEAR(nmr_frequency(m, 0, 0, SpinState::kUp), nmr_frequency(m, 0, 0, SpinState::kDown), 1e-6);
}

}  // namespace
}  // namespace donorsim
