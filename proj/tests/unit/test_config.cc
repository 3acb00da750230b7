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

#include <cstdio>
#include <filesystem>
#include <string>

#include "donorsim/config.h"
#include "donorsim/errors.h"
#include "donorsim/frequency_table.h"

namespace donorsim {
namespace {

std::string shipped_path() {
    return std::string(DONORSIM_SOURCE_DIR) + "/configs/device_11q.json";
}

std::string field_of(const std::string &text) {
    try {
        parse_config(text);
    } catch (const ConfigError &e) {
        return e.field();
    }
    return "<no error>";
}

std::string message_of(const std::string &text) {
    try {
        parse_config(text);
    } catch (const ConfigError &e) {
        return e.what();
    }
    return "<no error>";
}

const char *kMinimal = R"({
  "b_field_T": 1.39,
  "registers": [{"label": "A", "hyperfine_Hz": [20e6, 30e6]}],
  "exchange_table": [[0.0, 1e6], [0.01, 2e6]]
})";

TEST(Config, ShippedFileLoadsWithLineCounts) {
    const Config c = load_config(shipped_path());
    const FrequencyTable t = enumerate_lines(c.device);
    EXPECT_EQ(t.esr_line_count(false), 48u);
    EXPECT_EQ(t.esr_line_count(true), 96u);
    EXPECT_EQ(c.device.num_spins(), 11u);
}

TEST(Config, ShippedFileIsTheReferenceConfig) {
    Config c = load_config(shipped_path());
    c.notes.clear();
    EXPECT_EQ(c, reference_config());
}

TEST(Config, CanonicalRoundTripIsBitwise) {
    const std::string once = serialize_config(load_config(shipped_path()));
    const std::string twice = serialize_config(parse_config(once));
    EXPECT_EQ(once, twice);
    EXPECT_EQ(once, read_text_file(shipped_path()));
}

TEST(Config, MinimalDocumentUsesIdealNoise) {
    const Config c = parse_config(kMinimal);
    EXPECT_EQ(c.noise, NoiseModel::ideal(c.device));
    EXPECT_EQ(c.engine, EngineOptions{});
    EXPECT_EQ(c.calibration, CalibrationPolicy{});
    EXPECT_EQ(c.device.num_spins(), 3u);
}

TEST(Config, NegativeFieldNamesThePath) {
    std::string text = kMinimal;
    text.replace(text.find("1.39"), 4, "-1.0");
    EXPECT_EQ(field_of(text), "b_field_T");
}

TEST(Config, DiagnosticsNameNestedFields) {
    EXPECT_EQ(field_of(R"({"b_field_T": 1, "registers": [{"label": "A", "hyperfine_Hz": [1e6, "x"]}]})"),
              "registers[0].hyperfine_Hz[1]");
    EXPECT_EQ(field_of(R"({"b_field_T": 1, "registers": [{"label": "A", "hyperfine_Hz": [1e6]}], "nosie": {}})"),
              "nosie");
    EXPECT_EQ(field_of(R"({"b_field_T": 1, "registers": [{"label": "A", "hyperfine_Hz": [1e6]}],
                          "noise": {"readout": {"electron_read_up": 1.5}}})"),
              "noise.readout.electron_read_up");
    EXPECT_EQ(field_of(R"({"b_field_T": 1, "registers": [{"label": "A", "hyperfine_Hz": [1e6]}],
                          "calibration": {"rotations": 4}})"),
              "calibration.rotations");
    EXPECT_EQ(field_of(R"({"registers": []})"), "b_field_T");
}

TEST(Config, MalformedJsonReportsLineAndColumn) {
    const std::string msg = message_of("{\n  \"b_field_T\": 1.39,\n  \"registers\": [,]\n}");
    EXPECT_NE(msg.find("<config>:3:"), std::string::npos) << msg;
}

TEST(Config, NoiseOverridesPatchOnlyTheirFields) {
    const Config base = reference_config();
    const Config c = apply_noise_overrides(base, R"({"readout": {"electron_read_up": 0.9}, "tls": []})");
    EXPECT_EQ(c.noise.readout.electron_read_up, 0.9);
    EXPECT_EQ(c.noise.readout.electron_read_down, base.noise.readout.electron_read_down);
    EXPECT_TRUE(c.noise.tls.empty());
    EXPECT_EQ(c.noise.drift, base.noise.drift);
    EXPECT_THROW(apply_noise_overrides(base, R"({"readout": {"electron_read_up": 2}})"), ConfigError);
}

TEST(Caltab, RoundTripAndMissingFileDefaults) {
    const Config c = reference_config();
    FrequencyTable t = enumerate_lines(c.device);
    t.registers[1].reference_hz += 12345.5;
    t.registers[1].calibrated_at_s = 99;
    t.exchange_hz += 17;
    const auto dir = std::filesystem::temp_directory_path() / "donorsim_caltab_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "caltab.json").string();
    save_caltab(path, t);
    EXPECT_EQ(load_caltab(path, c.device), t);
    std::filesystem::remove(path);
    EXPECT_EQ(load_caltab(path, c.device), enumerate_lines(c.device));
}

TEST(Caltab, ShapeMismatchRejected) {
    const Config c = reference_config();
    const std::string text = serialize_caltab(enumerate_lines(c.device));
    const Config small = parse_config(kMinimal);
    EXPECT_THROW(parse_caltab(text, small.device), ConfigError);
}

}  // namespace
}  // namespace donorsim
