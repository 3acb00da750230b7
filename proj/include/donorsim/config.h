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
#include <string>
#include <vector>

#include "donorsim/frequency_table.h"
#include "donorsim/lab.h"
#include "donorsim/noise.h"
#include "donorsim/pulse_engine.h"
#include "donorsim/spin_model.h"

namespace donorsim {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr int kCaltabSchemaVersion = 1;

/// Everything a run needs besides its experiment parameters.
struct Config {
    DeviceModel device;
    NoiseModel noise;
    EngineOptions engine;
    CalibrationPolicy calibration;
    /// Free-form remarks carried through serialization.
    std::vector<std::string> notes;

    /// Checks every block; throws ConfigError naming the field.
    void validate() const;
    bool operator==(const Config &) const = default;
};

/// The shipped two-register device with reference noise.
Config reference_config();

/// Parses a config document. Device fields sit at the top level; `noise`, `engine` and
/// `calibration` blocks are optional and default to an ideal noise model and library defaults.
/// Unknown fields are rejected. Throws ConfigError with the field path, or with line and
/// column for malformed JSON.
Config parse_config(const std::string &text, const std::string &origin = "<config>");
/// Reads and parses a file. Throws ConfigError if it cannot be read.
Config load_config(const std::string &path);
/// Canonical form: every field written, keys sorted, shortest round-trip doubles.
std::string serialize_config(const Config &config);
/// RFC 7386 merge patch applied to the `noise` block, then re-validated.
Config apply_noise_overrides(const Config &config, const std::string &patch_json);

/// Calibration table as JSON (references, offsets, NMR lines, J, timestamps).
std::string serialize_caltab(const FrequencyTable &table);
/// Throws ConfigError if the table does not match the device's register layout.
FrequencyTable parse_caltab(const std::string &text, const DeviceModel &model, const std::string &origin = "<caltab>");
/// A missing file yields the model's own line table.
FrequencyTable load_caltab(const std::string &path, const DeviceModel &model);
void save_caltab(const std::string &path, const FrequencyTable &table);

/// Reads a whole file; throws ConfigError naming the path on failure.
std::string read_text_file(const std::string &path);
void write_text_file(const std::string &path, const std::string &text);

}  // namespace donorsim
