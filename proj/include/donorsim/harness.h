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

#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "donorsim/config.h"

namespace donorsim {

inline constexpr int kBundleSchemaVersion = 1;

/// One experiment invocation.
struct RunManifest {
    /// Empty selects the built-in reference config.
    std::string config_path;
    /// JSON merge patch applied to the config's noise block; may be empty.
    std::string noise_overrides;
    /// rb, qst, ghz, qnd, init, stability, calibrate or lines.
    std::string experiment;
    /// Experiment flags by name (values as given on the command line).
    std::map<std::string, std::string> params;
    std::optional<uint64_t> seed;
    std::string out_dir;
    /// Empty selects <out_dir>/caltab.json.
    std::string caltab_path;

    /// Throws ConfigError: missing seed, empty output directory, unreadable config path,
    /// unknown experiment.
    void validate() const;
    std::string resolved_caltab() const;
};

struct ResultBundle {
    int schema_version = kBundleSchemaVersion;
    RunManifest manifest;
    /// Output role -> file name relative to the output directory.
    std::map<std::string, std::string> outputs;
    double wall_time_s = 0;
    int exit_code = 0;
    std::string error;

    std::string to_json() const;
    static ResultBundle from_json(const std::string &text);
    /// Reads <dir>/bundle.json.
    static ResultBundle load(const std::string &dir);
};

/// Experiment names accepted by `run`.
const std::vector<std::string> &experiment_names();

/// 0 success, 2 config error, 3 experiment error, 4 calibration lost.
int exit_code_for(const std::exception &e);

/// Loads the config (and overrides) of a manifest.
Config manifest_config(const RunManifest &manifest);

/// Validates the manifest, runs the experiment, writes its outputs and <out_dir>/bundle.json,
/// and saves the calibration table when the run recalibrated. Failures are recorded in the
/// bundle (with its exit code) rather than thrown.
ResultBundle run(const RunManifest &manifest);

/// Figures accepted by `emit_plotdata`.
const std::vector<std::string> &plot_figures();

/// Writes plot-ready CSV files for a figure into `out_dir` from a bundle's outputs (read from
/// `bundle_dir`). Returns the written paths. Throws DomainError when the bundle does not hold
/// the outputs the figure needs.
std::vector<std::string> emit_plotdata(const ResultBundle &bundle, const std::string &bundle_dir,
                                       const std::string &figure, const std::string &out_dir);

}  // namespace donorsim
