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

#include <string>
#include <vector>

#include "donorsim/noise.h"
#include "donorsim/spin_model.h"

namespace donorsim {

/// One row of the optimised NMR drive table: line frequency (electron down), Rabi frequency and
/// room-temperature drive amplitude.
struct NmrDriveRow {
    std::string nucleus;
    double f_nmr_hz;
    double f_rabi_hz;
    double amplitude_v;
};

/// The nine measured rows, ordered by line frequency.
const std::vector<NmrDriveRow> &nmr_drive_table();

/// Off-resonant NMR filler entry of the same table.
NmrDriveRow nmr_filler_row();

inline constexpr double kAbsorptionRatio = 1.46e-4;
inline constexpr double kReferenceDetuningV = 0.005;

/// Two-register reference device (4P: n1..n4, 5P: n5..n9). Hyperfine couplings are derived from
/// the electron-down NMR lines of the drive table.
DeviceModel reference_device();

/// Reference noise: collective drift, 5P telegraph defects, n4 drift, correlated 5P jumps,
/// readout at 0.75 average fidelity and measured coherence times.
NoiseModel reference_noise(const DeviceModel &model);

}  // namespace donorsim
