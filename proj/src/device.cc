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

#include "donorsim/device.h"

namespace donorsim {

const std::vector<NmrDriveRow> &nmr_drive_table() {
    static const std::vector<NmrDriveRow> rows = {
        {"n5", 24.221e6, 3.538e3, 4.789e-3},  {"n1", 24.450e6, 3.582e3, 4.726e-3},
        {"n2", 24.534e6, 3.594e3, 4.725e-3},  {"n3", 24.985e6, 3.661e3, 4.750e-3},
        {"n6", 28.110e6, 4.118e3, 4.783e-3},  {"n7", 34.324e6, 5.029e3, 4.952e-3},
        {"n8", 43.902e6, 6.432e3, 5.327e-3},  {"n4", 65.412e6, 9.584e3, 5.895e-3},
        {"n9", 123.026e6, 18.025e3, 6.393e-3},
    };
    return rows;
}

NmrDriveRow nmr_filler_row() {
    return {"filler", 50e6, kAbsorptionRatio * 50e6, 5.421e-3};
}

DeviceModel reference_device() {
    DeviceModel m;
    auto hyperfine = [&](const std::string &label) {
        for (const auto &row : nmr_drive_table()) {
            if (row.nucleus == label) {
                return hyperfine_from_nmr_down(row.f_nmr_hz, m.gamma_n_hz_per_t, m.b_field_t);
            }
        }
        return 0.0;
    };
    RegisterModel r4;
    r4.label = "4P";
    r4.nucleus_labels = {"n1", "n2", "n3", "n4"};
    RegisterModel r5;
    r5.label = "5P";
    r5.nucleus_labels = {"n5", "n6", "n7", "n8", "n9"};
    for (auto *r : {&r4, &r5}) {
        for (const auto &label : r->nucleus_labels) {
            r->hyperfine_hz.push_back(hyperfine(label));
            r->stark_eff_hz_per_v.push_back(label == "n4" ? -1.194e7 : 0.0);
        }
    }
    m.registers = {r4, r5};
    m.exchange_table = {{0.0, 1.55e6}, {0.005, 1.69e6}};
    m.detuning_v = kReferenceDetuningV;
    m.validate();
    return m;
}

NoiseModel reference_noise(const DeviceModel &model) {
    NoiseModel n = NoiseModel::ideal(model);
    const size_t reg5 = model.num_registers() > 1 ? 1 : 0;
    n.drift.collective_sigma_hz.assign(model.num_registers(), 0.9e3);
    if (model.num_registers() > 1) n.drift.collective_sigma_hz[1] = 1.5e3;
    for (size_t s = 0; s < model.num_spins(); ++s) {
        if (!model.is_electron(s) && model.spin_name(s) == "n4") n.drift.nmr_drift_hz_per_hour[s] = 130;
    }
    CorrelatedJumpGroup group;
    for (const char *name : {"n5", "n7", "n8"}) {
        for (size_t s = 0; s < model.num_spins(); ++s) {
            if (model.spin_name(s) == name) group.members.push_back(s);
        }
    }
    if (group.members.size() == 3) {
        group.magnitude_hz = 400;
        group.rate_per_s = 1.0 / 10800;
        n.drift.groups.push_back(group);
    }
    n.tls = {{reg5, 10e3, 1.0 / 120, 1.0 / 120, false}, {reg5, 45e3, 1.0 / 1800, 1.0 / 1800, false}};
    n.readout.electron_read_up = 0.7;
    n.readout.electron_read_down = 0.8;
    n.readout.nuclear_flip_up_to_down = 5e-4;
    n.readout.nuclear_flip_down_to_up = 5e-4;
    n.readout.electron_init_error = 0.01;
    n.readout.nuclear_init_error = 1e-3;
    for (size_t s = 0; s < model.num_spins(); ++s) {
        const bool e = model.is_electron(s);
        n.coherence.t2_star_s[s] = e ? 20e-6 : 10e-3;
        n.coherence.t2_hahn_s[s] = e ? 350e-6 : 100e-3;
        n.load.nmr_on_nmr_hz_per_v2[s] = e ? 0.0 : -2.0e6;
    }
    n.load.esr_on_nmr = {{2e-3, 4e-3, 8e-3}, {-5.0, -12.0, -30.0}};
    n.load.nmr_on_esr = {{4e-3, 8e-3}, {150.0, 500.0}};
    n.load.esr_on_esr = {{4e-3, 8e-3}, {200.0, 700.0}};
    n.validate(model);
    return n;
}

}  // namespace donorsim
