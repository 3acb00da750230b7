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

// Command-line front end: one experiment per invocation, outputs and bundle.json in --out.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "donorsim/errors.h"
#include "donorsim/harness.h"

namespace {

struct Flag {
    std::string name;
    std::string help;
    bool is_switch = false;
};

const std::map<std::string, std::pair<std::string, std::vector<Flag>>> &experiments() {
    static const std::map<std::string, std::pair<std::string, std::vector<Flag>>> table = {
        {"rb",
         {"Randomized benchmarking (reference or interleaved)",
          {{"qubit", "Qubit or comma-separated pair, e.g. n5 or n5,n6 (default n5)"},
           {"interleave", "Interleaved gate: x y z h s x2 y2 id (1Q), cz cnot01 cnot10 id (2Q), or a Clifford index"},
           {"variations", "Random sequences per length"},
           {"max-length", "Drop sequence lengths above this"},
           {"shots", "Shots per sequence and projection"},
           {"bootstrap", "Bootstrap resamples for the fit uncertainties"},
           {"depolarizing", "Extra depolarizing probability per Clifford"},
           {"interleaved-depolarizing", "Extra depolarizing probability on the interleaved gate"}}}},
        {"qst",
         {"Bell-state tomography of a nuclear pair, or a grid campaign",
          {{"pair", "Two nuclei, e.g. n4,n6 (default n4,n6)"},
           {"state", "phi+ phi- psi+ psi- (default phi+)"},
           {"shots", "Shots per setting (default 2000)"},
           {"bootstrap", "Bootstrap resamples (default 200)"},
           {"grid", "local or nonlocal: run every pair instead of --pair"},
           {"exact", "Use exact probabilities instead of sampled counts", true}}}},
        {"ghz",
         {"GHZ preparation and fidelity estimation",
          {{"n", "Size or comma-separated sizes (default 3)"},
           {"shots", "Shots per setting (default 2000)"},
           {"bootstrap", "Bootstrap resamples (default 200)"},
           {"reduced", "Use the N+1 parity settings instead of full tomography", true},
           {"exact", "Use exact probabilities instead of sampled counts", true}}}},
        {"qnd",
         {"Repetitive nuclear readout statistics",
          {{"nucleus", "Nucleus to read (default n5)"},
           {"shots", "Readout repetitions (default: optimum of the error curve)"},
           {"trials", "Monte Carlo trials (default 10000)"},
           {"reject-band", "Post-selection band on |dP| (default 0.2)"}}}},
        {"init",
         {"Electron-steered nuclear initialization",
          {{"register", "Register index (default 0)"},
           {"pattern", "Target pattern, nucleus 1 first, e.g. 0110 (default all 0)"},
           {"repetitions", "Steering rounds (default 1)"},
           {"trials", "Random starting patterns (default 1000)"},
           {"reject-band", "Verification band on dP (default 0.2)"},
           {"qnd-shots", "Verification readout repetitions (default: optimum)"},
           {"verify", "Verify with a QND read and post-select", true}}}},
        {"stability",
         {"Long-running line tracking",
          {{"kind", "esr_ref esr_offsets j_gap nmr (default esr_ref)"},
           {"hours", "Campaign duration in hours"},
           {"duration-s", "Campaign duration in seconds (default 3600)"},
           {"cadence-s", "Seconds between points (default 60)"},
           {"bin-hz", "Histogram bin width (default 1000)"},
           {"exact", "Track lines with exact probabilities instead of sampled shots", true}}}},
        {"calibrate",
         {"Recalibrate the line table and persist it",
          {{"phase-points", "Phase scan points (default 16)"},
           {"exact", "Measure with exact probabilities instead of sampled shots", true},
           {"exchange", "Also measure the exchange coupling", true},
           {"phase", "Also calibrate the CROT phase correction", true}}}},
        {"lines", {"Enumerate ESR and NMR lines of the calibrated table", {}}},
    };
    return table;
}

std::string param_key(std::string name) {
    for (char &c : name) {
        if (c == '-') c = '_';
    }
    return name;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"donorsim: donor spin register simulator"};
    app.require_subcommand(1);

    donorsim::RunManifest manifest;
    uint64_t seed = 0;
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> switches;
    std::map<std::string, CLI::App *> subs;

    for (const auto &[exp, entry] : experiments()) {
        CLI::App *sub = app.add_subcommand(exp, entry.first);
        subs[exp] = sub;
        sub->add_option("--config", manifest.config_path, "Device config JSON (fallback: $DONORSIM_CONFIG, else built-in)");
        sub->add_option("--seed", seed, "Master seed (required)");
        sub->add_option("--out", manifest.out_dir, "Output directory")->required();
        sub->add_option("--caltab", manifest.caltab_path, "Calibration table (default <out>/caltab.json)");
        sub->add_option("--noise-overrides", manifest.noise_overrides, "JSON merge patch for the noise block");
        for (const Flag &f : entry.second) {
            if (f.is_switch) {
                sub->add_flag("--" + f.name, switches[exp][f.name], f.help);
            } else {
                sub->add_option("--" + f.name, values[exp][f.name], f.help);
            }
        }
    }

    std::string bundle_dir, figure, plot_out;
    CLI::App *plot = app.add_subcommand("plotdata", "Emit plot-ready CSV for a figure from a result bundle");
    plot->add_option("--bundle", bundle_dir, "Directory holding bundle.json")->required();
    std::string figures;
    for (const std::string &f : donorsim::plot_figures()) figures += (figures.empty() ? "" : " ") + f;
    plot->add_option("--figure", figure, "One of: " + figures)->required();
    plot->add_option("--out", plot_out, "Output directory (default: the bundle directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (plot->parsed()) {
        try {
            const donorsim::ResultBundle bundle = donorsim::ResultBundle::load(bundle_dir);
            for (const std::string &path :
                 donorsim::emit_plotdata(bundle, bundle_dir, figure, plot_out.empty() ? bundle_dir : plot_out)) {
                std::cout << path << "\n";
            }
            return 0;
        } catch (const std::exception &e) {
            std::cerr << "error: " << e.what() << "\n";
            return donorsim::exit_code_for(e);
        }
    }

    for (const auto &[exp, sub] : subs) {
        if (!sub->parsed()) continue;
        manifest.experiment = exp;
        if (sub->get_option("--seed")->count() > 0) manifest.seed = seed;
        if (manifest.config_path.empty()) {
            if (const char *env = std::getenv("DONORSIM_CONFIG"); env != nullptr) manifest.config_path = env;
        }
        for (const Flag &f : experiments().at(exp).second) {
            if (sub->get_option("--" + f.name)->count() == 0) continue;
            manifest.params[param_key(f.name)] = f.is_switch ? "true" : values[exp][f.name];
        }
    }

    const donorsim::ResultBundle bundle = donorsim::run(manifest);
    if (bundle.exit_code != 0) {
        std::cerr << "error: " << bundle.error << "\n";
    } else {
        for (const auto &[role, name] : bundle.outputs) std::cout << role << "\t" << name << "\n";
    }
    return bundle.exit_code;
}
