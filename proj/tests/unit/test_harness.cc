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
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "donorsim/errors.h"
#include "donorsim/harness.h"
#include "donorsim/pulse_engine.h"

namespace donorsim {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("donorsim_harness_" + name);
    fs::remove_all(p);
    return p;
}

RunManifest manifest(const std::string &experiment, const fs::path &out, uint64_t seed) {
    RunManifest m;
    m.config_path = std::string(DONORSIM_SOURCE_DIR) + "/configs/device_11q.json";
    m.experiment = experiment;
    m.seed = seed;
    m.out_dir = out.string();
    return m;
}

size_t line_count(const fs::path &p) {
    std::istringstream in(read_text_file(p.string()));
    size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
}

std::vector<std::string> csv_lines(const fs::path &p) {
    std::istringstream in(read_text_file(p.string()));
    std::vector<std::string> out;
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

TEST(Harness, RbSameSeedGivesIdenticalFiles) {
    const fs::path a = scratch("rb_a"), b = scratch("rb_b");
    RunManifest m = manifest("rb", a, 7);
    m.params = {{"qubit", "n5"}, {"variations", "4"}, {"max_length", "50"}, {"shots", "100"}, {"bootstrap", "0"}};
    const ResultBundle ra = run(m);
    m.out_dir = b.string();
    const ResultBundle rb = run(m);
    ASSERT_EQ(ra.exit_code, 0) << ra.error;
    ASSERT_EQ(rb.exit_code, 0) << rb.error;
    EXPECT_EQ(ra.outputs, rb.outputs);
    for (const auto &[role, name] : ra.outputs) {
        EXPECT_EQ(read_text_file((a / name).string()), read_text_file((b / name).string())) << name;
    }
    EXPECT_EQ(csv_lines(a / "rb.csv")[0], "length,F_upper,F_lower,F");
}

TEST(Harness, DifferentSeedChangesCounts) {
    const fs::path a = scratch("seed_a"), b = scratch("seed_b");
    RunManifest m = manifest("qst", a, 1);
    ASSERT_EQ(run(m).exit_code, 0);
    m.seed = 2;
    m.out_dir = b.string();
    ASSERT_EQ(run(m).exit_code, 0);
    EXPECT_NE(read_text_file((a / "counts/zz.csv").string()), read_text_file((b / "counts/zz.csv").string()));
}

TEST(Harness, ReducedGhzThreeWritesFourCountsFiles) {
    const fs::path out = scratch("ghz3");
    RunManifest m = manifest("ghz", out, 1);
    m.params = {{"n", "3"}, {"reduced", "true"}};
    const ResultBundle r = run(m);
    ASSERT_EQ(r.exit_code, 0) << r.error;
    size_t counts = 0;
    for (const auto &entry : fs::directory_iterator(out / "counts" / "n3")) {
        counts += entry.path().extension() == ".csv";
    }
    EXPECT_EQ(counts, 4u);
    EXPECT_TRUE(fs::exists(out / "ghz_fidelity.json"));
    for (const auto &[role, name] : r.outputs) EXPECT_TRUE(fs::exists(out / name)) << name;
}

TEST(Harness, JGapTenHoursAtOnePerMinute) {
    const fs::path out = scratch("jgap");
    RunManifest m = manifest("stability", out, 3);
    m.params = {{"kind", "j_gap"}, {"hours", "10"}, {"exact", "true"}};
    const ResultBundle r = run(m);
    ASSERT_EQ(r.exit_code, 0) << r.error;
    EXPECT_EQ(line_count(out / "stability.csv"), 600u + 1);
    const auto rows = csv_lines(out / "stability.csv");
    const auto value = [](const std::string &row) { return row.substr(row.rfind(',') + 1); };
    for (size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(value(rows[i]), value(rows[1])) << rows[i];
}

TEST(Harness, MissingSeedIsConfigError) {
    const fs::path out = scratch("noseed");
    RunManifest m = manifest("lines", out, 0);
    m.seed.reset();
    const ResultBundle r = run(m);
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.error.find("seed"), std::string::npos);
    EXPECT_EQ(ResultBundle::load(out.string()).exit_code, 2);
}

TEST(Harness, BadParameterIsConfigError) {
    const fs::path out = scratch("badparam");
    RunManifest m = manifest("rb", out, 1);
    m.params = {{"shots", "-3"}};
    EXPECT_EQ(run(m).exit_code, 2);
    m.params = {{"qubit", "n42"}};
    EXPECT_EQ(run(m).exit_code, 2);
    m.experiment = "teleport";
    EXPECT_EQ(run(m).exit_code, 2);
    m = manifest("lines", out, 1);
    m.config_path = (out / "missing.json").string();
    EXPECT_EQ(run(m).exit_code, 2);
}

TEST(Harness, ExitCodes) {
    EXPECT_EQ(exit_code_for(ConfigError("x", "y")), 2);
    EXPECT_EQ(exit_code_for(CalibrationLost("lost")), 4);
    EXPECT_EQ(exit_code_for(DomainError("d")), 3);
    EXPECT_EQ(exit_code_for(std::runtime_error("r")), 3);
}

TEST(Harness, BundleRoundTripAndSchema) {
    const fs::path out = scratch("bundle");
    RunManifest m = manifest("lines", out, 11);
    m.params = {{"a", "b"}};
    const ResultBundle r = run(m);
    ASSERT_EQ(r.exit_code, 0) << r.error;
    const ResultBundle back = ResultBundle::load(out.string());
    EXPECT_EQ(back.schema_version, kBundleSchemaVersion);
    EXPECT_EQ(kBundleSchemaVersion, 1);
    EXPECT_EQ(back.outputs, r.outputs);
    EXPECT_EQ(back.manifest.seed, r.manifest.seed);
    EXPECT_EQ(back.manifest.params, r.manifest.params);
    EXPECT_EQ(back.to_json(), r.to_json());
    EXPECT_NE(read_text_file((out / "lines.json").string()).find("\"schema_version\": 1"), std::string::npos);
    EXPECT_THROW(ResultBundle::from_json("{\"schema_version\": 99}"), ConfigError);
}

TEST(Harness, CalibrateWritesCaltabAndDeletingResets) {
    const fs::path out = scratch("cal");
    const ResultBundle r = run(manifest("calibrate", out, 5));
    ASSERT_EQ(r.exit_code, 0) << r.error;
    ASSERT_TRUE(fs::exists(out / "caltab.json"));
    EXPECT_EQ(r.outputs.at("caltab"), "caltab.json");
    // A lines run reads the persisted table.
    ASSERT_EQ(run(manifest("lines", out, 5)).exit_code, 0);
    const std::string with_table = read_text_file((out / "lines.csv").string());
    fs::remove(out / "caltab.json");
    ASSERT_EQ(run(manifest("lines", out, 5)).exit_code, 0);
    const std::string fresh = read_text_file((out / "lines.csv").string());
    EXPECT_NE(with_table, fresh);
}

TEST(PlotData, BellGridEmptyCampaignIsHeaderOnly) {
    const fs::path out = scratch("grid_empty");
    RunManifest m = manifest("qst", out, 1);
    m.params = {{"grid", "none"}};
    const ResultBundle r = run(m);
    ASSERT_EQ(r.exit_code, 0) << r.error;
    const auto files = emit_plotdata(r, out.string(), "fig3_bell_grid", (out / "plot").string());
    ASSERT_EQ(files.size(), 1u);
    EXPECT_EQ(read_text_file(files[0]), "nucleus_4P,nucleus_5P,fidelity,sigma\n");
}

TEST(PlotData, NonlocalBellGridHasTwentyRows) {
    const fs::path out = scratch("grid_nonlocal");
    RunManifest m = manifest("qst", out, 1);
    m.params = {{"grid", "nonlocal"}, {"exact", "true"}};
    const ResultBundle r = run(m);
    ASSERT_EQ(r.exit_code, 0) << r.error;
    const auto files = emit_plotdata(r, out.string(), "fig3_bell_grid", (out / "plot").string());
    EXPECT_EQ(line_count(files[0]), 20u + 1);
}

TEST(PlotData, MismatchedBundleIsDescriptive) {
    const fs::path out = scratch("mismatch");
    const ResultBundle r = run(manifest("lines", out, 1));
    try {
        emit_plotdata(r, out.string(), "fig2_rb", (out / "plot").string());
        FAIL() << "no error";
    } catch (const DomainError &e) {
        EXPECT_NE(std::string(e.what()).find("lines"), std::string::npos);
    }
    EXPECT_THROW(emit_plotdata(r, out.string(), "fig9", (out / "plot").string()), DomainError);
}

TEST(PlotData, FigS8MinimaAreNodesOfTheCurve) {
    const fs::path out = scratch("s8");
    const ResultBundle r = run(manifest("lines", out, 1));
    const auto files = emit_plotdata(r, out.string(), "figS8", (out / "plot").string());
    ASSERT_EQ(files.size(), 2u);
    const Config cfg = manifest_config(r.manifest);
    const double df = cfg.device.exchange_hz();
    const auto rows = csv_lines(files[1]);
    ASSERT_EQ(rows[0], "rotation,n,f_rabi_Hz");
    ASSERT_GT(rows.size(), 2u);
    for (size_t i = 1; i < rows.size(); ++i) {
        std::stringstream ss(rows[i]);
        std::string rot, n, f;
        std::getline(ss, rot, ',');
        std::getline(ss, n, ',');
        std::getline(ss, f, ',');
        const double fr = std::stod(f);
        // Independent node condition: generalized Rabi frequency times duration is an integer.
        const double t = rot == "pi" ? 1 / (2 * fr) : 1 / (4 * fr);
        EXPECT_NEAR(std::sqrt(fr * fr + df * df) * t, std::stod(n), 1e-6) << rows[i];
        EXPECT_LT(spin_flip_probability(fr, df, t), 1e-10) << rows[i];
    }
}

}  // namespace
}  // namespace donorsim
