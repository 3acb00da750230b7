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
#include <numbers>
#include <random>

#include "donorsim/circuits.h"
#include "donorsim/device.h"
#include "donorsim/errors.h"
#include "donorsim/pulse_engine.h"

namespace donorsim {
namespace {

constexpr double kPi = std::numbers::pi;

class CircuitsTest : public ::testing::Test {
   protected:
    CircuitsTest() : model(reference_device()), sim(model, enumerate_lines(model)) {
    }
    size_t spin(const char *name) const {
        return model.find_spin(name);
    }
    double fidelity(const Circuit &c, const std::vector<Complex> &target) const {
        const StateVector out = sim.final_state(c, NoiseContext::ideal(model));
        return out.overlap(StateVector::from_amplitudes(target));
    }
    DeviceModel model;
    Simulator sim;
};

TEST_F(CircuitsTest, AllBellVariantsLocalAndNonlocal) {
    const std::pair<const char *, const char *> pairs[] = {{"n6", "n9"}, {"n1", "n3"}, {"n4", "n6"}, {"n2", "n8"}};
    for (auto [a, b] : pairs) {
        for (BellState s : {BellState::kPhiPlus, BellState::kPhiMinus, BellState::kPsiPlus, BellState::kPsiMinus}) {
            const Circuit c = bell_circuit(model, spin(a), spin(b), s);
            EXPECT_NEAR(fidelity(c, bell_target(model, spin(a), spin(b), s)), 1.0, 1e-10)
                << a << " " << b << " " << bell_state_name(s);
        }
    }
}

TEST_F(CircuitsTest, LocalBellStructure) {
    const Circuit c = build_standard_circuit("bell_local", {.qubits = {"n6", "n9"}}, model);
    size_t esr = 0, nmr = 0;
    for (const GateOp &op : c.ops) {
        if (op.kind == OpKind::kEsr) {
            ++esr;
            EXPECT_EQ(op.target(), spin("e2"));
            EXPECT_NEAR(op.angle, 2 * kPi, 0);
        }
        nmr += op.kind == OpKind::kNmr;
    }
    EXPECT_EQ(esr, 1u);
    EXPECT_EQ(nmr, 3u);
    EXPECT_EQ(c.ops[2].kind, OpKind::kEsr);
}

TEST_F(CircuitsTest, ParameterErrors) {
    EXPECT_THROW(build_standard_circuit("bell_nonlocal", {.qubits = {"n6", "n9"}}, model), CircuitError);
    EXPECT_THROW(build_standard_circuit("bell_local", {.qubits = {"n4", "n9"}}, model), CircuitError);
    EXPECT_THROW(build_standard_circuit("bell_local", {.qubits = {"n4"}}, model), CircuitError);
    EXPECT_THROW(build_standard_circuit("teleport", {}, model), CircuitError);
    EXPECT_THROW(build_standard_circuit("ghz", {.qubits = {"n4", "n4"}}, model), CircuitError);
    EXPECT_THROW(build_standard_circuit("ramsey", {.qubits = {"n77"}}, model), CircuitError);
}

TEST_F(CircuitsTest, GhzThreeStructureAndStatistics) {
    Circuit c = build_standard_circuit("ghz", {.n = 3}, model);
    size_t nonlocal_x = 0, two_pi = 0;
    for (const GateOp &op : c.ops) {
        if (op.kind != OpKind::kEsr) continue;
        if (std::abs(op.angle - kPi) < 1e-12) ++nonlocal_x;
        if (std::abs(op.angle - 2 * kPi) < 1e-12) ++two_pi;
    }
    EXPECT_EQ(nonlocal_x, 2u);
    EXPECT_EQ(two_pi, 2u);
    const auto order = default_ghz_order(model, 3);
    for (size_t q : order) c.read_nucleus(q);
    const auto probs = sim.exact_probabilities(c, NoiseContext::ideal(model));
    EXPECT_NEAR(probs.at("000"), 0.5, 1e-12);
    EXPECT_NEAR(probs.at("111"), 0.5, 1e-12);
    double rest = 0;
    for (const auto &[k, v] : probs) {
        if (k != "000" && k != "111") rest += v;
    }
    EXPECT_LT(rest, 1e-12);
}

TEST_F(CircuitsTest, GhzGrowsByConstantBlock) {
    size_t prev = ghz_circuit(model, default_ghz_order(model, 3)).ops.size();
    for (size_t n = 4; n <= 9; ++n) {
        const size_t now = ghz_circuit(model, default_ghz_order(model, n)).ops.size();
        EXPECT_EQ(now - prev, 3u) << n;
        prev = now;
    }
}

TEST_F(CircuitsTest, GhzIdealFidelity) {
    for (size_t n : {2, 4, 6, 9}) {
        const auto order = default_ghz_order(model, n);
        EXPECT_NEAR(fidelity(ghz_circuit(model, order), ghz_target(model, order)), 1.0, 1e-10) << n;
    }
}

TEST_F(CircuitsTest, QndNoiselessIsDeterministicAndNonDemolition) {
    const size_t n = spin("n3");
    const Circuit c = qnd_circuit(model, n, 40, 0, 0);
    for (bool up : {false, true}) {
        RunOptions run;
        run.shots = 3;
        run.initial_state = up ? uint64_t{1} << n : 0;
        run.truth_pattern = {{n, up ? SpinState::kUp : SpinState::kDown}};
        for (const ShotRecord &r : sim.run_shots(c, NoiseContext::ideal(model), run)) {
            EXPECT_EQ(r.tally("up"), up ? 40 : 0);
            EXPECT_EQ(r.tally("down"), up ? 0 : 40);
            EXPECT_NEAR(r.truth_probability, 1.0, 1e-12);
        }
    }
}

TEST_F(CircuitsTest, QndStateModeSeparatesTargetPattern) {
    const Circuit c = qnd_state_circuit(model, 0, 0b0000, 10);
    for (uint64_t init : {uint64_t{0}, uint64_t{1} << spin("n2")}) {
        RunOptions run;
        run.initial_state = init;
        const ShotRecord r = sim.run_shots(c, NoiseContext::ideal(model), run).at(0);
        EXPECT_EQ(r.tally("target"), init == 0 ? 10 : 0);
        EXPECT_EQ(r.tally("other"), init == 0 ? 0 : 10);
    }
}

TEST_F(CircuitsTest, EstReachesTargetAndLeavesCorrectNucleiAlone) {
    uint64_t all_up = 0;
    for (size_t i = 0; i < 4; ++i) all_up |= uint64_t{1} << model.nucleus_spin(0, i);
    std::vector<Control> target;
    for (size_t i = 0; i < 4; ++i) target.push_back({model.nucleus_spin(0, i), SpinState::kDown});
    for (uint64_t init : {all_up, uint64_t{0}, uint64_t{1} << spin("n3")}) {
        RunOptions run;
        run.initial_state = init;
        run.truth_pattern = target;
        const ShotRecord r = sim.run_shots(est_circuit(model, 0, 0, 1), NoiseContext::ideal(model), run).at(0);
        EXPECT_NEAR(r.truth_probability, 1.0, 1e-12);
    }
}

TEST_F(CircuitsTest, RbSequencesRecoverInIdealMode) {
    std::mt19937_64 rng(11);
    struct Case {
        std::vector<const char *> q;
        NativeSet set;
    };
    const Case cases[] = {{{"n5"}, NativeSet::kEuler1q},
                          {{"e1"}, NativeSet::kEuler1q},
                          {{"n6", "n9"}, NativeSet::kNuclearCz2q},
                          {{"n4", "n6"}, NativeSet::kNuclearCz2q},
                          {{"e1", "e2"}, NativeSet::kCrot2q}};
    for (const Case &cs : cases) {
        std::vector<size_t> q;
        for (const char *s : cs.q) q.push_back(spin(s));
        const size_t order = CliffordGroup::get(static_cast<int>(q.size())).size();
        std::uniform_int_distribution<size_t> pick(0, order - 1);
        for (bool up : {false, true}) {
            std::vector<size_t> seq(6);
            for (auto &x : seq) x = pick(rng);
            const Circuit c = rb_sequence_circuit(model, q, seq, cs.set, up);
            const auto probs = sim.exact_probabilities(c, NoiseContext::ideal(model));
            const std::string want(q.size(), up ? '1' : '0');
            EXPECT_NEAR(probs.at(want), 1.0, 1e-9) << cs.q[0] << " up=" << up;
        }
    }
}

TEST_F(CircuitsTest, PhaseCalFringePeaksAtZeroWhenIdeal) {
    for (SpinState branch : {SpinState::kDown, SpinState::kUp}) {
        for (size_t r : {0, 1}) {
            const auto p0 = sim.exact_probabilities(phase_cal_circuit(model, r, branch, 0), NoiseContext::ideal(model));
            const auto pi = sim.exact_probabilities(phase_cal_circuit(model, r, branch, kPi), NoiseContext::ideal(model));
            EXPECT_NEAR(p0.at("1"), 1.0, 1e-10);
            EXPECT_NEAR(pi.count("1") ? pi.at("1") : 0.0, 0.0, 1e-10);
        }
    }
}

TEST_F(CircuitsTest, PhaseCalSeesInjectedControlledPhase) {
    NoiseContext ctx = NoiseContext::ideal(model);
    ctx.crot_phase_error_rad = 0.3;
    const auto p = sim.exact_probabilities(phase_cal_circuit(model, 1, SpinState::kUp, 0.3), ctx);
    EXPECT_NEAR(p.at("1"), 1.0, 1e-10);
}

TEST_F(CircuitsTest, TrackingCircuitsResonantOutcome) {
    const auto p = sim.exact_probabilities(esr_track_circuit(model, 1, 0, 0, 9, 0), NoiseContext::ideal(model));
    EXPECT_NEAR(p.at("1"), 1.0, 1e-10);
    for (bool crot : {false, true}) {
        const auto q = sim.exact_probabilities(j_track_circuit(model, crot, 0, 9, 0, 1 / (2 * 430e3)),
                                               NoiseContext::ideal(model));
        EXPECT_NEAR(q.at(crot ? "11" : "10"), 1.0, 1e-10);
    }
}

TEST_F(CircuitsTest, HahnIdealReturnsDown) {
    for (const char *s : {"e1", "n9"}) {
        const auto p = sim.exact_probabilities(hahn_circuit(model, spin(s), 1e-5), NoiseContext::ideal(model));
        EXPECT_NEAR(p.at("0"), 1.0, 1e-10) << s;
    }
}

}  // namespace
}  // namespace donorsim
