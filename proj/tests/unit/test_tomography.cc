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
#include "donorsim/clifford.h"
#include "donorsim/device.h"
#include "donorsim/errors.h"
#include "donorsim/tomography.h"

namespace donorsim {
namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXcd random_density(size_t n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    const auto d = static_cast<Eigen::Index>(size_t{1} << n);
    Eigen::MatrixXcd a(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex(g(rng), g(rng));
    }
    Eigen::MatrixXcd rho = a * a.adjoint();
    return rho / rho.trace().real();
}

Eigen::VectorXcd phi_plus() {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(4);
    v(0) = v(3) = 1 / std::sqrt(2.0);
    return v;
}

size_t physical(const Circuit &c) {
    return c.physical_op_count();
}

TEST(Projection, PrefixesWithoutMerge) {
    const DeviceModel m = reference_device();
    const size_t n = m.find_spin("n5");
    Circuit c;
    EXPECT_EQ(append_projection(c, m, n, Basis::kZ).added_physical, 0u);
    EXPECT_TRUE(c.ops.empty());
    const ProjectionEdit e = append_projection(c, m, n, Basis::kX);
    EXPECT_EQ(e.added_physical, 1u);
    ASSERT_EQ(c.ops.size(), 1u);
    EXPECT_EQ(c.ops[0].kind, OpKind::kNmr);
    EXPECT_DOUBLE_EQ(c.ops[0].angle, -kPi / 2);
    EXPECT_DOUBLE_EQ(c.ops[0].phase, kPi / 2);
    Circuit y;
    append_projection(y, m, n, Basis::kY);
    EXPECT_DOUBLE_EQ(y.ops[0].angle, kPi / 2);
    EXPECT_DOUBLE_EQ(y.ops[0].phase, 0.0);
    EXPECT_THROW(append_projection(y, m, m.electron_spin(0), Basis::kX), CircuitError);
}

TEST(Projection, MergeWithTrailingY2) {
    const DeviceModel m = reference_device();
    const size_t n = m.find_spin("n5");
    Circuit base;
    append_nuclear_rotation(base, m, n, kPi / 2, kPi / 2);

    Circuit x = base;
    const ProjectionEdit ex = append_projection(x, m, n, Basis::kX);
    EXPECT_EQ(ex.removed, 1u);
    EXPECT_EQ(ex.added_physical, 0u);
    EXPECT_EQ(physical(x), 0u);

    Circuit z = base;
    const ProjectionEdit ez = append_projection(z, m, n, Basis::kZ);
    EXPECT_EQ(ez.removed + ez.added_physical, 0u);
    EXPECT_EQ(physical(z), 1u);

    Circuit y = base;
    const ProjectionEdit ey = append_projection(y, m, n, Basis::kY);
    EXPECT_EQ(ey.added_physical, 0u);
    ASSERT_EQ(y.ops.size(), 2u);
    EXPECT_EQ(y.ops[0].kind, OpKind::kVirtualZ);
    EXPECT_DOUBLE_EQ(y.ops[0].angle, -kPi / 2);
    EXPECT_EQ(physical(y), 1u);

    // A later op conditioned on the qubit blocks the merge.
    Circuit blocked = base;
    blocked.esr(m.electron_spin(1), 2 * kPi, 0, {{n, SpinState::kUp}});
    EXPECT_EQ(append_projection(blocked, m, n, Basis::kX).added_physical, 1u);
}

TEST(Projection, MergeIdentityOperator) {
    // Y/2 then X/2 equals VZ(-pi/2) then Y/2 (VZ(a) = logical Rz(-a)).
    const Eigen::MatrixXcd a = sequence_unitary({{PrimitiveKind::kRotation, 0, kPi / 2, kPi / 2},
                                                 {PrimitiveKind::kRotation, 0, kPi / 2, 0}},
                                                1);
    const Eigen::MatrixXcd b = sequence_unitary({{PrimitiveKind::kVirtualZ, 0, -kPi / 2, 0},
                                                 {PrimitiveKind::kRotation, 0, kPi / 2, kPi / 2}},
                                                1);
    EXPECT_LT(phase_insensitive_distance(a, b), 1e-12);
}

TEST(Projection, MergedAndPlainCircuitsAgree) {
    const DeviceModel m = reference_device();
    const size_t q1 = m.find_spin("n6"), q2 = m.find_spin("n9");
    const Circuit bell = bell_circuit(m, q1, q2, BellState::kPhiPlus);
    const Simulator sim(m, enumerate_lines(m));
    TomographySpec spec = TomographySpec::full({q1, q2});
    for (const Setting &s : spec.settings) {
        spec.merge = true;
        const auto merged = sim.exact_probabilities(tomography_circuit(bell, m, spec, s, false), NoiseContext::ideal(m));
        spec.merge = false;
        const auto plain = sim.exact_probabilities(tomography_circuit(bell, m, spec, s, false), NoiseContext::ideal(m));
        for (const auto &[k, p] : plain) {
            EXPECT_NEAR(merged.count(k) ? merged.at(k) : 0.0, p, 1e-12) << s.label() << " " << k;
        }
    }
}

TEST(TomographySpec, SettingCounts) {
    EXPECT_EQ(TomographySpec::full({1, 2}).settings.size(), 9u);
    EXPECT_EQ(TomographySpec::full({1, 2, 3}).settings.size(), 27u);
    const TomographySpec r = TomographySpec::reduced_ghz({1, 2, 3});
    EXPECT_EQ(r.settings.size(), 4u);
    EXPECT_DOUBLE_EQ(r.settings[2].phase, kPi / 3);
    TomographySpec bad = r;
    bad.settings[1].bases.pop_back();
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(Collect, PhiPlusCorrelators) {
    const DeviceModel m = reference_device();
    const size_t q1 = m.find_spin("n1"), q2 = m.find_spin("n4");
    Lab lab(m, NoiseModel::ideal(m), 1);
    const TomographyData d = collect_tomography(lab, bell_circuit(m, q1, q2, BellState::kPhiPlus),
                                                TomographySpec::full({q1, q2}), true);
    ASSERT_EQ(d.probabilities.size(), 9u);
    for (size_t j = 0; j < 9; ++j) {
        const std::string l = d.spec.settings[j].label();
        if (l == "xx" || l == "zz") {
            EXPECT_NEAR(d.probabilities[j].at("00"), 0.5, 1e-12) << l;
            EXPECT_NEAR(d.probabilities[j].at("11"), 0.5, 1e-12) << l;
        }
        if (l == "yy") {
            EXPECT_NEAR(d.probabilities[j].at("01"), 0.5, 1e-12);
            EXPECT_NEAR(d.probabilities[j].at("10"), 0.5, 1e-12);
        }
    }
}

TEST(Reconstruct, EngineExactIsLossless) {
    const DeviceModel m = reference_device();
    const size_t q1 = m.find_spin("n5"), q2 = m.find_spin("n4");
    Lab lab(m, NoiseModel::ideal(m), 2);
    for (BellState s : {BellState::kPhiPlus, BellState::kPsiMinus}) {
        const Circuit c = bell_circuit(m, q1, q2, s);
        const TomographyData d = collect_tomography(lab, c, TomographySpec::full({q1, q2}), true);
        const Eigen::MatrixXcd rho = reconstruct_density_matrix(d);
        const Eigen::MatrixXcd truth = reduced_density_matrix(lab.final_state(c, lab.ideal_context()), {q1, q2});
        EXPECT_LT((rho - truth).norm(), 1e-9);
        EXPECT_NEAR(state_fidelity(rho, restrict_state(bell_target(m, q1, q2, s), {q1, q2})), 1.0, 1e-9);
    }
}

TEST(Reconstruct, RandomStatesAreLossless) {
    for (size_t n : {1, 2, 3}) {
        for (uint64_t seed = 0; seed < 3; ++seed) {
            const Eigen::MatrixXcd rho = random_density(n, seed + 10 * n);
            const TomographySpec spec = TomographySpec::full(std::vector<size_t>(n, 0));
            const Eigen::MatrixXcd r = reconstruct_density_matrix(synthetic_tomography(rho, spec));
            EXPECT_LT((r - rho).norm(), 1e-9) << n;
            EXPECT_LT((r - r.adjoint()).norm(), 1e-9);
            EXPECT_NEAR(r.trace().real(), 1.0, 1e-9);
        }
    }
}

TEST(Reconstruct, MaximallyMixed) {
    const Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(4, 4) / 4.0;
    const Eigen::MatrixXcd r = reconstruct_density_matrix(synthetic_tomography(rho, TomographySpec::full({0, 1})));
    EXPECT_LT((r - rho).norm(), 1e-9);
}

TEST(Reconstruct, MissingSettingsNamed) {
    TomographySpec spec = TomographySpec::full({0, 1});
    spec.settings.erase(spec.settings.begin() + 4);  // "yy"
    const TomographyData d = synthetic_tomography(Eigen::MatrixXcd::Identity(4, 4) / 4.0, spec);
    try {
        reconstruct_density_matrix(d);
        FAIL() << "expected ReconstructionError";
    } catch (const ReconstructionError &e) {
        EXPECT_NE(std::string(e.what()).find("yy"), std::string::npos) << e.what();
    }
}

TEST(Reconstruct, PhysicalProjection) {
    Eigen::MatrixXcd bad = Eigen::MatrixXcd::Zero(2, 2);
    bad(0, 0) = 1.2;
    bad(1, 1) = -0.2;
    const Eigen::MatrixXcd r = project_physical(bad);
    EXPECT_NEAR(r(0, 0).real(), 1.0, 1e-12);
    EXPECT_NEAR(r(1, 1).real(), 0.0, 1e-12);
    // Eigenvalues (0.6, 0.5, -0.1): the negative weight is spread over the other two.
    Eigen::MatrixXcd three = Eigen::MatrixXcd::Zero(3, 3);
    three(0, 0) = 0.6;
    three(1, 1) = 0.5;
    three(2, 2) = -0.1;
    const Eigen::MatrixXcd t = project_physical(three);
    EXPECT_NEAR(t(0, 0).real(), 0.55, 1e-12);
    EXPECT_NEAR(t(1, 1).real(), 0.45, 1e-12);
    EXPECT_NEAR(t(2, 2).real(), 0.0, 1e-12);
}

TEST(StateFidelity, ClosedForms) {
    const Eigen::VectorXcd bell = phi_plus();
    const Eigen::MatrixXcd pure = bell * bell.adjoint();
    EXPECT_NEAR(state_fidelity(pure, bell), 1.0, 1e-12);
    EXPECT_NEAR(state_fidelity(Eigen::MatrixXcd::Identity(4, 4) / 4.0, bell), 0.25, 1e-12);
    EXPECT_NEAR(state_fidelity(0.9 * pure + 0.1 * Eigen::MatrixXcd::Identity(4, 4) / 4.0, bell), 0.925, 1e-12);
    EXPECT_THROW(state_fidelity(pure, ghz_vector(3)), ShapeError);
}

TEST(ReducedGhz, IdealAndDephased) {
    for (size_t n : {2, 3, 5}) {
        const Eigen::VectorXcd g = ghz_vector(n);
        const TomographySpec spec = TomographySpec::reduced_ghz(std::vector<size_t>(n, 0));
        const FidelityEstimate ideal = ghz_fidelity_reduced(synthetic_tomography(g * g.adjoint(), spec));
        EXPECT_NEAR(ideal.fidelity, 1.0, 1e-12) << n;
        EXPECT_TRUE(ideal.entangled);
        Eigen::MatrixXcd deph = (g * g.adjoint()).diagonal().asDiagonal();
        const FidelityEstimate f = ghz_fidelity_reduced(synthetic_tomography(deph, spec));
        EXPECT_NEAR(f.fidelity, 0.5, 1e-12) << n;
        EXPECT_FALSE(f.entangled);
    }
}

TEST(ReducedGhz, MatchesFullTomography) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    const size_t n = 3;
    for (int t = 0; t < 5; ++t) {
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(8, 8);
        const double p0 = u(rng), p1 = u(rng), rest = u(rng) * 0.3;
        rho(0, 0) = p0;
        rho(7, 7) = p1;
        rho(3, 3) = rest;
        const double lim = std::sqrt(p0 * p1);
        const Complex c = std::polar(lim * u(rng), 2 * kPi * u(rng));
        rho(0, 7) = c;
        rho(7, 0) = std::conj(c);
        rho /= rho.trace().real();
        const FidelityEstimate r =
            ghz_fidelity_reduced(synthetic_tomography(rho, TomographySpec::reduced_ghz({0, 1, 2})));
        const double full = state_fidelity(
            reconstruct_density_matrix(synthetic_tomography(rho, TomographySpec::full({0, 1, 2}))), ghz_vector(n));
        EXPECT_NEAR(r.fidelity, full, 1e-9);
    }
    // Also for a generic mixed state.
    const Eigen::MatrixXcd rho = random_density(3, 77);
    EXPECT_NEAR(ghz_fidelity_reduced(synthetic_tomography(rho, TomographySpec::reduced_ghz({0, 1, 2}))).fidelity,
                state_fidelity(rho, ghz_vector(3)), 1e-9);
}

TEST(ReducedGhz, MissingSetting) {
    TomographySpec spec = TomographySpec::reduced_ghz({0, 1, 2});
    spec.settings.pop_back();
    EXPECT_THROW(ghz_fidelity_reduced(synthetic_tomography(Eigen::MatrixXcd::Identity(8, 8) / 8.0, spec)),
                 ReconstructionError);
}

TEST(ReducedGhz, EngineGhz3) {
    const DeviceModel m = reference_device();
    Lab lab(m, NoiseModel::ideal(m), 3);
    const std::vector<size_t> q = default_ghz_order(m, 3);
    const FidelityEstimate f =
        ghz_fidelity_reduced(collect_tomography(lab, ghz_circuit(m, q), TomographySpec::reduced_ghz(q), true));
    EXPECT_NEAR(f.fidelity, 1.0, 1e-9);
}

TEST(Collect, SampledPhiPlus) {
    const DeviceModel m = reference_device();
    const size_t q1 = m.find_spin("n6"), q2 = m.find_spin("n9");
    Lab lab(m, NoiseModel::ideal(m), 4);
    const TomographyData d =
        collect_tomography(lab, bell_circuit(m, q1, q2, BellState::kPhiPlus), TomographySpec::full({q1, q2}));
    ASSERT_EQ(d.counts.size(), 9u);
    for (double a : d.acceptance) EXPECT_EQ(a, 1.0);
    EXPECT_TRUE(d.warnings.empty());
    const FidelityEstimate f = tomography_fidelity(d, phi_plus());
    EXPECT_GE(f.fidelity, 0.995);
    EXPECT_GT(f.sigma, 0.0);
    EXPECT_LT(f.sigma, 0.01);
}

TEST(Collect, PostselectionRejectsBadInit) {
    const DeviceModel m = reference_device();
    NoiseModel n = NoiseModel::ideal(m);
    n.readout.nuclear_init_error = 0.2;
    const size_t q = m.find_spin("n5");
    Lab lab(m, n, 5);
    TomographySpec spec = TomographySpec::full({q});
    spec.shots = 4000;
    spec.min_acceptance = 0.9;
    const Circuit state;
    const TomographyData d = collect_tomography(lab, state, spec);
    ASSERT_EQ(d.acceptance.size(), 3u);
    for (double a : d.acceptance) EXPECT_NEAR(a, 0.8, 0.03);
    EXPECT_EQ(d.warnings.size(), 3u);
    EXPECT_EQ(d.probabilities[2].at("0"), 1.0);  // z
    spec.postselect = false;
    const TomographyData raw = collect_tomography(lab, state, spec);
    EXPECT_NEAR(raw.probabilities[2].at("0"), 0.8, 0.03);
}

}  // namespace
}  // namespace donorsim
