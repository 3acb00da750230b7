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

#include "donorsim/circuits.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "donorsim/errors.h"

namespace donorsim {

namespace {

constexpr double kPi = std::numbers::pi;

SpinRef nucleus_ref(const DeviceModel &model, size_t spin) {
    const SpinRef r = model.spin_ref(spin);
    if (r.kind != SpinKind::kNucleus) throw CircuitError(model.spin_name(spin) + " is not a nucleus");
    return r;
}

size_t other_electron(const DeviceModel &model, size_t register_index) {
    if (model.num_registers() < 2) throw CircuitError("operation needs two registers");
    return model.electron_spin(1 - register_index);
}

/// Conditions fixing every nucleus of a register: members of `up` up, the rest down.
std::vector<Control> register_pattern(const DeviceModel &model, size_t register_index,
                                      const std::vector<size_t> &up) {
    std::vector<Control> out;
    for (size_t i = 0; i < model.num_nuclei(register_index); ++i) {
        const size_t s = model.nucleus_spin(register_index, i);
        const bool is_up = std::find(up.begin(), up.end(), s) != up.end();
        out.push_back({s, is_up ? SpinState::kUp : SpinState::kDown});
    }
    return out;
}

std::vector<Control> pattern_conditions(const DeviceModel &model, size_t register_index, uint32_t pattern) {
    std::vector<Control> out;
    for (size_t i = 0; i < model.num_nuclei(register_index); ++i) {
        out.push_back({model.nucleus_spin(register_index, i), (pattern >> i) & 1 ? SpinState::kUp : SpinState::kDown});
    }
    return out;
}

void add(std::vector<Control> &c, size_t spin, SpinState s) {
    c.push_back({spin, s});
}

/// Electron rotation with the register's nuclei all down and, when the device has a second
/// register, the other electron unconstrained (both exchange branches in one slice).
void electron_rotation(Circuit &c, const DeviceModel &model, size_t electron, double angle, double phase) {
    const SpinRef r = model.spin_ref(electron);
    c.esr(electron, angle, phase, register_pattern(model, r.register_index, {}));
}

void readout(Circuit &c, const DeviceModel &model, size_t spin) {
    if (model.is_electron(spin)) {
        c.measure_electron(spin);
    } else {
        c.read_nucleus(spin);
    }
}

void rotation_on(Circuit &c, const DeviceModel &model, size_t spin, double angle, double phase) {
    if (model.is_electron(spin)) {
        electron_rotation(c, model, spin, angle, phase);
    } else {
        append_nuclear_rotation(c, model, spin, angle, phase);
    }
}

std::vector<Complex> basis_superposition(size_t dim, const std::vector<std::pair<uint64_t, Complex>> &terms) {
    std::vector<Complex> v(dim, Complex(0, 0));
    for (const auto &[idx, amp] : terms) v[idx] += amp;
    return v;
}

}  // namespace

const char *bell_state_name(BellState s) {
    switch (s) {
        case BellState::kPhiPlus:
            return "phi+";
        case BellState::kPhiMinus:
            return "phi-";
        case BellState::kPsiPlus:
            return "psi+";
        case BellState::kPsiMinus:
            return "psi-";
    }
    return "?";
}

BellState parse_bell_state(const std::string &name) {
    for (BellState s : {BellState::kPhiPlus, BellState::kPhiMinus, BellState::kPsiPlus, BellState::kPsiMinus}) {
        if (name == bell_state_name(s)) return s;
    }
    throw CircuitError("unknown Bell state '" + name + "'");
}

std::vector<Complex> bell_target(const DeviceModel &model, size_t q1, size_t q2, BellState s) {
    const size_t dim = size_t{1} << model.num_spins();
    const uint64_t b1 = uint64_t{1} << q1, b2 = uint64_t{1} << q2;
    const double h = 1 / std::sqrt(2.0);
    switch (s) {
        case BellState::kPhiPlus:
            return basis_superposition(dim, {{0, h}, {b1 | b2, h}});
        case BellState::kPhiMinus:
            return basis_superposition(dim, {{0, h}, {b1 | b2, -h}});
        case BellState::kPsiPlus:
            return basis_superposition(dim, {{b2, h}, {b1, h}});
        case BellState::kPsiMinus:
            return basis_superposition(dim, {{b2, h}, {b1, -h}});
    }
    return {};
}

std::vector<Complex> ghz_target(const DeviceModel &model, const std::vector<size_t> &qubits) {
    uint64_t all = 0;
    for (size_t q : qubits) all |= uint64_t{1} << q;
    const double h = 1 / std::sqrt(2.0);
    return basis_superposition(size_t{1} << model.num_spins(), {{0, h}, {all, h}});
}

void append_nuclear_rotation(Circuit &c, const DeviceModel &model, size_t nucleus, double angle, double phase) {
    const SpinRef r = nucleus_ref(model, nucleus);
    c.nmr(nucleus, angle, phase, {{model.electron_spin(r.register_index), SpinState::kDown}});
}

void append_cz(Circuit &c, const DeviceModel &model, size_t a, size_t b, const std::vector<size_t> &up_a,
               const std::vector<size_t> &up_b) {
    const SpinRef ra = nucleus_ref(model, a);
    const SpinRef rb = nucleus_ref(model, b);
    if (a == b) throw CircuitError("CZ needs two distinct nuclei");
    if (ra.register_index == rb.register_index) {
        const size_t r = ra.register_index;
        std::vector<size_t> up = {a, b};
        for (size_t s : up_a) up.push_back(s);
        for (size_t s : up_b) up.push_back(s);
        auto cond = register_pattern(model, r, up);
        if (model.num_registers() > 1) add(cond, other_electron(model, r), SpinState::kDown);
        c.esr(model.electron_spin(r), 2 * kPi, 0, std::move(cond));
        return;
    }
    std::vector<size_t> side_a = {a}, side_b = {b};
    for (size_t s : up_a) side_a.push_back(s);
    for (size_t s : up_b) side_b.push_back(s);
    const size_t ea = model.electron_spin(ra.register_index);
    const size_t eb = model.electron_spin(rb.register_index);
    auto cond_a = register_pattern(model, ra.register_index, side_a);
    add(cond_a, eb, SpinState::kDown);
    auto cond_b = register_pattern(model, rb.register_index, side_b);
    add(cond_b, ea, SpinState::kUp);
    c.esr(ea, kPi, 0, cond_a);
    c.esr(eb, 2 * kPi, 0, cond_b);
    c.esr(ea, kPi, kPi, cond_a);
}

Circuit bell_circuit(const DeviceModel &model, size_t q1, size_t q2, BellState s) {
    nucleus_ref(model, q1);
    nucleus_ref(model, q2);
    if (q1 == q2) throw CircuitError("Bell pair needs two distinct nuclei");
    const bool root_plus = s == BellState::kPhiPlus || s == BellState::kPsiPlus;
    const bool leaf_plus = s == BellState::kPsiPlus || s == BellState::kPsiMinus;
    Circuit c(std::string("bell_") + bell_state_name(s) + "_" + model.spin_name(q1) + "_" + model.spin_name(q2));
    append_nuclear_rotation(c, model, q1, root_plus ? kPi / 2 : -kPi / 2, kPi / 2);
    append_nuclear_rotation(c, model, q2, leaf_plus ? kPi / 2 : -kPi / 2, kPi / 2);
    append_cz(c, model, q1, q2);
    append_nuclear_rotation(c, model, q2, kPi / 2, kPi / 2);
    return c;
}

std::vector<size_t> default_ghz_order(const DeviceModel &model, size_t n) {
    static const char *kOrder[] = {"n4", "n6", "n9", "n5", "n1", "n7", "n2", "n8", "n3"};
    if (n < 2 || n > std::size(kOrder)) throw CircuitError("GHZ size must be in [2, 9]");
    std::vector<size_t> out;
    for (size_t i = 0; i < n; ++i) out.push_back(model.find_spin(kOrder[i]));
    return out;
}

Circuit ghz_circuit(const DeviceModel &model, const std::vector<size_t> &order) {
    if (order.size() < 2) throw CircuitError("GHZ needs at least two nuclei");
    for (size_t i = 0; i < order.size(); ++i) {
        nucleus_ref(model, order[i]);
        for (size_t j = 0; j < i; ++j) {
            if (order[i] == order[j]) throw CircuitError("GHZ order repeats " + model.spin_name(order[i]));
        }
    }
    Circuit c("ghz" + std::to_string(order.size()));
    append_nuclear_rotation(c, model, order[0], kPi / 2, kPi / 2);
    std::vector<size_t> members = {order[0]};
    for (size_t i = 1; i < order.size(); ++i) {
        const size_t q = order[i];
        const size_t rq = model.spin_ref(q).register_index;
        std::vector<size_t> local, remote;
        for (size_t m : members) (model.spin_ref(m).register_index == rq ? local : remote).push_back(m);
        append_nuclear_rotation(c, model, q, -kPi / 2, kPi / 2);
        if (!local.empty()) {
            std::vector<size_t> rest(local.begin() + 1, local.end());
            append_cz(c, model, local[0], q, rest, {});
        } else {
            std::vector<size_t> rest(remote.begin() + 1, remote.end());
            append_cz(c, model, remote[0], q, rest, {});
        }
        append_nuclear_rotation(c, model, q, kPi / 2, kPi / 2);
        members.push_back(q);
    }
    return c;
}

Circuit ramsey_circuit(const DeviceModel &model, size_t target, double tau_s, double detuning_hz) {
    if (!(tau_s >= 0)) throw CircuitError("Ramsey delay must be non-negative");
    Circuit c("ramsey_" + model.spin_name(target));
    rotation_on(c, model, target, kPi / 2, 0);
    c.ops.back().detuning_hz = detuning_hz;
    c.idle(tau_s);
    rotation_on(c, model, target, kPi / 2, 0);
    c.ops.back().detuning_hz = detuning_hz;
    readout(c, model, target);
    return c;
}

Circuit hahn_circuit(const DeviceModel &model, size_t target, double tau_s) {
    if (!(tau_s >= 0)) throw CircuitError("echo delay must be non-negative");
    Circuit c("hahn_" + model.spin_name(target));
    rotation_on(c, model, target, kPi / 2, 0);
    c.idle(tau_s);
    rotation_on(c, model, target, kPi, 0);
    c.idle(tau_s);
    rotation_on(c, model, target, kPi / 2, 0);
    readout(c, model, target);
    return c;
}

Circuit qnd_circuit(const DeviceModel &model, size_t nucleus, size_t cycles, double p_flip_up_to_down,
                    double p_flip_down_to_up, bool outputs) {
    const SpinRef r = nucleus_ref(model, nucleus);
    if (cycles == 0) throw CircuitError("QND readout needs at least one cycle");
    const size_t e = model.electron_spin(r.register_index);
    Circuit c("qnd_" + model.spin_name(nucleus));
    for (SpinState s : {SpinState::kDown, SpinState::kUp}) {
        std::vector<Control> cond = {{nucleus, s}};
        if (model.num_registers() > 1) add(cond, other_electron(model, r.register_index), SpinState::kDown);
        c.init_electron(e);
        c.esr(e, kPi, 0, std::move(cond));
        c.measure_electron(e, outputs, s == SpinState::kUp ? "up" : "down");
    }
    if (p_flip_up_to_down > 0 || p_flip_down_to_up > 0) c.nuclear_flip(nucleus, p_flip_up_to_down, p_flip_down_to_up);
    if (cycles > 1) c.repeat(0, c.ops.size(), cycles, "qnd");
    return c;
}

Circuit qnd_state_circuit(const DeviceModel &model, size_t register_index, uint32_t pattern, size_t cycles,
                          bool outputs) {
    if (register_index >= model.num_registers()) throw CircuitError("register index out of range");
    const size_t k = model.num_nuclei(register_index);
    if (pattern >> k) throw CircuitError("pattern has bits beyond the register");
    if (cycles == 0) throw CircuitError("QND readout needs at least one cycle");
    const size_t e = model.electron_spin(register_index);
    auto with_other = [&](std::vector<Control> cond) {
        if (model.num_registers() > 1) add(cond, other_electron(model, register_index), SpinState::kDown);
        return cond;
    };
    Circuit c("qnd_state_r" + std::to_string(register_index));
    c.init_electron(e);
    c.esr(e, kPi, 0, with_other(pattern_conditions(model, register_index, pattern)));
    c.measure_electron(e, outputs, "target");
    c.init_electron(e);
    for (uint32_t p = 0; p < (uint32_t{1} << k); ++p) {
        if (p == pattern) continue;
        c.esr(e, kPi, 0, with_other(pattern_conditions(model, register_index, p)));
    }
    c.measure_electron(e, outputs, "other");
    if (cycles > 1) c.repeat(0, c.ops.size(), cycles, "qnd_state");
    return c;
}

Circuit est_circuit(const DeviceModel &model, size_t register_index, uint32_t pattern, size_t repetitions) {
    if (register_index >= model.num_registers()) throw CircuitError("register index out of range");
    const size_t k = model.num_nuclei(register_index);
    if (pattern >> k) throw CircuitError("pattern has bits beyond the register");
    if (repetitions < 1 || repetitions > 3) throw CircuitError("EST repetitions must be in [1, 3]");
    const size_t e = model.electron_spin(register_index);
    Circuit c("est_r" + std::to_string(register_index));
    for (size_t rep = 0; rep < repetitions; ++rep) {
        for (size_t i = 0; i < k; ++i) {
            const size_t n = model.nucleus_spin(register_index, i);
            const SpinState wrong = (pattern >> i) & 1 ? SpinState::kDown : SpinState::kUp;
            std::vector<Control> cond = {{n, wrong}};
            if (model.num_registers() > 1) add(cond, other_electron(model, register_index), SpinState::kDown);
            c.init_electron(e);
            c.esr(e, kPi, 0, std::move(cond));
            c.nmr(n, kPi, 0, {{e, SpinState::kUp}});
        }
    }
    c.init_electron(e);
    return c;
}

Circuit esr_track_circuit(const DeviceModel &model, size_t register_index, uint32_t pattern, double detuning_hz,
                          size_t rotations, double f_rabi_hz) {
    if (register_index >= model.num_registers()) throw CircuitError("register index out of range");
    if (rotations == 0 || rotations % 2 == 0) throw CircuitError("tracking needs an odd rotation count");
    const size_t e = model.electron_spin(register_index);
    auto cond = pattern_conditions(model, register_index, pattern);
    if (model.num_registers() > 1) add(cond, other_electron(model, register_index), SpinState::kDown);
    Circuit c("esr_track_r" + std::to_string(register_index));
    c.init_electron(e);
    for (size_t i = 0; i < rotations; ++i) {
        c.esr(e, kPi, 0, cond);
        c.ops.back().detuning_hz = detuning_hz;
        c.ops.back().f_rabi_hz = f_rabi_hz;
    }
    c.measure_electron(e);
    return c;
}

Circuit j_track_circuit(const DeviceModel &model, bool crot_branch, double detuning_hz, size_t rotations,
                        double f_rabi_hz, double control_pi_s) {
    if (model.num_registers() != 2) throw CircuitError("exchange tracking needs two registers");
    if (rotations == 0 || rotations % 2 == 0) throw CircuitError("tracking needs an odd rotation count");
    const size_t e1 = model.electron_spin(0), e2 = model.electron_spin(1);
    Circuit c(crot_branch ? "j_track_crot" : "j_track_zcrot");
    c.init_electron(e1);
    c.init_electron(e2);
    if (crot_branch) {
        auto cond = register_pattern(model, 0, {});
        add(cond, e2, SpinState::kDown);
        c.esr(e1, kPi, 0, std::move(cond));
    } else {
        c.idle(control_pi_s);
    }
    auto cond = register_pattern(model, 1, {});
    add(cond, e1, crot_branch ? SpinState::kUp : SpinState::kDown);
    for (size_t i = 0; i < rotations; ++i) {
        c.esr(e2, kPi, 0, cond);
        c.ops.back().detuning_hz = detuning_hz;
        c.ops.back().f_rabi_hz = f_rabi_hz;
    }
    c.measure_electron(e2);
    c.measure_electron(e1);
    return c;
}

Circuit phase_cal_circuit(const DeviceModel &model, size_t register_index, SpinState branch, double phase) {
    if (model.num_registers() != 2) throw CircuitError("phase calibration needs two registers");
    if (register_index >= 2) throw CircuitError("register index out of range");
    const size_t e = model.electron_spin(register_index);
    const size_t o = other_electron(model, register_index);
    const SpinState probe = flipped(branch);
    Circuit c("phase_cal_r" + std::to_string(register_index) + (branch == SpinState::kUp ? "_crot" : "_zcrot"));
    if (probe == SpinState::kUp) {
        auto cond = register_pattern(model, 1 - register_index, {});
        add(cond, e, SpinState::kDown);
        c.esr(o, kPi, 0, std::move(cond));
    }
    auto probe_cond = register_pattern(model, register_index, {});
    add(probe_cond, o, probe);
    auto gate_cond = register_pattern(model, register_index, {});
    add(gate_cond, o, branch);
    c.esr(e, kPi / 2, 0, probe_cond);
    c.esr(e, kPi, 0, gate_cond);
    c.esr(e, kPi / 2, phase, probe_cond);
    c.measure_electron(e);
    return c;
}

void append_primitives(Circuit &c, const DeviceModel &model, const std::vector<size_t> &qubits,
                       const std::vector<Primitive> &seq) {
    for (const Primitive &p : seq) {
        const size_t q = qubits.at(static_cast<size_t>(p.qubit));
        switch (p.kind) {
            case PrimitiveKind::kVirtualZ:
                c.virtual_z(q, p.angle);
                break;
            case PrimitiveKind::kRotation:
                rotation_on(c, model, q, p.angle, p.phase);
                break;
            case PrimitiveKind::kCz:
                append_cz(c, model, qubits.at(0), qubits.at(1));
                break;
            case PrimitiveKind::kCrot: {
                if (!model.is_electron(q)) throw CircuitError("CROT target must be an electron");
                const size_t ctl = qubits.at(static_cast<size_t>(p.control));
                if (!model.is_electron(ctl)) throw CircuitError("CROT control must be an electron");
                auto cond = register_pattern(model, model.spin_ref(q).register_index, {});
                add(cond, ctl, p.control_state ? SpinState::kUp : SpinState::kDown);
                c.esr(q, kPi, 0, std::move(cond));
                break;
            }
        }
    }
}

Circuit rb_sequence_circuit(const DeviceModel &model, const std::vector<size_t> &qubits,
                            const std::vector<size_t> &cliffords, NativeSet set, bool recovery_up,
                            double depolarizing, int interleaved, double interleaved_depolarizing) {
    const int nq = static_cast<int>(qubits.size());
    if (nq < 1 || nq > 2) throw CircuitError("RB acts on one or two qubits");
    if ((nq == 1) != (set == NativeSet::kEuler1q)) throw CircuitError("native set does not match qubit count");
    for (size_t q : qubits) model.spin_ref(q);
    if (nq == 2 && qubits[0] == qubits[1]) throw CircuitError("RB qubits must differ");
    const CliffordGroup &g = CliffordGroup::get(nq);
    Circuit c("rb");
    size_t total = g.identity();
    auto noise = [&](double p) {
        if (p < 1) c.depolarize(qubits, p);
    };
    for (size_t idx : cliffords) {
        if (idx >= g.size()) throw CircuitError("Clifford index out of range");
        append_primitives(c, model, qubits, g.decomposition(idx, set));
        noise(depolarizing);
        total = g.compose(total, idx);
        if (interleaved >= 0) {
            const size_t t = static_cast<size_t>(interleaved);
            if (t >= g.size()) throw CircuitError("interleaved Clifford index out of range");
            append_primitives(c, model, qubits, g.decomposition(t, set));
            noise(interleaved_depolarizing);
            total = g.compose(total, t);
        }
    }
    append_primitives(c, model, qubits, g.decomposition(g.inverse(total), set));
    if (recovery_up) {
        for (size_t q : qubits) rotation_on(c, model, q, kPi, 0);
    }
    for (size_t q : qubits) readout(c, model, q);
    return c;
}

Circuit build_standard_circuit(const std::string &kind, const StandardCircuitParams &p, const DeviceModel &model) {
    std::vector<size_t> q;
    for (const auto &name : p.qubits) {
        try {
            q.push_back(model.find_spin(name));
        } catch (const ShapeError &) {
            throw CircuitError("unknown qubit '" + name + "'");
        }
    }
    auto need = [&](size_t n) {
        if (q.size() != n) throw CircuitError(kind + " needs " + std::to_string(n) + " qubit(s)");
    };
    if (kind == "bell_local" || kind == "bell_nonlocal") {
        need(2);
        const bool same = model.spin_ref(q[0]).register_index == model.spin_ref(q[1]).register_index;
        if (kind == "bell_local" && !same) throw CircuitError("bell_local pair spans two registers");
        if (kind == "bell_nonlocal" && same) throw CircuitError("bell_nonlocal pair lies within one register");
        return bell_circuit(model, q[0], q[1], p.bell);
    }
    if (kind == "ghz") {
        if (!q.empty()) return ghz_circuit(model, q);
        return ghz_circuit(model, default_ghz_order(model, p.n));
    }
    if (kind == "ramsey") {
        need(1);
        return ramsey_circuit(model, q[0], p.tau_s, p.detuning_hz);
    }
    if (kind == "hahn") {
        need(1);
        return hahn_circuit(model, q[0], p.tau_s);
    }
    if (kind == "rb_sequence") {
        if (q.size() == 1) return rb_sequence_circuit(model, q, p.cliffords, NativeSet::kEuler1q, p.crot_branch);
        need(2);
        const NativeSet set = model.is_electron(q[0]) ? NativeSet::kCrot2q : NativeSet::kNuclearCz2q;
        return rb_sequence_circuit(model, q, p.cliffords, set, p.crot_branch);
    }
    if (kind == "qnd_read") {
        if (q.empty()) return qnd_state_circuit(model, p.register_index, p.pattern, p.cycles);
        need(1);
        return qnd_circuit(model, q[0], p.cycles, 0, 0);
    }
    if (kind == "est_init") return est_circuit(model, p.register_index, p.pattern, p.repetitions);
    if (kind == "esr_track") {
        return esr_track_circuit(model, p.register_index, p.pattern, p.detuning_hz, p.rotations, p.f_rabi_hz);
    }
    if (kind == "j_track") {
        return j_track_circuit(model, p.crot_branch, p.detuning_hz, p.rotations, p.f_rabi_hz, p.control_pi_s);
    }
    if (kind == "phase_cal") {
        return phase_cal_circuit(model, p.register_index, p.crot_branch ? SpinState::kUp : SpinState::kDown,
                                 p.phase);
    }
    throw CircuitError("unknown circuit kind '" + kind + "'");
}

}  // namespace donorsim
