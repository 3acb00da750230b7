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

#include "donorsim/noise.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "donorsim/errors.h"

namespace donorsim {

double ShiftCurve::eval(double amplitude) const {
    if (amplitude < 0) {
        throw DomainError("negative drive amplitude");
    }
    if (amplitude == 0) {
        return 0.0;
    }
    double x0 = 0;
    double y0 = 0;
    for (size_t i = 0; i < amplitude_v.size(); ++i) {
        if (amplitude <= amplitude_v[i]) {
            const double w = (amplitude - x0) / (amplitude_v[i] - x0);
            return y0 + w * (shift_hz[i] - y0);
        }
        x0 = amplitude_v[i];
        y0 = shift_hz[i];
    }
    throw RangeError("amplitude " + std::to_string(amplitude) + " V outside the tabulated shift curve");
}

NoiseModel NoiseModel::ideal(const DeviceModel &model) {
    NoiseModel n;
    n.drift.collective_sigma_hz.assign(model.num_registers(), 0.0);
    n.drift.nmr_drift_hz_per_hour.assign(model.num_spins(), 0.0);
    n.load.nmr_on_nmr_hz_per_v2.assign(model.num_spins(), 0.0);
    n.readout.electron_read_up = 1;
    n.readout.electron_read_down = 1;
    n.readout.nuclear_flip_up_to_down = 0;
    n.readout.nuclear_flip_down_to_up = 0;
    n.readout.electron_init_error = 0;
    n.readout.nuclear_init_error = 0;
    n.coherence.t2_star_s.assign(model.num_spins(), 0.0);
    n.coherence.t2_hahn_s.assign(model.num_spins(), 0.0);
    return n;
}

void NoiseModel::validate(const DeviceModel &model) const {
    auto prob = [](double p, const char *field) {
        if (!(p >= 0 && p <= 1)) {
            throw ConfigError(field, "must be a probability in [0, 1]");
        }
    };
    if (drift.collective_sigma_hz.size() != model.num_registers()) {
        throw ConfigError("noise.drift.collective_sigma_Hz", "needs one entry per register");
    }
    for (double s : drift.collective_sigma_hz) {
        if (!(s >= 0)) throw ConfigError("noise.drift.collective_sigma_Hz", "must be >= 0");
    }
    if (drift.nmr_drift_hz_per_hour.size() != model.num_spins()) {
        throw ConfigError("noise.drift.nmr_drift_Hz_per_hour", "needs one entry per spin");
    }
    if (!(drift.exchange_sigma_hz >= 0)) {
        throw ConfigError("noise.drift.exchange_sigma_Hz", "must be >= 0");
    }
    for (size_t g = 0; g < drift.groups.size(); ++g) {
        const auto &grp = drift.groups[g];
        const std::string field = "noise.drift.groups[" + std::to_string(g) + "]";
        if (grp.members.empty()) throw ConfigError(field, "group has no members");
        size_t reg = 0;
        for (size_t m = 0; m < grp.members.size(); ++m) {
            if (grp.members[m] >= model.num_spins() || model.is_electron(grp.members[m])) {
                throw ConfigError(field + ".members", "members must be nuclei");
            }
            const size_t r = model.spin_ref(grp.members[m]).register_index;
            if (m > 0 && r != reg) throw ConfigError(field + ".members", "members must share one register");
            reg = r;
        }
        if (!(grp.magnitude_hz >= 0) || !(grp.rate_per_s >= 0)) {
            throw ConfigError(field, "magnitude and rate must be >= 0");
        }
    }
    for (size_t i = 0; i < tls.size(); ++i) {
        const std::string field = "noise.tls[" + std::to_string(i) + "]";
        if (tls[i].register_index >= model.num_registers()) throw ConfigError(field + ".register", "no such register");
        if (!(tls[i].amplitude_hz >= 0)) throw ConfigError(field + ".amplitude_Hz", "must be >= 0");
        if (!(tls[i].rate_up_per_s >= 0) || !(tls[i].rate_down_per_s >= 0)) {
            throw ConfigError(field, "rates must be >= 0");
        }
    }
    prob(readout.electron_read_up, "noise.readout.electron_read_up");
    prob(readout.electron_read_down, "noise.readout.electron_read_down");
    prob(readout.nuclear_flip_up_to_down, "noise.readout.nuclear_flip_up_to_down");
    prob(readout.nuclear_flip_down_to_up, "noise.readout.nuclear_flip_down_to_up");
    prob(readout.electron_init_error, "noise.readout.electron_init_error");
    prob(readout.nuclear_init_error, "noise.readout.nuclear_init_error");
    if (readout.qnd_shot_cap < 1) throw ConfigError("noise.readout.qnd_shot_cap", "must be >= 1");
    if (coherence.t2_star_s.size() != model.num_spins()) {
        throw ConfigError("noise.t2.t2_star_s", "needs one entry per spin");
    }
    if (coherence.t2_hahn_s.size() != model.num_spins()) {
        throw ConfigError("noise.t2.t2_hahn_s", "needs one entry per spin");
    }
    for (double t : coherence.t2_star_s) {
        if (!(t >= 0)) throw ConfigError("noise.t2.t2_star_s", "must be >= 0 (0 disables)");
    }
    for (double t : coherence.t2_hahn_s) {
        if (!(t >= 0)) throw ConfigError("noise.t2.t2_hahn_s", "must be >= 0 (0 disables)");
    }
    if (load.nmr_on_nmr_hz_per_v2.size() != model.num_spins()) {
        throw ConfigError("noise.microwave_load.nmr_on_nmr_Hz_per_V2", "needs one entry per spin");
    }
    for (const ShiftCurve *c : {&load.esr_on_nmr, &load.nmr_on_esr, &load.esr_on_esr}) {
        if (c->amplitude_v.size() != c->shift_hz.size()) {
            throw ConfigError("noise.microwave_load", "shift curve lengths differ");
        }
        for (size_t i = 0; i < c->amplitude_v.size(); ++i) {
            if (!(c->amplitude_v[i] > (i ? c->amplitude_v[i - 1] : 0.0))) {
                throw ConfigError("noise.microwave_load", "shift curve amplitudes must increase from 0");
            }
        }
    }
    if (!(shot_overhead_s >= 0)) throw ConfigError("noise.shot_overhead_s", "must be >= 0");
}

LineOffsets LineOffsets::zero(const DeviceModel &model) {
    LineOffsets o;
    o.collective_esr_hz.assign(model.num_registers(), 0.0);
    o.hyperfine_drift_hz.assign(model.num_spins(), 0.0);
    return o;
}

NoiseContext NoiseContext::ideal(const DeviceModel &model) {
    NoiseContext c;
    c.offsets = LineOffsets::zero(model);
    c.t2_star_s.assign(model.num_spins(), 0.0);
    c.t2_hahn_s.assign(model.num_spins(), 0.0);
    c.load.nmr_on_nmr_hz_per_v2.assign(model.num_spins(), 0.0);
    return c;
}

LineOffsets sample_offsets(const DeviceModel &model, const DriftModel &drift, const std::vector<TlsDefect> &tls,
                           double t_s, std::mt19937_64 &rng) {
    if (!(t_s >= 0)) {
        throw DomainError("sample time must be >= 0");
    }
    LineOffsets o = LineOffsets::zero(model);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (size_t r = 0; r < model.num_registers(); ++r) {
        const double s = r < drift.collective_sigma_hz.size() ? drift.collective_sigma_hz[r] : 0.0;
        if (s > 0) {
            o.collective_esr_hz[r] += s * gauss(rng);
        }
    }
    for (const auto &d : tls) {
        if (d.state && d.register_index < o.collective_esr_hz.size()) {
            o.collective_esr_hz[d.register_index] += d.amplitude_hz;
        }
    }
    for (size_t s = 0; s < model.num_spins() && s < drift.nmr_drift_hz_per_hour.size(); ++s) {
        if (!model.is_electron(s)) {
            // NMR lines move by half the hyperfine change.
            o.hyperfine_drift_hz[s] = 2.0 * drift.nmr_drift_hz_per_hour[s] * t_s / 3600.0;
        }
    }
    if (drift.exchange_sigma_hz > 0) {
        o.exchange_hz = drift.exchange_sigma_hz * gauss(rng);
    }
    return o;
}

double microwave_shift(const MicrowaveLoadModel &load, Channel driven, Channel victim, size_t victim_spin,
                       double amplitude_v) {
    if (!(amplitude_v >= 0)) {
        throw DomainError("negative drive amplitude");
    }
    if (driven == Channel::kNmr && victim == Channel::kNmr) {
        if (victim_spin >= load.nmr_on_nmr_hz_per_v2.size()) {
            throw ShapeError("no NMR-on-NMR coefficient for spin " + std::to_string(victim_spin));
        }
        return load.nmr_on_nmr_hz_per_v2[victim_spin] * amplitude_v * amplitude_v;
    }
    if (driven == Channel::kEsr && victim == Channel::kNmr) {
        return load.esr_on_nmr.eval(amplitude_v);
    }
    if (driven == Channel::kNmr && victim == Channel::kEsr) {
        return load.nmr_on_esr.eval(amplitude_v);
    }
    return load.esr_on_esr.eval(amplitude_v);
}

double dephasing_sigma_hz(double t2_star_s) {
    if (!(t2_star_s > 0)) {
        throw DomainError("T2* must be positive");
    }
    if (std::isinf(t2_star_s)) {
        return 0.0;
    }
    return 1.0 / (std::numbers::sqrt2 * std::numbers::pi * t2_star_s);
}

double dephasing_offset(double t2_star_s, std::mt19937_64 &rng) {
    const double s = dephasing_sigma_hz(t2_star_s);
    if (s == 0) {
        return 0.0;
    }
    std::normal_distribution<double> gauss(0.0, s);
    return gauss(rng);
}

DriftProcess::DriftProcess(const DeviceModel &model, const NoiseModel &noise)
    : model_(&model), drift_(noise.drift), tls_(noise.tls), jump_offsets_hz_(model.num_spins(), 0.0) {
}

void DriftProcess::advance(double dt_s, std::mt19937_64 &rng) {
    if (!(dt_s >= 0)) {
        throw DomainError("cannot advance the clock backwards");
    }
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (auto &d : tls_) {
        const double k = d.rate_up_per_s + d.rate_down_per_s;
        if (k <= 0) {
            continue;
        }
        const double pi_up = d.rate_up_per_s / k;
        const double decay = std::exp(-k * dt_s);
        const double p_up = d.state ? pi_up + (1 - pi_up) * decay : pi_up * (1 - decay);
        d.state = uni(rng) < p_up;
    }
    for (const auto &g : drift_.groups) {
        if (g.rate_per_s <= 0) {
            continue;
        }
        std::poisson_distribution<int> jumps(g.rate_per_s * dt_s);
        if (jumps(rng) > 0) {
            std::uniform_real_distribution<double> value(-g.magnitude_hz, g.magnitude_hz);
            const double v = value(rng);
            for (size_t m : g.members) {
                jump_offsets_hz_[m] = v;
            }
        }
    }
    time_s_ += dt_s;
}

void DriftProcess::set_tls_state(size_t index, bool up) {
    if (index >= tls_.size()) {
        throw ShapeError("no defect " + std::to_string(index));
    }
    tls_[index].state = up;
}

LineOffsets DriftProcess::sample(std::mt19937_64 &rng) const {
    if (model_ == nullptr) {
        throw Error("drift process used before initialization");
    }
    LineOffsets o = sample_offsets(*model_, drift_, tls_, time_s_, rng);
    for (size_t s = 0; s < o.hyperfine_drift_hz.size(); ++s) {
        o.hyperfine_drift_hz[s] += 2.0 * jump_offsets_hz_[s];
    }
    return o;
}

NoiseContext make_noise_context(const DeviceModel &model, const NoiseModel &noise, LineOffsets offsets,
                                double nuclear_read_error) {
    NoiseContext c = NoiseContext::ideal(model);
    c.offsets = std::move(offsets);
    c.t2_star_s = noise.coherence.t2_star_s;
    c.t2_hahn_s = noise.coherence.t2_hahn_s;
    c.electron_read_up = noise.readout.electron_read_up;
    c.electron_read_down = noise.readout.electron_read_down;
    c.electron_init_error = noise.readout.electron_init_error;
    c.nuclear_init_error = noise.readout.nuclear_init_error;
    c.nuclear_read_error = nuclear_read_error;
    c.crot_phase_error_rad = noise.crot_phase_error_rad;
    c.load = noise.load;
    return c;
}

namespace {

void check_params(const QndMarkovParams &p) {
    for (double v : {p.p_flip_up_to_down, p.p_flip_down_to_up, p.p_read_up, p.p_read_down}) {
        if (!(v >= 0 && v <= 1)) {
            throw DomainError("QND Markov parameters must be probabilities");
        }
    }
}

// Joint distribution over (current nuclear state, up-count difference) evolved cycle by cycle.
class QndChain {
   public:
    QndChain(const QndMarkovParams &p, size_t n_max, bool start_up)
        : p_(p), n_max_(n_max), up_(2 * n_max + 1, 0.0), down_(2 * n_max + 1, 0.0) {
        (start_up ? up_ : down_)[n_max] = 1.0;
    }

    void step() {
        std::vector<double> nu(up_.size(), 0.0);
        std::vector<double> nd(up_.size(), 0.0);
        // Nucleus up: the up-block flips the electron.
        const auto inc = [](double a, double b) {
            return std::array<double, 3>{(1 - a) * b, a * b + (1 - a) * (1 - b), a * (1 - b)};
        };
        const auto iu = inc(p_.p_read_up, 1 - p_.p_read_down);
        const auto id = inc(1 - p_.p_read_down, p_.p_read_up);
        const double fud = p_.p_flip_up_to_down;
        const double fdu = p_.p_flip_down_to_up;
        for (size_t d = 1; d + 1 < up_.size(); ++d) {
            for (int k = 0; k < 3; ++k) {
                const size_t t = d + k - 1;
                const double from_up = up_[d] * iu[k];
                const double from_down = down_[d] * id[k];
                nu[t] += from_up * (1 - fud) + from_down * fdu;
                nd[t] += from_up * fud + from_down * (1 - fdu);
            }
        }
        up_.swap(nu);
        down_.swap(nd);
    }

    std::vector<double> diff() const {
        std::vector<double> out(up_.size());
        for (size_t i = 0; i < out.size(); ++i) {
            out[i] = up_[i] + down_[i];
        }
        return out;
    }

    size_t n_max() const {
        return n_max_;
    }

   private:
    QndMarkovParams p_;
    size_t n_max_;
    std::vector<double> up_;
    std::vector<double> down_;
};

}  // namespace

QndMarkovResult qnd_markov_exact(const QndMarkovParams &params, size_t shots, double reject_band) {
    check_params(params);
    if (shots < 1) {
        throw DomainError("QND shot count must be >= 1");
    }
    if (!(reject_band >= 0 && reject_band <= 1)) {
        throw DomainError("reject band must lie in [0, 1]");
    }
    QndChain cu(params, shots + 1, true);
    QndChain cd(params, shots + 1, false);
    for (size_t n = 0; n < shots; ++n) {
        cu.step();
        cd.step();
    }
    const auto fu = cu.diff();
    const auto fd = cd.diff();
    const size_t off = shots + 1;
    QndMarkovResult r;
    r.shots = shots;
    r.diff_given_up.assign(fu.begin() + 1, fu.end() - 1);
    r.diff_given_down.assign(fd.begin() + 1, fd.end() - 1);
    double err = 0;
    double err_acc = 0;
    double acc = 0;
    for (size_t i = 0; i < fu.size(); ++i) {
        const long d = static_cast<long>(i) - static_cast<long>(off);
        const bool says_up = d >= 0;
        const bool rejected = std::abs(static_cast<double>(d)) < reject_band * static_cast<double>(shots);
        const double wrong = 0.5 * (says_up ? fd[i] : fu[i]);
        err += wrong;
        if (!rejected) {
            err_acc += wrong;
            acc += 0.5 * (fu[i] + fd[i]);
        }
    }
    r.error = err;
    r.acceptance = acc;
    r.error_postselected = acc > 0 ? err_acc / acc : 0.0;
    return r;
}

std::vector<double> qnd_error_curve(const QndMarkovParams &params, size_t n_max) {
    check_params(params);
    QndChain cu(params, n_max + 1, true);
    QndChain cd(params, n_max + 1, false);
    std::vector<double> out;
    out.reserve(n_max);
    const size_t off = n_max + 1;
    for (size_t n = 1; n <= n_max; ++n) {
        cu.step();
        cd.step();
        const auto fu = cu.diff();
        const auto fd = cd.diff();
        double err = 0;
        for (size_t i = 0; i < fu.size(); ++i) {
            err += 0.5 * (i >= off ? fd[i] : fu[i]);
        }
        out.push_back(err);
    }
    return out;
}

QndMarkovParams fold_init_error(QndMarkovParams p, double e) {
    if (!(e >= 0 && e <= 1)) {
        throw DomainError("init error must be a probability");
    }
    const double up = (1 - e) * p.p_read_up + e * (1 - p.p_read_down);
    const double down = (1 - e) * p.p_read_down + e * (1 - p.p_read_up);
    p.p_read_up = up;
    p.p_read_down = down;
    return p;
}

QndOperatingPoint qnd_operating_point(const QndMarkovParams &params, size_t cap) {
    if (cap == 0) {
        throw DomainError("QND shot cap must be positive");
    }
    const std::vector<double> curve = qnd_error_curve(params, cap);
    if (params.p_flip_up_to_down == 0 && params.p_flip_down_to_up == 0) {
        return {cap, curve.back()};
    }
    size_t best = 0;
    for (size_t n = 1; n < curve.size(); ++n) {
        if (curve[n] < curve[best]) best = n;
    }
    return {best + 1, curve[best]};
}

QndOperatingPoint qnd_operating_point(const ReadoutErrorModel &r) {
    QndMarkovParams p;
    p.p_flip_up_to_down = r.nuclear_flip_up_to_down;
    p.p_flip_down_to_up = r.nuclear_flip_down_to_up;
    p.p_read_up = r.electron_read_up;
    p.p_read_down = r.electron_read_down;
    return qnd_operating_point(fold_init_error(p, r.electron_init_error), r.qnd_shot_cap);
}

}  // namespace donorsim
