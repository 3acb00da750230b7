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

#include "donorsim/calibration.h"

#include <algorithm>
#include <cmath>
#include <numbers>

// pchip.hpp calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "donorsim/circuits.h"
#include "donorsim/device.h"
#include "donorsim/errors.h"
#include "donorsim/pulse_engine.h"

namespace donorsim {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_phase(double x) {
    return std::remainder(x, 2 * kPi);
}

double first_bit_up(const std::map<std::string, double> &probs) {
    double p = 0;
    for (const auto &[k, v] : probs) {
        if (!k.empty() && k[0] == '1') p += v;
    }
    return p;
}

double first_bit_up(const CountsTable &counts) {
    const uint64_t n = counts.total();
    if (n == 0) return 0;
    uint64_t up = 0;
    for (const auto &[k, v] : counts.counts) {
        if (!k.empty() && k[0] == '1') up += v;
    }
    return static_cast<double>(up) / static_cast<double>(n);
}

double measure(Lab &lab, const Circuit &c, const NoiseContext &ctx) {
    const size_t shots = lab.policy().shots;
    if (shots == 0) return first_bit_up(lab.exact(c, ctx));
    return first_bit_up(lab.run(c, ctx, shots));
}

struct Sweep {
    std::vector<double> d;
    std::vector<double> p;
};

Sweep sweep(Lab &lab, const std::function<Circuit(double)> &circuit_at, const NoiseContext &ctx, double center,
            double span, double step) {
    Sweep s;
    const auto n = static_cast<size_t>(std::floor(span / step + 0.5)) + 1;
    for (size_t k = 0; k < n; ++k) {
        const double d = center - span / 2 + static_cast<double>(k) * step;
        s.d.push_back(d);
        s.p.push_back(measure(lab, circuit_at(d), ctx));
    }
    return s;
}

bool accept(const GaussianFit &f, double center, double span, double min_height) {
    return f.converged && f.amplitude >= min_height && f.sigma > 0 && f.sigma < span &&
           std::abs(f.center - center) <= span / 2;
}

/// Coarse sweep over widen_factor * span (step scaled alike) to locate the envelope of the
/// X^n pattern, widening further on failure; then a base-span sweep around the coarse centre.
TrackResult track_core(Lab &lab, const std::function<Circuit(double)> &circuit_at, const NoiseContext &c,
                       double span_hz, double step_hz, double min_height, const CalibrationPolicy &pol) {
    double coarse_span = span_hz * pol.widen_factor;
    double coarse_step = step_hz * pol.widen_factor;
    for (size_t w = 0; w <= pol.max_widenings; ++w) {
        const Sweep coarse = sweep(lab, circuit_at, c, 0, coarse_span, coarse_step);
        const GaussianFit g = fit_gaussian(coarse.d, coarse.p);
        if (accept(g, 0, coarse_span, min_height)) {
            Sweep fine = sweep(lab, circuit_at, c, g.center, span_hz, step_hz);
            GaussianFit f = fit_gaussian(fine.d, fine.p);
            bool ok = accept(f, g.center, span_hz, min_height);
            if (!ok) {
                // Joint fit over coarse and fine points.
                std::vector<double> d = coarse.d, p = coarse.p;
                d.insert(d.end(), fine.d.begin(), fine.d.end());
                p.insert(p.end(), fine.p.begin(), fine.p.end());
                f = fit_gaussian(d, p);
                ok = accept(f, g.center, coarse_span, min_height) && std::abs(f.center - g.center) <= span_hz / 2;
            }
            if (ok) {
                lab.count_tracking_measurement();
                TrackResult out;
                out.offset_hz = f.center;
                out.fit = f;
                out.widenings = w;
                out.detunings_hz = std::move(fine.d);
                out.signal = std::move(fine.p);
                return out;
            }
        }
        coarse_span *= pol.widen_factor;
        coarse_step *= pol.widen_factor;
    }
    throw CalibrationLost("no peak within +-" + std::to_string(coarse_span / pol.widen_factor / 2) + " Hz");
}

void require_pair(const Lab &lab) {
    if (lab.truth().num_registers() != 2) throw CircuitError("operation needs two registers");
}

}  // namespace

TrackResult track_line(Lab &lab, double table_frequency_hz, const std::function<Circuit(double)> &circuit_at,
                       const NoiseContext *ctx, double contrast) {
    const NoiseContext c = ctx != nullptr ? *ctx : lab.sample_context();
    const CalibrationPolicy &pol = lab.policy();
    if (!(contrast > 0)) contrast = c.electron_read_up + c.electron_read_down - 1;
    try {
        TrackResult out = track_core(lab, circuit_at, c, pol.span_hz, pol.step_hz, pol.min_contrast * contrast, pol);
        out.frequency_hz = table_frequency_hz + out.offset_hz;
        return out;
    } catch (const CalibrationLost &e) {
        throw CalibrationLost(std::string(e.what()) + " of " + std::to_string(table_frequency_hz) + " Hz");
    }
}

TrackResult track_reference(Lab &lab, size_t register_index, const NoiseContext *ctx) {
    const DeviceModel &m = lab.truth();
    if (register_index >= m.num_registers()) throw DomainError("register index out of range");
    const CalibrationPolicy &pol = lab.policy();
    const double f = lab.table().esr(register_index, 0, SpinState::kDown);
    return track_line(
        lab, f,
        [&](double d) { return esr_track_circuit(m, register_index, 0, d, pol.rotations, pol.track_rabi_hz); }, ctx);
}

FrequencyTable collective_recalibrate(const FrequencyTable &table, const std::vector<double> &measured_refs_hz,
                                      double time_s) {
    if (measured_refs_hz.size() != table.registers.size()) {
        throw DomainError("collective recalibration needs one reference per register; partial update refused");
    }
    FrequencyTable out = table;
    for (size_t r = 0; r < out.registers.size(); ++r) {
        if (!std::isfinite(measured_refs_hz[r])) throw DomainError("non-finite reference measurement");
        out.registers[r].reference_hz = measured_refs_hz[r];
        out.registers[r].calibrated_at_s = time_s;
    }
    return out;
}

ExchangeResult track_exchange(Lab &lab, const NoiseContext *ctx) {
    require_pair(lab);
    const DeviceModel &m = lab.truth();
    const CalibrationPolicy &pol = lab.policy();
    const NoiseContext c = ctx != nullptr ? *ctx : lab.sample_context();
    const double pi_s = 1 / (2 * lab.engine().esr_rabi_hz);
    ExchangeResult out;
    out.zcrot = track_line(
        lab, lab.table().esr(1, 0, SpinState::kDown),
        [&](double d) { return j_track_circuit(m, false, d, pol.rotations, pol.track_rabi_hz, pi_s); }, &c);
    out.crot = track_line(
        lab, lab.table().esr(1, 0, SpinState::kUp),
        [&](double d) { return j_track_circuit(m, true, d, pol.rotations, pol.track_rabi_hz, pi_s); }, &c);
    out.exchange_hz = lab.table().exchange_hz + (out.crot.offset_hz - out.zcrot.offset_hz);
    return out;
}

FrequencyTable apply_exchange(const FrequencyTable &table, double exchange_hz, double time_s) {
    if (!(exchange_hz > 0)) throw DomainError("exchange estimate must be positive");
    FrequencyTable out = table;
    out.exchange_hz = exchange_hz;
    out.exchange_calibrated_at_s = time_s;
    return out;
}

TrackResult track_nmr(Lab &lab, size_t nucleus, double span_hz, double step_hz, double rabi_hz,
                      const NoiseContext *ctx) {
    const DeviceModel &m = lab.truth();
    const SpinRef r = m.spin_ref(nucleus);
    if (r.kind != SpinKind::kNucleus) throw DomainError(m.spin_name(nucleus) + " is not a nucleus");
    const NoiseContext c = ctx != nullptr ? *ctx : lab.sample_context();
    const double f = lab.table().nmr(r.register_index, r.nucleus_index, SpinState::kDown);
    const size_t e = m.electron_spin(r.register_index);
    auto circuit_at = [&](double d) {
        Circuit k("nmr_track_" + m.spin_name(nucleus));
        k.nmr(nucleus, kPi, 0, {{e, SpinState::kDown}});
        k.ops.back().detuning_hz = d;
        k.ops.back().f_rabi_hz = rabi_hz;
        k.read_nucleus(nucleus);
        return k;
    };
    CalibrationPolicy pol = lab.policy();
    pol.span_hz = span_hz;
    pol.step_hz = step_hz;
    pol.validate();
    const double contrast = 1 - 2 * c.nuclear_read_error;
    try {
        TrackResult out = track_core(lab, circuit_at, c, span_hz, step_hz, pol.min_contrast * contrast, pol);
        out.frequency_hz = f + out.offset_hz;
        return out;
    } catch (const CalibrationLost &e) {
        throw CalibrationLost(std::string(e.what()) + " of the " + m.spin_name(nucleus) + " NMR line");
    }
}

struct RabiCouplingFit::Impl {
    boost::math::interpolators::pchip<std::vector<double>> curve;
};

RabiCouplingFit::RabiCouplingFit(std::vector<double> f_nmr_hz, std::vector<double> coupling_hz_per_v) {
    if (f_nmr_hz.size() != coupling_hz_per_v.size()) throw ShapeError("anchor lists differ in length");
    if (f_nmr_hz.size() < 4) throw DomainError("cubic coupling fit needs at least four anchors");
    std::vector<size_t> idx(f_nmr_hz.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return f_nmr_hz[a] < f_nmr_hz[b]; });
    std::vector<double> values;
    for (size_t k = 0; k < idx.size(); ++k) {
        const size_t i = idx[k];
        if (k > 0 && !(f_nmr_hz[i] > f_.back())) throw DomainError("anchor frequencies must be distinct");
        if (!(coupling_hz_per_v[i] > 0)) throw DomainError("coupling anchors must be positive");
        f_.push_back(f_nmr_hz[i]);
        values.push_back(coupling_hz_per_v[i]);
    }
    auto impl = std::make_shared<Impl>(Impl{{std::vector<double>(f_), std::move(values)}});
    impl_ = std::move(impl);
}

const RabiCouplingFit &RabiCouplingFit::shipped() {
    static const RabiCouplingFit fit = [] {
        std::vector<double> f, c;
        std::vector<NmrDriveRow> rows = nmr_drive_table();
        rows.push_back(nmr_filler_row());
        for (const NmrDriveRow &r : rows) {
            f.push_back(r.f_nmr_hz);
            c.push_back(kAbsorptionRatio * r.f_nmr_hz / r.amplitude_v);
        }
        return RabiCouplingFit(f, c);
    }();
    return fit;
}

double RabiCouplingFit::coupling(double f_nmr_hz) const {
    if (!(f_nmr_hz >= f_.front() && f_nmr_hz <= f_.back())) {
        throw RangeError("NMR frequency " + std::to_string(f_nmr_hz) + " Hz outside the coupling fit [" +
                         std::to_string(f_.front()) + ", " + std::to_string(f_.back()) + "] Hz");
    }
    return impl_->curve(f_nmr_hz);
}

NmrSchedule constant_absorption_schedule(double f_nmr_hz, const RabiCouplingFit &fit, double ratio) {
    if (!(ratio > 0)) throw DomainError("absorption ratio must be positive");
    NmrSchedule s;
    s.ratio = ratio;
    s.f_rabi_hz = ratio * f_nmr_hz;
    s.amplitude_v = s.f_rabi_hz / fit.coupling(f_nmr_hz);
    return s;
}

namespace {

/// The single line an op drives, or SchedulingError if its condition leaves several.
PulseEvent real_tone(const GateOp &op, const DeviceModel &model, const FrequencyTable &table, const PowerBudget &b) {
    const SpinRef ref = model.spin_ref(op.target());
    auto fixed = [&](size_t spin) -> const Control * {
        for (const Control &c : op.condition) {
            if (c.spin == spin) return &c;
        }
        return nullptr;
    };
    PulseEvent ev;
    ev.phase_rad = op.phase;
    if (op.kind == OpKind::kEsr) {
        uint32_t p = 0;
        for (size_t i = 0; i < model.num_nuclei(ref.register_index); ++i) {
            const Control *c = fixed(model.nucleus_spin(ref.register_index, i));
            if (c == nullptr) throw SchedulingError("ESR op leaves nucleus " + std::to_string(i) + " free: several tones");
            if (c->state == SpinState::kUp) p |= 1u << i;
        }
        SpinState other = SpinState::kDown;
        if (model.num_registers() == 2) {
            const Control *c = fixed(model.electron_spin(1 - ref.register_index));
            if (c == nullptr) throw SchedulingError("ESR op drives both exchange branches: two tones");
            other = c->state;
        }
        ev.channel = Channel::kEsr;
        ev.frequency_hz = table.esr(ref.register_index, p, other) + op.detuning_hz;
        ev.f_rabi_hz = op.f_rabi_hz;
        ev.amplitude_v = b.esr_drive_amplitude_v;
        return ev;
    }
    const Control *c = fixed(model.electron_spin(ref.register_index));
    if (c == nullptr) throw SchedulingError("NMR op drives both electron branches: two tones");
    const double f = table.nmr(ref.register_index, ref.nucleus_index, c->state);
    const NmrSchedule s = constant_absorption_schedule(f, RabiCouplingFit::shipped(), b.ratio);
    ev.channel = Channel::kNmr;
    ev.frequency_hz = f + op.detuning_hz;
    ev.f_rabi_hz = s.f_rabi_hz;
    ev.amplitude_v = s.amplitude_v;
    ev.absorption_ratio = s.ratio;
    return ev;
}

}  // namespace

Circuit compensate_power_budget(const Circuit &circuit, const DeviceModel &model, const FrequencyTable &table,
                                const PowerBudget &b) {
    Circuit out = circuit;
    for (GateOp &op : out.ops) {
        if (op.kind != OpKind::kEsr && op.kind != OpKind::kNmr && op.kind != OpKind::kIdle) continue;
        std::vector<PulseEvent> real;
        for (const PulseEvent &ev : op.drives) {
            if (!ev.filler) real.push_back(ev);
        }
        if (real.empty() && op.kind != OpKind::kIdle) {
            real.push_back(real_tone(op, model, table, b));
            if (op.kind == OpKind::kNmr) op.f_rabi_hz = real.back().f_rabi_hz;
        }
        size_t esr = 0, nmr = 0;
        for (const PulseEvent &ev : real) (ev.channel == Channel::kEsr ? esr : nmr)++;
        if (esr > 1 || nmr > 1) throw SchedulingError("slice already holds two real tones on one channel");
        op.drives = real;
        if (esr == 0) {
            PulseEvent f;
            f.channel = Channel::kEsr;
            f.frequency_hz = b.f_off_esr_hz;
            f.amplitude_v = b.esr_filler_amplitude_v;
            f.filler = true;
            op.drives.push_back(f);
        }
        if (nmr == 0) {
            PulseEvent f;
            f.channel = Channel::kNmr;
            f.frequency_hz = b.f_off_nmr_hz;
            f.f_rabi_hz = b.ratio * b.f_off_nmr_hz;
            f.amplitude_v = b.nmr_filler_amplitude_v;
            f.absorption_ratio = b.ratio;
            f.filler = true;
            op.drives.push_back(f);
        }
    }
    return out;
}

std::vector<std::vector<double>> slice_shifts(const Circuit &circuit, const DeviceModel &model,
                                              const FrequencyTable &table, const MicrowaveLoadModel &load,
                                              double nmr_rabi_ratio) {
    std::vector<std::vector<double>> out;
    for (const GateOp &op : circuit.flattened()) {
        if (op.kind != OpKind::kEsr && op.kind != OpKind::kNmr && op.kind != OpKind::kIdle) continue;
        out.push_back(microwave_slice_shifts(op, model, table, load, nmr_rabi_ratio));
    }
    return out;
}

double differential_shift(const std::vector<std::vector<double>> &shifts, size_t spin) {
    if (shifts.empty()) return 0;
    double lo = shifts[0].at(spin), hi = lo;
    for (const auto &s : shifts) {
        lo = std::min(lo, s.at(spin));
        hi = std::max(hi, s.at(spin));
    }
    return hi - lo;
}

CrotPhaseCalibration calibrate_crot_phase(Lab &lab, size_t points, double min_contrast, const NoiseContext *ctx) {
    require_pair(lab);
    if (points < 3) throw DomainError("phase sweep needs at least three points");
    const DeviceModel &m = lab.truth();
    const NoiseContext c = ctx != nullptr ? *ctx : lab.sample_context();
    const double readout_contrast = c.electron_read_up + c.electron_read_down - 1;
    const Simulator reference(m, enumerate_lines(m), lab.engine());
    const NoiseContext ideal = NoiseContext::ideal(m);
    CrotPhaseCalibration out;
    for (size_t r = 0; r < 2; ++r) {
        for (int b = 0; b < 2; ++b) {
            const SpinState branch = b ? SpinState::kUp : SpinState::kDown;
            std::vector<double> phi, meas, ref;
            for (size_t k = 0; k < points; ++k) {
                const double x = 2 * kPi * static_cast<double>(k) / static_cast<double>(points);
                const Circuit circ = phase_cal_circuit(m, r, branch, x);
                phi.push_back(x);
                meas.push_back(measure(lab, circ, c));
                ref.push_back(first_bit_up(reference.exact_probabilities(circ, ideal)));
            }
            const CosineFit fm = fit_cosine(phi, meas);
            const CosineFit fr = fit_cosine(phi, ref);
            const double contrast = 2 * fm.amplitude() / readout_contrast;
            out.contrast[r][static_cast<size_t>(b)] = contrast;
            if (contrast < min_contrast) {
                throw CalibrationLost("phase fringe contrast " + std::to_string(contrast) + " below threshold");
            }
            out.phase_rad[r][static_cast<size_t>(b)] = wrap_phase(fm.phase() - fr.phase());
        }
    }
    return out;
}

Circuit apply_crot_phase_correction(const Circuit &circuit, const DeviceModel &model,
                                    const CrotPhaseCalibration &cal) {
    if (!circuit.repeat_blocks.empty()) throw CircuitError("expand repeat blocks before phase correction");
    if (model.num_registers() != 2) throw CircuitError("phase correction needs two registers");
    Circuit out(circuit.label);
    for (const GateOp &op : circuit.ops) {
        if (op.kind != OpKind::kEsr || std::abs(std::abs(op.angle) - kPi) > 1e-12) {
            out.append(op);
            continue;
        }
        const size_t r = model.spin_ref(op.target()).register_index;
        const size_t control = model.electron_spin(1 - r);
        const Control *c = nullptr;
        for (const Control &k : op.condition) {
            if (k.spin == control) c = &k;
        }
        if (c == nullptr) {
            out.append(op);
            continue;
        }
        const double theta = cal.phase_rad[r][c->state == SpinState::kUp ? 1 : 0];
        // Rz(-theta/2) on both sides of a pi pulse leaves the driven branch untouched and
        // cancels Rz(theta) on the other one; the leftover branch phase goes to the control.
        out.virtual_z(op.target(), theta / 2);
        out.append(op);
        out.virtual_z(op.target(), theta / 2);
        out.virtual_z(control, c->state == SpinState::kUp ? -theta / 2 : theta / 2);
    }
    return out;
}

}  // namespace donorsim
