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

#include "donorsim/pulse_engine.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "donorsim/errors.h"

namespace donorsim {

namespace {

constexpr double kPi = std::numbers::pi;

uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double half(bool up) {
    return up ? 0.5 : -0.5;
}

}  // namespace

std::vector<double> microwave_slice_shifts(const GateOp &op, const DeviceModel &model, const FrequencyTable &table,
                                           const MicrowaveLoadModel &load, double nmr_rabi_ratio,
                                           double nmr_f_rabi_hz) {
    const size_t n = model.num_spins();
    double nmr_amp_sq_sum = 0;
    double esr_amp = 0;
    double nmr_amp_for_esr = 0;
    auto nmr_equivalent = [&](double ratio) { return load.nmr_filler_amplitude_v * (ratio / nmr_rabi_ratio); };
    if (!op.drives.empty()) {
        for (const auto &d : op.drives) {
            double a = d.amplitude_v;
            if (d.channel == Channel::kNmr) {
                if (!d.filler && d.absorption_ratio > 0) a = nmr_equivalent(d.absorption_ratio);
                nmr_amp_sq_sum += a * a;
                nmr_amp_for_esr = std::max(nmr_amp_for_esr, a);
            } else {
                esr_amp = std::max(esr_amp, a);
            }
        }
    } else if (op.kind == OpKind::kNmr) {
        const SpinRef ref = model.spin_ref(op.target());
        SpinState e = SpinState::kDown;
        for (const Control &c : op.condition) {
            if (c.spin == model.electron_spin(ref.register_index)) e = c.state;
        }
        const double f_line = table.nmr(ref.register_index, ref.nucleus_index, e);
        double f_rabi = nmr_f_rabi_hz;
        if (!(f_rabi > 0)) f_rabi = op.f_rabi_hz > 0 ? op.f_rabi_hz : nmr_rabi_ratio * f_line;
        const double a = nmr_equivalent(f_rabi / f_line);
        nmr_amp_sq_sum = a * a;
        nmr_amp_for_esr = a;
    } else if (op.kind == OpKind::kEsr) {
        esr_amp = load.esr_drive_amplitude_v;
    }
    std::vector<double> shift(n, 0.0);
    for (size_t s = 0; s < n; ++s) {
        if (model.is_electron(s)) {
            const double now = load.nmr_on_esr.eval(nmr_amp_for_esr) + load.esr_on_esr.eval(esr_amp);
            const double ref =
                load.nmr_on_esr.eval(load.nmr_filler_amplitude_v) + load.esr_on_esr.eval(load.esr_filler_amplitude_v);
            shift[s] = now - ref;
        } else {
            const double c = load.nmr_on_nmr_hz_per_v2[s];
            const double now = c * nmr_amp_sq_sum + load.esr_on_nmr.eval(esr_amp);
            const double ref = c * load.nmr_filler_amplitude_v * load.nmr_filler_amplitude_v +
                               load.esr_on_nmr.eval(load.esr_filler_amplitude_v);
            shift[s] = now - ref;
        }
    }
    return shift;
}

uint64_t substream_seed(uint64_t master, uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

double spin_flip_probability(double f_rabi_hz, double delta_f_hz, double t_s) {
    if (!(f_rabi_hz > 0)) {
        throw DomainError("Rabi frequency must be positive");
    }
    if (!(t_s >= 0)) {
        throw DomainError("pulse duration must be >= 0");
    }
    const double w2 = f_rabi_hz * f_rabi_hz + delta_f_hz * delta_f_hz;
    const double s = std::sin(kPi * t_s * std::sqrt(w2));
    return f_rabi_hz * f_rabi_hz / w2 * s * s;
}

double optimal_rabi(int n, double delta_f_hz, double rotation_angle) {
    if (n < 1) {
        throw DomainError("node index must be >= 1");
    }
    if (!(delta_f_hz > 0)) {
        throw DomainError("line separation must be positive");
    }
    if (!(rotation_angle > 0)) {
        throw DomainError("rotation angle must be positive");
    }
    const double k = 2 * kPi * n / rotation_angle;
    const double radicand = k * k - 1;
    if (!(radicand > 0)) {
        throw DomainError("no node for n = " + std::to_string(n) + " at this rotation angle");
    }
    return delta_f_hz / std::sqrt(radicand);
}

int ShotRecord::tally(const std::string &name) const {
    for (const auto &[k, v] : tallies) {
        if (k == name) {
            return v;
        }
    }
    return 0;
}

uint64_t CountsTable::total() const {
    uint64_t t = 0;
    for (const auto &[k, v] : counts) {
        t += v;
    }
    return t;
}

double CountsTable::probability(const std::string &bits) const {
    const uint64_t t = total();
    if (t == 0) {
        throw DomainError("empty counts table");
    }
    auto it = counts.find(bits);
    return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(t);
}

std::map<std::string, double> CountsTable::probabilities() const {
    std::map<std::string, double> out;
    const double t = static_cast<double>(total());
    if (t == 0) {
        throw DomainError("empty counts table");
    }
    for (const auto &[k, v] : counts) {
        out[k] = static_cast<double>(v) / t;
    }
    return out;
}

void CountsTable::add(const std::string &bits, uint64_t n) {
    counts[bits] += n;
}

std::string CountsTable::to_csv() const {
    std::ostringstream out;
    out << "outcome,count\n";
    for (const auto &[k, v] : counts) {
        out << (k.empty() ? "-" : k) << "," << v << "\n";
    }
    return out.str();
}

CountsTable CountsTable::from_csv(const std::string &text) {
    CountsTable t;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (header) {
            header = false;
            continue;
        }
        const size_t comma = line.find(',');
        if (comma == std::string::npos) {
            throw DomainError("malformed counts row '" + line + "'");
        }
        std::string key = line.substr(0, comma);
        if (key == "-") key.clear();
        t.counts[key] += std::stoull(line.substr(comma + 1));
    }
    return t;
}

// ---------------------------------------------------------------------------------------------
// Compilation.

namespace {

struct Line {
    size_t spin = 0;
    size_t abit = 0;
    bool esr = true;
    size_t reg = 0;
    uint32_t pattern = 0;
    int other = -1;
    int electron = 0;
    int sign = 1;
    double nu0 = 0;
    uint64_t frz_mask = 0;
    uint64_t frz_value = 0;
    std::vector<uint32_t> b0;
};

struct Tone {
    double f_rabi = 0;
    double duration = 0;
    double phase = 0;
    std::vector<Line> lines;
    // Controlled-phase error on the neighbouring exchange branch of the selected line.
    bool exchange_branch = false;
    uint64_t cp_act_mask = 0, cp_act_value = 0, cp_frz_mask = 0, cp_frz_value = 0;
    // Microwave load: per-spin line-frequency shift during this slice.
    std::vector<double> load_shift_hz;
};

enum class Step : uint8_t { kTone, kIdle, kInit, kMeasure, kRead, kDepolarize, kFlip };

struct Instr {
    Step kind;
    size_t index = 0;  // first tone or spin
    size_t count = 1;  // tones sharing the slice
    size_t spin2 = SIZE_MAX;
    double duration = 0;
    double param = 0;
    double param2 = 0;
    bool output = false;
    int tally = -1;
    int postselect = -1;
};

}  // namespace

struct CompiledCircuit {
    size_t num_spins = 0;
    std::vector<size_t> active;   // active bit -> spin
    std::vector<int> active_bit;  // spin -> active bit or -1
    uint64_t frozen_mask = 0;
    std::vector<Tone> tones;
    std::vector<Instr> program;
    std::vector<std::string> tally_names;
    double duration = 0;
    size_t output_bits = 0;
    std::vector<double> final_frame;  // accumulated virtual-Z angle per spin
};

namespace {

uint64_t gather(const CompiledCircuit &c, uint64_t full) {
    uint64_t a = 0;
    for (size_t b = 0; b < c.active.size(); ++b) {
        if ((full >> c.active[b]) & 1) a |= uint64_t{1} << b;
    }
    return a;
}

uint64_t scatter(const CompiledCircuit &c, uint64_t act) {
    uint64_t f = 0;
    for (size_t b = 0; b < c.active.size(); ++b) {
        if ((act >> b) & 1) f |= uint64_t{1} << c.active[b];
    }
    return f;
}

// Splits a full-spin condition into active-bit and frozen parts.
void split_condition(const CompiledCircuit &c, uint64_t mask, uint64_t value, uint64_t &act_mask,
                     uint64_t &act_value, uint64_t &frz_mask, uint64_t &frz_value) {
    act_mask = act_value = 0;
    frz_mask = mask & c.frozen_mask;
    frz_value = value & frz_mask;
    for (size_t b = 0; b < c.active.size(); ++b) {
        const uint64_t bit = uint64_t{1} << c.active[b];
        if (mask & bit) {
            act_mask |= uint64_t{1} << b;
            if (value & bit) act_value |= uint64_t{1} << b;
        }
    }
}

class Compiler {
   public:
    Compiler(const DeviceModel &m, const FrequencyTable &t, const FrequencyTable &ml, const EngineOptions &o)
        : model_(m), table_(t), lines_(ml), opt_(o) {
    }

    std::shared_ptr<CompiledCircuit> compile(const Circuit &circuit, bool all_active) {
        circuit.validate(model_);
        const std::vector<GateOp> ops = circuit.flattened();
        auto cc = std::make_shared<CompiledCircuit>();
        cc_ = cc.get();
        const size_t n = model_.num_spins();
        cc->num_spins = n;
        std::vector<bool> act(n, all_active || opt_.mode == DriveMode::kRealistic);
        for (const auto &op : ops) {
            if (op.kind == OpKind::kEsr || op.kind == OpKind::kNmr) {
                act[op.target()] = true;
            }
        }
        cc->active_bit.assign(n, -1);
        for (size_t s = 0; s < n; ++s) {
            if (act[s]) {
                cc->active_bit[s] = static_cast<int>(cc->active.size());
                cc->active.push_back(s);
            } else {
                cc->frozen_mask |= uint64_t{1} << s;
            }
        }
        frame_.assign(n, 0.0);
        for (const auto &op : ops) {
            compile_op(op);
        }
        cc->final_frame = frame_;
        return cc;
    }

   private:
    int tally_index(const std::string &name) {
        if (name.empty()) return -1;
        auto &names = cc_->tally_names;
        auto it = std::find(names.begin(), names.end(), name);
        if (it != names.end()) return static_cast<int>(it - names.begin());
        names.push_back(name);
        return static_cast<int>(names.size() - 1);
    }

    // Spins whose state selects the line addressed by a rotation of `target`.
    std::vector<size_t> coupled_spins(size_t target) const {
        const SpinRef ref = model_.spin_ref(target);
        std::vector<size_t> out;
        if (ref.kind == SpinKind::kElectron) {
            for (size_t i = 0; i < model_.num_nuclei(ref.register_index); ++i) {
                out.push_back(model_.nucleus_spin(ref.register_index, i));
            }
            if (model_.num_registers() == 2) {
                out.push_back(model_.electron_spin(1 - ref.register_index));
            }
        } else {
            out.push_back(model_.electron_spin(ref.register_index));
        }
        return out;
    }

    double esr_model(size_t r, uint32_t p, int other) const {
        const auto &R = lines_.registers[r];
        return R.reference_hz + R.offsets_hz[p] + (other == 1 ? lines_.exchange_hz : 0.0);
    }

    void finish_line(Line &ln, uint64_t full_mask, uint64_t full_value) {
        uint64_t am, av;
        split_condition(*cc_, full_mask, full_value, am, av, ln.frz_mask, ln.frz_value);
        ln.abit = static_cast<size_t>(cc_->active_bit[ln.spin]);
        const uint64_t tb = uint64_t{1} << ln.abit;
        const size_t dim = size_t{1} << cc_->active.size();
        for (size_t i = 0; i < dim; ++i) {
            if (!(i & tb) && (i & am) == av) ln.b0.push_back(static_cast<uint32_t>(i));
        }
    }

    Line esr_line(size_t r, uint32_t p, int other, double x) {
        Line ln;
        ln.esr = true;
        ln.reg = r;
        ln.spin = model_.electron_spin(r);
        ln.pattern = p;
        ln.other = other;
        ln.sign = 1;
        ln.nu0 = x;
        uint64_t mask = uint64_t{1} << ln.spin;
        uint64_t value = 0;
        for (size_t i = 0; i < model_.num_nuclei(r); ++i) {
            const size_t s = model_.nucleus_spin(r, i);
            mask |= uint64_t{1} << s;
            if ((p >> i) & 1) value |= uint64_t{1} << s;
        }
        if (other >= 0) {
            const size_t oe = model_.electron_spin(1 - r);
            mask |= uint64_t{1} << oe;
            if (other == 1) value |= uint64_t{1} << oe;
        }
        finish_line(ln, mask, value);
        return ln;
    }

    Line nmr_line(size_t r, size_t i, int electron, double x) {
        Line ln;
        ln.esr = false;
        ln.reg = r;
        ln.spin = model_.nucleus_spin(r, i);
        ln.electron = electron;
        const double g = model_.gamma_n_hz_per_t * model_.b_field_t +
                         model_.registers[r].hyperfine_hz[i] * half(electron == 1);
        ln.sign = g < 0 ? -1 : 1;
        ln.nu0 = ln.sign * x;
        const size_t e = model_.electron_spin(r);
        const uint64_t mask = (uint64_t{1} << ln.spin) | (uint64_t{1} << e);
        const uint64_t value = electron == 1 ? uint64_t{1} << e : 0;
        finish_line(ln, mask, value);
        return ln;
    }

    void add_tone(const GateOp &op, uint64_t assign_value) {
        const size_t target = op.target();
        const SpinRef ref = model_.spin_ref(target);
        const size_t r = ref.register_index;
        Tone tone;
        double theta = op.angle;
        double phase = op.phase + frame_[target];
        if (theta < 0) {
            theta = -theta;
            phase += kPi;
        }
        tone.phase = phase;
        auto bit_of = [&](size_t spin) { return ((assign_value >> spin) & 1) != 0; };
        if (ref.kind == SpinKind::kElectron) {
            uint32_t p = 0;
            for (size_t i = 0; i < model_.num_nuclei(r); ++i) {
                if (bit_of(model_.nucleus_spin(r, i))) p |= 1u << i;
            }
            const int other = model_.num_registers() == 2 ? (bit_of(model_.electron_spin(1 - r)) ? 1 : 0) : -1;
            const auto &T = table_.registers[r];
            const auto &M = lines_.registers[r];
            double x = (T.reference_hz - M.reference_hz) + (T.offsets_hz[p] - M.offsets_hz[p]);
            if (other == 1) {
                x += table_.exchange_hz - lines_.exchange_hz;
            }
            x += op.detuning_hz;
            tone.f_rabi = op.f_rabi_hz > 0 ? op.f_rabi_hz : opt_.esr_rabi_hz;
            tone.lines.push_back(esr_line(r, p, other, x));
            const bool single_branch =
                other >= 0 && std::any_of(op.condition.begin(), op.condition.end(), [&](const Control &c) {
                    return c.spin == model_.electron_spin(1 - r);
                });
            if (single_branch) {
                tone.exchange_branch = true;
                const size_t oe = model_.electron_spin(1 - r);
                uint64_t mask = uint64_t{1} << target | uint64_t{1} << oe;
                uint64_t value = uint64_t{1} << target | (other == 1 ? 0 : uint64_t{1} << oe);
                for (size_t i = 0; i < model_.num_nuclei(r); ++i) {
                    const size_t s = model_.nucleus_spin(r, i);
                    mask |= uint64_t{1} << s;
                    if ((p >> i) & 1) value |= uint64_t{1} << s;
                }
                split_condition(*cc_, mask, value, tone.cp_act_mask, tone.cp_act_value, tone.cp_frz_mask,
                                tone.cp_frz_value);
            }
            if (opt_.mode == DriveMode::kRealistic) {
                const double bw = opt_.bandwidth_factor * tone.f_rabi;
                const double f_target = esr_model(r, p, other);
                for (size_t r2 = 0; r2 < model_.num_registers(); ++r2) {
                    const std::vector<int> others = model_.num_registers() == 2 ? std::vector<int>{0, 1}
                                                                                 : std::vector<int>{-1};
                    for (uint32_t p2 = 0; p2 < (1u << model_.num_nuclei(r2)); ++p2) {
                        for (int o2 : others) {
                            if (r2 == r && p2 == p && o2 == other) continue;
                            double gap;
                            if (r2 == r) {
                                gap = (M.offsets_hz[p] - M.offsets_hz[p2]) +
                                      lines_.exchange_hz * ((other == 1) - (o2 == 1));
                            } else {
                                gap = f_target - esr_model(r2, p2, o2);
                            }
                            const double x2 = x + gap;
                            if (std::abs(x2) < bw) tone.lines.push_back(esr_line(r2, p2, o2, x2));
                        }
                    }
                }
            }
        } else {
            const size_t i = ref.nucleus_index;
            const int e = bit_of(model_.electron_spin(r)) ? 1 : 0;
            const double f_line = table_.nmr(r, i, e ? SpinState::kUp : SpinState::kDown);
            const double x = (f_line - lines_.nmr(r, i, e ? SpinState::kUp : SpinState::kDown)) + op.detuning_hz;
            tone.f_rabi = op.f_rabi_hz > 0 ? op.f_rabi_hz : opt_.nmr_rabi_ratio * f_line;
            tone.lines.push_back(nmr_line(r, i, e, x));
            if (opt_.mode == DriveMode::kRealistic) {
                const double bw = opt_.bandwidth_factor * tone.f_rabi;
                const double f_target = lines_.nmr(r, i, e ? SpinState::kUp : SpinState::kDown);
                for (size_t r2 = 0; r2 < model_.num_registers(); ++r2) {
                    for (size_t i2 = 0; i2 < model_.num_nuclei(r2); ++i2) {
                        for (int e2 : {0, 1}) {
                            if (r2 == r && i2 == i && e2 == e) continue;
                            const double x2 =
                                x + (f_target - lines_.nmr(r2, i2, e2 ? SpinState::kUp : SpinState::kDown));
                            if (std::abs(x2) < bw) tone.lines.push_back(nmr_line(r2, i2, e2, x2));
                        }
                    }
                }
            }
        }
        if (!(tone.f_rabi > 0) || !std::isfinite(tone.f_rabi)) {
            throw CircuitError("tone on " + model_.spin_name(target) + " has no valid Rabi frequency");
        }
        tone.duration = theta / (2 * kPi * tone.f_rabi);
        if (op_load_) {
            tone.load_shift_hz = slice_load(op, tone);
        }
        cc_->tones.push_back(std::move(tone));
    }

    std::vector<double> slice_load(const GateOp &op, const Tone &tone) const {
        return microwave_slice_shifts(op, model_, table_, *load_, opt_.nmr_rabi_ratio, tone.f_rabi);
    }

    void compile_op(const GateOp &op) {
        switch (op.kind) {
            case OpKind::kVirtualZ:
                frame_[op.target()] += op.angle;
                return;
            case OpKind::kBarrier:
                return;
            case OpKind::kEsr:
            case OpKind::kNmr: {
                if (op.angle == 0) {
                    return;
                }
                const std::vector<size_t> coupled = coupled_spins(op.target());
                uint64_t fixed_value = 0;
                std::vector<size_t> free;
                for (size_t s : coupled) {
                    auto it = std::find_if(op.condition.begin(), op.condition.end(),
                                           [&](const Control &c) { return c.spin == s; });
                    if (it == op.condition.end()) {
                        free.push_back(s);
                    } else if (it->state == SpinState::kUp) {
                        fixed_value |= uint64_t{1} << s;
                    }
                }
                op_load_ = load_ != nullptr && load_->enabled;
                // Tones for the unspecified couplings address disjoint subspaces and run in one slice.
                Instr in{Step::kTone};
                in.index = cc_->tones.size();
                in.count = size_t{1} << free.size();
                for (uint64_t k = 0; k < in.count; ++k) {
                    uint64_t v = fixed_value;
                    for (size_t j = 0; j < free.size(); ++j) {
                        if ((k >> j) & 1) v |= uint64_t{1} << free[j];
                    }
                    add_tone(op, v);
                }
                // Simultaneous tones share the slowest Rabi frequency of the slice.
                double slice = 0;
                for (size_t k = 0; k < in.count; ++k) {
                    slice = std::max(slice, cc_->tones[in.index + k].duration);
                }
                for (size_t k = 0; k < in.count; ++k) {
                    Tone &t = cc_->tones[in.index + k];
                    t.f_rabi *= t.duration / slice;
                    t.duration = slice;
                }
                in.duration = slice;
                cc_->program.push_back(in);
                cc_->duration += in.duration;
                return;
            }
            case OpKind::kIdle: {
                Instr in{Step::kIdle};
                in.duration = op.duration_s;
                if (load_ != nullptr && load_->enabled) {
                    // Idle slices carry their own load; represent them as a zero-line tone.
                    Tone tone;
                    tone.duration = op.duration_s;
                    GateOp idle = op;
                    tone.load_shift_hz = slice_load(idle, tone);
                    in.kind = Step::kTone;
                    in.index = cc_->tones.size();
                    in.duration = op.duration_s;
                    cc_->tones.push_back(std::move(tone));
                }
                cc_->program.push_back(in);
                cc_->duration += op.duration_s;
                return;
            }
            case OpKind::kInitElectron: {
                Instr in{Step::kInit};
                in.index = op.target();
                cc_->program.push_back(in);
                return;
            }
            case OpKind::kMeasureElectron:
            case OpKind::kReadNucleus: {
                Instr in{op.kind == OpKind::kMeasureElectron ? Step::kMeasure : Step::kRead};
                in.index = op.target();
                in.output = op.output;
                in.tally = tally_index(op.tally);
                in.postselect = op.postselect;
                if (op.output) ++cc_->output_bits;
                cc_->program.push_back(in);
                return;
            }
            case OpKind::kDepolarize: {
                Instr in{Step::kDepolarize};
                in.index = op.targets[0];
                if (op.targets.size() > 1) in.spin2 = op.targets[1];
                in.param = op.param;
                cc_->program.push_back(in);
                return;
            }
            case OpKind::kNuclearFlip: {
                Instr in{Step::kFlip};
                in.index = op.target();
                in.param = op.param;
                in.param2 = op.param2;
                cc_->program.push_back(in);
                return;
            }
        }
    }

   public:
    const MicrowaveLoadModel *load_ = nullptr;

   private:
    const DeviceModel &model_;
    const FrequencyTable &table_;
    const FrequencyTable &lines_;
    const EngineOptions &opt_;
    CompiledCircuit *cc_ = nullptr;
    std::vector<double> frame_;
    bool op_load_ = false;
};

// ---------------------------------------------------------------------------------------------
// Execution.

struct ShotState {
    std::vector<Complex> amp;
    uint64_t frozen = 0;  // full-basis bits of frozen spins
    double t = 0;
};

class Executor {
   public:
    Executor(const DeviceModel &m, const CompiledCircuit &c, const NoiseContext &n, bool deterministic)
        : model_(m), cc_(c), noise_(n), det_(deterministic) {
        if (noise_.offsets.collective_esr_hz.size() != m.num_registers() ||
            noise_.offsets.hyperfine_drift_hz.size() != m.num_spins()) {
            throw ShapeError("noise context offsets do not match the device model");
        }
    }

    // Runs one shot. Returns false if the shot was rejected by post-selection.
    bool run(ShotState &st, std::mt19937_64 *rng, ShotRecord *rec, std::vector<std::pair<size_t, int>> *terminal) {
        dz_.assign(cc_.num_spins, 0.0);
        if (!det_) {
            for (size_t s = 0; s < cc_.num_spins && s < noise_.t2_star_s.size(); ++s) {
                if (noise_.t2_star_s[s] > 0) dz_[s] = dephasing_offset(noise_.t2_star_s[s], *rng);
            }
        }
        std::vector<int> tallies(cc_.tally_names.size(), 0);
        bool measured = false;
        for (const Instr &in : cc_.program) {
            switch (in.kind) {
                case Step::kTone:
                    if (measured && terminal != nullptr) {
                        throw CircuitError("exact evaluation needs terminal measurements");
                    }
                    for (size_t k = 0; k < in.count; ++k) {
                        apply_tone(st, cc_.tones[in.index + k], k == 0);
                    }
                    hahn(st, in.duration, rng);
                    st.t += in.duration;
                    break;
                case Step::kIdle:
                    hahn(st, in.duration, rng);
                    st.t += in.duration;
                    break;
                case Step::kInit:
                    if (measured && terminal != nullptr) {
                        throw CircuitError("exact evaluation needs terminal measurements");
                    }
                    init_electron(st, in.index, rng);
                    break;
                case Step::kMeasure:
                case Step::kRead: {
                    if (terminal != nullptr) {
                        measured = true;
                        terminal->push_back({in.index, in.kind == Step::kMeasure ? 1 : 2});
                        terminal_ops_.push_back(in);
                        break;
                    }
                    const bool actual = measure(st, in.index, *rng);
                    bool reported = actual;
                    std::uniform_real_distribution<double> u(0.0, 1.0);
                    if (in.kind == Step::kMeasure) {
                        const double keep = actual ? noise_.electron_read_up : noise_.electron_read_down;
                        if (u(*rng) >= keep) reported = !reported;
                    } else if (noise_.nuclear_read_error > 0 && u(*rng) < noise_.nuclear_read_error) {
                        reported = !reported;
                    }
                    if (in.output) rec->bits.push_back(reported ? '1' : '0');
                    if (in.tally >= 0 && reported) ++tallies[in.tally];
                    if (in.postselect >= 0 && static_cast<int>(reported) != in.postselect) {
                        rec->accepted = false;
                        return false;
                    }
                    break;
                }
                case Step::kDepolarize:
                    if (det_) throw CircuitError("stochastic channels cannot be evaluated exactly");
                    depolarize(st, in, *rng);
                    break;
                case Step::kFlip:
                    if (det_) throw CircuitError("stochastic channels cannot be evaluated exactly");
                    flip(st, in, *rng);
                    break;
            }
        }
        if (rec != nullptr) {
            for (size_t k = 0; k < tallies.size(); ++k) {
                rec->tallies.push_back({cc_.tally_names[k], tallies[k]});
            }
            rec->duration_s = st.t;
        }
        return true;
    }

    const std::vector<Instr> &terminal_ops() const {
        return terminal_ops_;
    }

   private:
    double line_shift(const Line &ln) const {
        const auto &o = noise_.offsets;
        double d;
        if (ln.esr) {
            d = o.collective_esr_hz[ln.reg] + dz_[ln.spin];
            for (size_t i = 0; i < model_.num_nuclei(ln.reg); ++i) {
                const double h = o.hyperfine_drift_hz[model_.nucleus_spin(ln.reg, i)];
                if (h != 0) d += h * half((ln.pattern >> i) & 1);
            }
            if (ln.other >= 0) d += o.exchange_hz * half(ln.other == 1);
        } else {
            d = o.hyperfine_drift_hz[ln.spin] * half(ln.electron == 1) + dz_[ln.spin];
        }
        return d;
    }

    void apply_tone(ShotState &st, const Tone &tone, bool first) {
        const double T = tone.duration;
        const bool loaded = !tone.load_shift_hz.empty();
        for (const Line &ln : tone.lines) {
            if ((st.frozen & ln.frz_mask) != ln.frz_value) continue;
            double d = line_shift(ln);
            if (loaded) d += ln.sign * tone.load_shift_hz[ln.spin];
            const double nu = ln.nu0 - d;
            const double om = tone.f_rabi;
            const double w = std::hypot(nu, om);
            const double a = kPi * T * w;
            const double c = std::cos(a);
            const double s = std::sin(a) / w;
            const Complex im(0, 1);
            Mat2 u{Complex(c, -s * nu), -im * s * om * std::polar(1.0, -tone.phase),
                   -im * s * om * std::polar(1.0, tone.phase), Complex(c, s * nu)};
            if (nu != 0) {
                const Complex e1 = std::polar(1.0, kPi * nu * T);
                const Complex e2 = std::polar(1.0, kPi * nu * (2 * st.t + T));
                u.m00 *= e1;
                u.m11 *= std::conj(e1);
                u.m01 *= e2;
                u.m10 *= std::conj(e2);
            }
            const uint32_t tb = uint32_t{1} << ln.abit;
            for (uint32_t i : ln.b0) {
                const Complex a0 = st.amp[i];
                const Complex a1 = st.amp[i | tb];
                st.amp[i] = u.m00 * a0 + u.m01 * a1;
                st.amp[i | tb] = u.m10 * a0 + u.m11 * a1;
            }
        }
        if (tone.exchange_branch && noise_.crot_phase_error_rad != 0 &&
            (st.frozen & tone.cp_frz_mask) == tone.cp_frz_value) {
            const Complex ph = std::polar(1.0, noise_.crot_phase_error_rad);
            for (size_t i = 0; i < st.amp.size(); ++i) {
                if ((i & tone.cp_act_mask) == tone.cp_act_value) st.amp[i] *= ph;
            }
        }
        if (loaded && first) {
            // Diagonal energy shift of every active spin for the slice duration.
            std::vector<double> coeff(cc_.active.size(), 0.0);
            bool any = false;
            for (size_t b = 0; b < cc_.active.size(); ++b) {
                coeff[b] = tone.load_shift_hz[cc_.active[b]];
                any = any || coeff[b] != 0;
            }
            if (any) {
                for (size_t i = 0; i < st.amp.size(); ++i) {
                    const uint64_t full = st.frozen | scatter(cc_, i);
                    double e = 0;
                    for (size_t b = 0; b < cc_.active.size(); ++b) {
                        if (coeff[b] == 0) continue;
                        const size_t spin = cc_.active[b];
                        double sign = 1;
                        if (!model_.is_electron(spin)) {
                            const SpinRef ref = model_.spin_ref(spin);
                            const bool eu = (full >> model_.electron_spin(ref.register_index)) & 1;
                            const double g = model_.gamma_n_hz_per_t * model_.b_field_t +
                                             model_.registers[ref.register_index].hyperfine_hz[ref.nucleus_index] *
                                                 half(eu);
                            sign = g < 0 ? -1 : 1;
                        }
                        e += sign * coeff[b] * half((i >> b) & 1);
                    }
                    st.amp[i] *= std::polar(1.0, -2 * kPi * e * T);
                }
            }
        }
    }

    void hahn(ShotState &st, double T, std::mt19937_64 *rng) {
        if (det_ || T <= 0) return;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (size_t b = 0; b < cc_.active.size(); ++b) {
            const size_t s = cc_.active[b];
            if (s >= noise_.t2_hahn_s.size() || !(noise_.t2_hahn_s[s] > 0)) continue;
            const double p = 0.5 * (1 - std::exp(-T / noise_.t2_hahn_s[s]));
            if (u(*rng) < p) pauli(st, s, 3);
        }
    }

    double prob_up(const ShotState &st, size_t spin) const {
        const int b = cc_.active_bit[spin];
        if (b < 0) return ((st.frozen >> spin) & 1) ? 1.0 : 0.0;
        const size_t bit = size_t{1} << b;
        double p = 0;
        for (size_t i = 0; i < st.amp.size(); ++i) {
            if (i & bit) p += std::norm(st.amp[i]);
        }
        return p;
    }

    void project(ShotState &st, size_t spin, bool up) {
        const int b = cc_.active_bit[spin];
        if (b < 0) return;
        const size_t bit = size_t{1} << b;
        double p = 0;
        for (size_t i = 0; i < st.amp.size(); ++i) {
            if (((i & bit) != 0) == up) {
                p += std::norm(st.amp[i]);
            } else {
                st.amp[i] = 0;
            }
        }
        const double scale = 1.0 / std::sqrt(p);
        for (auto &a : st.amp) a *= scale;
    }

    bool measure(ShotState &st, size_t spin, std::mt19937_64 &rng) {
        const double p = prob_up(st, spin);
        bool up;
        if (p <= 0) {
            up = false;
        } else if (p >= 1) {
            up = true;
        } else {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            up = u(rng) < p;
        }
        project(st, spin, up);
        return up;
    }

    // Pauli 1 = X, 2 = Y, 3 = Z.
    void pauli(ShotState &st, size_t spin, int which) {
        const int b = cc_.active_bit[spin];
        if (b < 0) {
            if (which == 1 || which == 2) st.frozen ^= uint64_t{1} << spin;
            return;
        }
        const size_t bit = size_t{1} << b;
        const Complex im(0, 1);
        for (size_t i = 0; i < st.amp.size(); ++i) {
            if (i & bit) continue;
            Complex &a0 = st.amp[i];
            Complex &a1 = st.amp[i | bit];
            if (which == 1) {
                std::swap(a0, a1);
            } else if (which == 2) {
                const Complex t = a0;
                a0 = -im * a1;
                a1 = im * t;
            } else {
                a1 = -a1;
            }
        }
    }

    void init_electron(ShotState &st, size_t spin, std::mt19937_64 *rng) {
        bool up;
        if (det_) {
            const double p = prob_up(st, spin);
            if (p > 1e-12 && p < 1 - 1e-12) {
                throw CircuitError("exact evaluation cannot reset an electron in superposition");
            }
            up = p > 0.5;
            project(st, spin, up);
        } else {
            up = measure(st, spin, *rng);
        }
        if (up) pauli(st, spin, 1);
        if (!det_ && noise_.electron_init_error > 0) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            if (u(*rng) < noise_.electron_init_error) pauli(st, spin, 1);
        }
    }

    void depolarize(ShotState &st, const Instr &in, std::mt19937_64 &rng) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        if (u(rng) < in.param) return;
        const bool two = in.spin2 != SIZE_MAX;
        std::uniform_int_distribution<int> pick(0, two ? 15 : 3);
        const int k = pick(rng);
        if (k & 3) pauli(st, in.index, k & 3);
        if (two && (k >> 2)) pauli(st, in.spin2, k >> 2);
    }

    void flip(ShotState &st, const Instr &in, std::mt19937_64 &rng) {
        const double pu = prob_up(st, in.index);
        const double p_down_jump = in.param * pu;           // up -> down
        const double p_up_jump = in.param2 * (1 - pu);      // down -> up
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double x = u(rng);
        const int b = cc_.active_bit[in.index];
        if (x < p_down_jump) {
            project(st, in.index, true);
            pauli(st, in.index, 1);
        } else if (x < p_down_jump + p_up_jump) {
            project(st, in.index, false);
            pauli(st, in.index, 1);
        } else if (b >= 0 && (in.param > 0 || in.param2 > 0)) {
            // No-jump Kraus operator diag(sqrt(1 - p_du), sqrt(1 - p_ud)).
            const size_t bit = size_t{1} << b;
            const double k0 = std::sqrt(1 - in.param2);
            const double k1 = std::sqrt(1 - in.param);
            double norm = 0;
            for (size_t i = 0; i < st.amp.size(); ++i) {
                st.amp[i] *= (i & bit) ? k1 : k0;
                norm += std::norm(st.amp[i]);
            }
            const double scale = 1.0 / std::sqrt(norm);
            for (auto &a : st.amp) a *= scale;
        }
    }

    const DeviceModel &model_;
    const CompiledCircuit &cc_;
    const NoiseContext &noise_;
    bool det_;
    std::vector<double> dz_;
    std::vector<Instr> terminal_ops_;
};

ShotState initial_state(const CompiledCircuit &cc, uint64_t full) {
    ShotState st;
    st.amp.assign(size_t{1} << cc.active.size(), Complex(0, 0));
    st.amp[gather(cc, full)] = 1;
    st.frozen = full & cc.frozen_mask;
    return st;
}

void check_norm(const ShotState &st, double tol) {
    double n = 0;
    for (const auto &a : st.amp) n += std::norm(a);
    if (!(std::abs(n - 1) < tol)) {
        throw Error("internal invariant: state norm drifted to " + std::to_string(n));
    }
}

}  // namespace

// ---------------------------------------------------------------------------------------------

Simulator::Simulator(DeviceModel truth, FrequencyTable table, EngineOptions options)
    : truth_(std::move(truth)), table_(std::move(table)), options_(options) {
    truth_.validate();
    model_lines_ = enumerate_lines(truth_);
    if (table_.registers.size() != model_lines_.registers.size()) {
        throw ShapeError("frequency table register count does not match the model");
    }
    for (size_t r = 0; r < table_.registers.size(); ++r) {
        if (table_.registers[r].offsets_hz.size() != model_lines_.registers[r].offsets_hz.size() ||
            table_.registers[r].nmr_hz.size() != model_lines_.registers[r].nmr_hz.size()) {
            throw ShapeError("frequency table shape does not match register " + truth_.registers[r].label);
        }
    }
    if (!(options_.esr_rabi_hz > 0) || !(options_.nmr_rabi_ratio > 0) || !(options_.bandwidth_factor > 0)) {
        throw ConfigError("engine", "Rabi settings and bandwidth must be positive");
    }
}

Simulator::~Simulator() = default;

std::shared_ptr<const CompiledCircuit> Simulator::compile(const Circuit &circuit) const {
    Compiler c(truth_, table_, model_lines_, options_);
    return c.compile(circuit, false);
}

namespace {

std::shared_ptr<CompiledCircuit> compile_with(const DeviceModel &m, const FrequencyTable &t, const FrequencyTable &ml,
                                              const EngineOptions &o, const Circuit &circuit, const NoiseContext &n,
                                              bool all_active) {
    Compiler c(m, t, ml, o);
    c.load_ = &n.load;
    return c.compile(circuit, all_active);
}

double truth_probability(const CompiledCircuit &cc, const ShotState &st, const std::vector<Control> &pattern) {
    uint64_t mask = 0, value = 0;
    for (const auto &c : pattern) {
        mask |= uint64_t{1} << c.spin;
        if (c.state == SpinState::kUp) value |= uint64_t{1} << c.spin;
    }
    uint64_t am, av, fm, fv;
    split_condition(cc, mask, value, am, av, fm, fv);
    if ((st.frozen & fm) != fv) return 0.0;
    double p = 0;
    for (size_t i = 0; i < st.amp.size(); ++i) {
        if ((i & am) == av) p += std::norm(st.amp[i]);
    }
    return p;
}

}  // namespace

std::vector<ShotRecord> Simulator::run_shots(const Circuit &circuit, const NoiseContext &noise,
                                             const RunOptions &run) const {
    auto cc = compile_with(truth_, table_, model_lines_, options_, circuit, noise, false);
    return run_shots(*cc, noise, run);
}

std::vector<ShotRecord> Simulator::run_shots(const CompiledCircuit &cc, const NoiseContext &noise,
                                             const RunOptions &run) const {
    if (run.shots < 1) {
        throw DomainError("shots must be >= 1");
    }
    std::vector<ShotRecord> out(run.shots);
    auto worker = [&](size_t begin, size_t end) {
        Executor ex(truth_, cc, noise, false);
        for (size_t shot = begin; shot < end; ++shot) {
            std::mt19937_64 rng(substream_seed(run.seed, shot));
            uint64_t full = run.initial_state;
            if (noise.nuclear_init_error > 0) {
                std::uniform_real_distribution<double> u(0.0, 1.0);
                for (size_t s = 0; s < cc.num_spins; ++s) {
                    if (!truth_.is_electron(s) && u(rng) < noise.nuclear_init_error) full ^= uint64_t{1} << s;
                }
            }
            ShotState st = initial_state(cc, full);
            ShotRecord &rec = out[shot];
            if (ex.run(st, &rng, &rec, nullptr)) {
                check_norm(st, options_.norm_tolerance);
                if (!run.truth_pattern.empty()) rec.truth_probability = truth_probability(cc, st, run.truth_pattern);
            }
        }
    };
    const size_t threads = std::max<size_t>(1, std::min(options_.threads, run.shots));
    if (threads == 1) {
        worker(0, run.shots);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(threads);
        const size_t chunk = (run.shots + threads - 1) / threads;
        for (size_t k = 0; k < threads; ++k) {
            pool.emplace_back([&, k] {
                try {
                    worker(k * chunk, std::min(run.shots, (k + 1) * chunk));
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        for (auto &t : pool) t.join();
        for (auto &e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    return out;
}

CountsTable Simulator::run(const Circuit &circuit, const NoiseContext &noise, size_t shots, uint64_t seed) const {
    RunOptions ro;
    ro.shots = shots;
    ro.seed = seed;
    CountsTable t;
    for (const auto &rec : run_shots(circuit, noise, ro)) {
        if (rec.accepted) {
            t.add(rec.bits);
        } else {
            ++t.rejected;
        }
    }
    return t;
}

std::map<std::string, double> Simulator::exact_probabilities(const Circuit &circuit,
                                                             const NoiseContext &noise) const {
    auto cc = compile_with(truth_, table_, model_lines_, options_, circuit, noise, false);
    Executor ex(truth_, *cc, noise, true);
    ShotState st = initial_state(*cc, 0);
    std::vector<std::pair<size_t, int>> terminal;
    ex.run(st, nullptr, nullptr, &terminal);
    check_norm(st, options_.norm_tolerance);
    const auto &ops = ex.terminal_ops();
    for (size_t a = 0; a < ops.size(); ++a) {
        for (size_t b = 0; b < a; ++b) {
            if (ops[a].index == ops[b].index) {
                throw CircuitError("exact evaluation measures " + truth_.spin_name(ops[a].index) + " twice");
            }
        }
    }
    // Joint distribution of the true spin values of the measured spins.
    const size_t m = ops.size();
    std::vector<double> joint(size_t{1} << m, 0.0);
    for (size_t i = 0; i < st.amp.size(); ++i) {
        const double p = std::norm(st.amp[i]);
        if (p == 0) continue;
        const uint64_t full = st.frozen | scatter(*cc, i);
        size_t key = 0;
        for (size_t k = 0; k < m; ++k) {
            if ((full >> ops[k].index) & 1) key |= size_t{1} << k;
        }
        joint[key] += p;
    }
    // Readout confusion, one measured spin at a time.
    for (size_t k = 0; k < m; ++k) {
        double keep_up, keep_down;
        if (ops[k].kind == Step::kMeasure) {
            keep_up = noise.electron_read_up;
            keep_down = noise.electron_read_down;
        } else {
            keep_up = keep_down = 1 - noise.nuclear_read_error;
        }
        const size_t bit = size_t{1} << k;
        for (size_t key = 0; key < joint.size(); ++key) {
            if (key & bit) continue;
            const double p0 = joint[key];
            const double p1 = joint[key | bit];
            joint[key] = keep_down * p0 + (1 - keep_up) * p1;
            joint[key | bit] = (1 - keep_down) * p0 + keep_up * p1;
        }
    }
    std::map<std::string, double> out;
    double accepted = 0;
    for (size_t key = 0; key < joint.size(); ++key) {
        bool ok = true;
        std::string bits;
        for (size_t k = 0; k < m; ++k) {
            const bool up = (key >> k) & 1;
            if (ops[k].postselect >= 0 && static_cast<int>(up) != ops[k].postselect) ok = false;
            if (ops[k].output) bits.push_back(up ? '1' : '0');
        }
        if (!ok) continue;
        out[bits] += joint[key];
        accepted += joint[key];
    }
    if (!(accepted > 0)) {
        throw DomainError("post-selection rejects every outcome");
    }
    for (auto &[k, v] : out) v /= accepted;
    return out;
}

StateVector Simulator::final_state(const Circuit &circuit, const NoiseContext &noise,
                                   const StateVector *initial) const {
    for (const auto &op : circuit.ops) {
        if (op.kind == OpKind::kMeasureElectron || op.kind == OpKind::kReadNucleus) {
            throw CircuitError("final_state does not accept measurements");
        }
    }
    auto cc = compile_with(truth_, table_, model_lines_, options_, circuit, noise, initial != nullptr);
    ShotState st;
    if (initial != nullptr) {
        if (initial->num_spins() != truth_.num_spins()) {
            throw ShapeError("initial state does not match the model");
        }
        st.amp = initial->amplitudes();
    } else {
        st = initial_state(*cc, 0);
    }
    Executor ex(truth_, *cc, noise, true);
    ex.run(st, nullptr, nullptr, nullptr);
    check_norm(st, options_.norm_tolerance);
    StateVector out(truth_.num_spins());
    auto &amp = out.amplitudes();
    std::fill(amp.begin(), amp.end(), Complex(0, 0));
    for (size_t i = 0; i < st.amp.size(); ++i) {
        amp[st.frozen | scatter(*cc, i)] = st.amp[i];
    }
    // Logical frame: undo the pending virtual Z of every spin.
    for (size_t s = 0; s < cc->final_frame.size(); ++s) {
        const double f = cc->final_frame[s];
        if (f != 0) out.apply_1q(s, rotation_z(-f));
    }
    return out;
}

double Simulator::duration_s(const Circuit &circuit) const {
    return compile(circuit)->duration;
}

StateVector apply_gate(const StateVector &state, const GateOp &op, const DeviceModel &model,
                       const FrequencyTable &table, const NoiseContext *noise, const EngineOptions &options) {
    Simulator sim(model, table, options);
    Circuit c;
    c.append(op);
    const NoiseContext ctx = noise != nullptr ? *noise : NoiseContext::ideal(model);
    return sim.final_state(c, ctx, &state);
}

}  // namespace donorsim
