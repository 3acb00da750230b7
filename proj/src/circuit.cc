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

#include "donorsim/circuit.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "donorsim/errors.h"

namespace donorsim {

namespace {

constexpr OpKind kAllKinds[] = {OpKind::kEsr,        OpKind::kNmr,          OpKind::kVirtualZ,
                                OpKind::kInitElectron, OpKind::kMeasureElectron, OpKind::kReadNucleus,
                                OpKind::kIdle,       OpKind::kBarrier,      OpKind::kDepolarize,
                                OpKind::kNuclearFlip};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string op_label(const GateOp &op, size_t index) {
    return std::string(op_kind_name(op.kind)) + " op #" + std::to_string(index);
}

}  // namespace

const char *op_kind_name(OpKind kind) {
    switch (kind) {
        case OpKind::kEsr:
            return "esr";
        case OpKind::kNmr:
            return "nmr";
        case OpKind::kVirtualZ:
            return "vz";
        case OpKind::kInitElectron:
            return "init";
        case OpKind::kMeasureElectron:
            return "measure";
        case OpKind::kReadNucleus:
            return "read";
        case OpKind::kIdle:
            return "idle";
        case OpKind::kBarrier:
            return "barrier";
        case OpKind::kDepolarize:
            return "depolarize";
        case OpKind::kNuclearFlip:
            return "flip";
    }
    return "?";
}

size_t GateOp::target() const {
    if (targets.empty()) {
        throw CircuitError(std::string(op_kind_name(kind)) + " op has no target");
    }
    return targets.front();
}

Circuit &Circuit::append(GateOp op) {
    ops.push_back(std::move(op));
    return *this;
}

Circuit &Circuit::append(const Circuit &other) {
    const size_t offset = ops.size();
    ops.insert(ops.end(), other.ops.begin(), other.ops.end());
    for (auto b : other.repeat_blocks) {
        b.begin += offset;
        b.end += offset;
        repeat_blocks.push_back(b);
    }
    return *this;
}

Circuit &Circuit::esr(size_t electron, double angle, double phase, std::vector<Control> condition) {
    GateOp op;
    op.kind = OpKind::kEsr;
    op.targets = {electron};
    op.angle = angle;
    op.phase = phase;
    op.condition = std::move(condition);
    return append(std::move(op));
}

Circuit &Circuit::nmr(size_t nucleus, double angle, double phase, std::vector<Control> condition) {
    GateOp op;
    op.kind = OpKind::kNmr;
    op.targets = {nucleus};
    op.angle = angle;
    op.phase = phase;
    op.condition = std::move(condition);
    return append(std::move(op));
}

Circuit &Circuit::virtual_z(size_t spin, double angle) {
    GateOp op;
    op.kind = OpKind::kVirtualZ;
    op.targets = {spin};
    op.angle = angle;
    return append(std::move(op));
}

Circuit &Circuit::init_electron(size_t electron) {
    GateOp op;
    op.kind = OpKind::kInitElectron;
    op.targets = {electron};
    return append(std::move(op));
}

Circuit &Circuit::measure_electron(size_t electron, bool output, std::string tally) {
    GateOp op;
    op.kind = OpKind::kMeasureElectron;
    op.targets = {electron};
    op.output = output;
    op.tally = std::move(tally);
    return append(std::move(op));
}

Circuit &Circuit::read_nucleus(size_t nucleus, bool output, int postselect) {
    GateOp op;
    op.kind = OpKind::kReadNucleus;
    op.targets = {nucleus};
    op.output = output;
    op.postselect = postselect;
    return append(std::move(op));
}

Circuit &Circuit::idle(double duration_s) {
    GateOp op;
    op.kind = OpKind::kIdle;
    op.duration_s = duration_s;
    return append(std::move(op));
}

Circuit &Circuit::barrier() {
    GateOp op;
    op.kind = OpKind::kBarrier;
    return append(std::move(op));
}

Circuit &Circuit::depolarize(std::vector<size_t> spins, double p) {
    GateOp op;
    op.kind = OpKind::kDepolarize;
    op.targets = std::move(spins);
    op.param = p;
    return append(std::move(op));
}

Circuit &Circuit::nuclear_flip(size_t nucleus, double p_up_to_down, double p_down_to_up) {
    GateOp op;
    op.kind = OpKind::kNuclearFlip;
    op.targets = {nucleus};
    op.param = p_up_to_down;
    op.param2 = p_down_to_up;
    return append(std::move(op));
}

Circuit &Circuit::repeat(size_t begin, size_t end, size_t count, std::string block_label) {
    repeat_blocks.push_back({begin, end, count, std::move(block_label)});
    return *this;
}

std::vector<GateOp> Circuit::flattened() const {
    std::vector<GateOp> out;
    auto expand = [&](auto &&self, size_t lo, size_t hi, size_t skip) -> void {
        size_t i = lo;
        while (i < hi) {
            size_t best = repeat_blocks.size();
            for (size_t b = 0; b < repeat_blocks.size(); ++b) {
                const auto &rb = repeat_blocks[b];
                if (b != skip && rb.begin == i && rb.end <= hi &&
                    (best == repeat_blocks.size() || rb.end > repeat_blocks[best].end)) {
                    best = b;
                }
            }
            if (best == repeat_blocks.size()) {
                out.push_back(ops[i]);
                ++i;
                continue;
            }
            for (size_t r = 0; r < repeat_blocks[best].count; ++r) {
                self(self, i, repeat_blocks[best].end, best);
            }
            i = repeat_blocks[best].end;
        }
    };
    expand(expand, 0, ops.size(), repeat_blocks.size());
    return out;
}

void Circuit::validate(const DeviceModel &model) const {
    const size_t n = model.num_spins();
    for (size_t k = 0; k < ops.size(); ++k) {
        const GateOp &op = ops[k];
        for (size_t t : op.targets) {
            if (t >= n) {
                throw CircuitError(op_label(op, k) + ": target spin " + std::to_string(t) + " does not exist");
            }
        }
        auto need_targets = [&](size_t count) {
            if (op.targets.size() != count) {
                throw CircuitError(op_label(op, k) + ": expected " + std::to_string(count) + " target(s)");
            }
        };
        auto need_electron = [&](bool electron) {
            if (model.is_electron(op.target()) != electron) {
                throw CircuitError(op_label(op, k) + ": target " + model.spin_name(op.target()) + " must be " +
                                   (electron ? "an electron" : "a nucleus"));
            }
        };
        switch (op.kind) {
            case OpKind::kEsr:
            case OpKind::kNmr: {
                need_targets(1);
                need_electron(op.kind == OpKind::kEsr);
                if (!std::isfinite(op.angle) || !(op.angle > -4 * std::numbers::pi) ||
                    op.angle > 4 * std::numbers::pi) {
                    throw CircuitError(op_label(op, k) + ": angle outside (-4pi, 4pi]");
                }
                const SpinRef tref = model.spin_ref(op.target());
                for (size_t c = 0; c < op.condition.size(); ++c) {
                    const Control &ctl = op.condition[c];
                    if (ctl.spin >= n) {
                        throw CircuitError(op_label(op, k) + ": control spin does not exist");
                    }
                    if (ctl.spin == op.target()) {
                        throw CircuitError(op_label(op, k) + ": target listed as its own control");
                    }
                    for (size_t c2 = 0; c2 < c; ++c2) {
                        if (op.condition[c2].spin == ctl.spin) {
                            throw CircuitError(op_label(op, k) + ": duplicate control " + model.spin_name(ctl.spin));
                        }
                    }
                    const SpinRef cref = model.spin_ref(ctl.spin);
                    bool allowed;
                    if (op.kind == OpKind::kEsr) {
                        allowed = cref.kind == SpinKind::kElectron
                                      ? cref.register_index != tref.register_index
                                      : cref.register_index == tref.register_index;
                    } else {
                        allowed = cref.kind == SpinKind::kElectron && cref.register_index == tref.register_index;
                    }
                    if (!allowed) {
                        throw CircuitError(op_label(op, k) + ": " + model.spin_name(ctl.spin) +
                                           " is not coupled to the line of " + model.spin_name(op.target()));
                    }
                }
                if (op.f_rabi_hz < 0) {
                    throw CircuitError(op_label(op, k) + ": negative Rabi frequency");
                }
                break;
            }
            case OpKind::kVirtualZ:
                need_targets(1);
                break;
            case OpKind::kInitElectron:
            case OpKind::kMeasureElectron:
                need_targets(1);
                need_electron(true);
                break;
            case OpKind::kReadNucleus:
            case OpKind::kNuclearFlip:
                need_targets(1);
                need_electron(false);
                break;
            case OpKind::kIdle:
                if (!(op.duration_s >= 0)) {
                    throw CircuitError(op_label(op, k) + ": negative idle duration");
                }
                break;
            case OpKind::kBarrier:
                break;
            case OpKind::kDepolarize:
                if (op.targets.empty() || op.targets.size() > 2) {
                    throw CircuitError(op_label(op, k) + ": depolarizing channel acts on one or two spins");
                }
                break;
        }
        if ((op.kind == OpKind::kDepolarize || op.kind == OpKind::kNuclearFlip) &&
            (!(op.param >= 0 && op.param <= 1) || !(op.param2 >= 0 && op.param2 <= 1))) {
            throw CircuitError(op_label(op, k) + ": probability outside [0, 1]");
        }
        if (op.postselect < -1 || op.postselect > 1) {
            throw CircuitError(op_label(op, k) + ": postselect must be -1, 0 or 1");
        }
    }
    for (size_t i = 0; i < repeat_blocks.size(); ++i) {
        const auto &a = repeat_blocks[i];
        if (a.begin >= a.end || a.end > ops.size()) {
            throw CircuitError("repeat block " + std::to_string(i) + " has an invalid range");
        }
        for (size_t j = 0; j < i; ++j) {
            const auto &b = repeat_blocks[j];
            const bool disjoint = a.end <= b.begin || b.end <= a.begin;
            const bool nested = (a.begin >= b.begin && a.end <= b.end) || (b.begin >= a.begin && b.end <= a.end);
            const bool same = a.begin == b.begin && a.end == b.end;
            if ((!disjoint && !nested) || same) {
                throw CircuitError("repeat blocks " + std::to_string(j) + " and " + std::to_string(i) +
                                   " are not well nested");
            }
        }
    }
}

size_t Circuit::physical_op_count() const {
    return std::count_if(ops.begin(), ops.end(),
                         [](const GateOp &op) { return op.kind == OpKind::kEsr || op.kind == OpKind::kNmr; });
}

std::string Circuit::to_text(const DeviceModel &model) const {
    std::ostringstream out;
    out << "# circuit " << label << "\n";
    std::vector<RepeatBlock> blocks = repeat_blocks;
    std::sort(blocks.begin(), blocks.end(), [](const RepeatBlock &a, const RepeatBlock &b) {
        return a.begin != b.begin ? a.begin < b.begin : a.end > b.end;
    });
    std::vector<size_t> open_ends;
    size_t bi = 0;
    for (size_t i = 0; i <= ops.size(); ++i) {
        while (!open_ends.empty() && open_ends.back() == i) {
            out << "end\n";
            open_ends.pop_back();
        }
        if (i == ops.size()) {
            break;
        }
        while (bi < blocks.size() && blocks[bi].begin == i) {
            out << "repeat " << blocks[bi].count;
            if (!blocks[bi].label.empty()) {
                out << " " << blocks[bi].label;
            }
            out << "\n";
            open_ends.push_back(blocks[bi].end);
            ++bi;
        }
        const GateOp &op = ops[i];
        out << op_kind_name(op.kind);
        if (!op.targets.empty()) {
            out << " ";
            for (size_t t = 0; t < op.targets.size(); ++t) {
                out << (t ? "," : "") << model.spin_name(op.targets[t]);
            }
        }
        if (op.angle != 0) out << " angle=" << fmt(op.angle);
        if (op.phase != 0) out << " phase=" << fmt(op.phase);
        if (!op.condition.empty()) {
            out << " if=";
            for (size_t c = 0; c < op.condition.size(); ++c) {
                out << (c ? "," : "") << model.spin_name(op.condition[c].spin) << ":"
                    << (op.condition[c].state == SpinState::kUp ? 1 : 0);
            }
        }
        if (op.detuning_hz != 0) out << " detuning=" << fmt(op.detuning_hz);
        if (op.f_rabi_hz != 0) out << " rabi=" << fmt(op.f_rabi_hz);
        if (op.duration_s != 0) out << " duration=" << fmt(op.duration_s);
        if (op.param != 0) out << " p=" << fmt(op.param);
        if (op.param2 != 0) out << " p2=" << fmt(op.param2);
        if (op.output) out << " out";
        if (!op.tally.empty()) out << " tally=" << op.tally;
        if (op.postselect >= 0) out << " post=" << op.postselect;
        out << "\n";
    }
    return out.str();
}

Circuit parse_circuit(const std::string &text, const DeviceModel &model) {
    Circuit c;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    std::vector<std::pair<size_t, RepeatBlock>> stack;
    auto fail = [&](const std::string &msg) -> void {
        throw CircuitError("line " + std::to_string(line_no) + ": " + msg);
    };
    auto number = [&](const std::string &s) {
        try {
            size_t pos = 0;
            double v = std::stod(s, &pos);
            if (pos != s.size()) fail("bad number '" + s + "'");
            return v;
        } catch (const std::logic_error &) {
            fail("bad number '" + s + "'");
        }
        return 0.0;
    };
    auto spin = [&](const std::string &name) {
        try {
            return model.find_spin(name);
        } catch (const ShapeError &e) {
            fail(e.what());
        }
        return size_t{0};
    };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.rfind("# circuit ", 0) == 0 && c.ops.empty()) {
            c.label = line.substr(10);
            continue;
        }
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) {
            tok.push_back(t);
        }
        if (tok.empty() || tok[0][0] == '#') {
            continue;
        }
        if (tok[0] == "repeat") {
            if (tok.size() < 2) fail("repeat needs a count");
            RepeatBlock b{c.ops.size(), 0, static_cast<size_t>(number(tok[1])), tok.size() > 2 ? tok[2] : ""};
            stack.push_back({c.repeat_blocks.size(), b});
            c.repeat_blocks.push_back(b);
            continue;
        }
        if (tok[0] == "end") {
            if (stack.empty()) fail("end without repeat");
            c.repeat_blocks[stack.back().first].end = c.ops.size();
            stack.pop_back();
            continue;
        }
        GateOp op;
        bool found = false;
        for (OpKind k : kAllKinds) {
            if (tok[0] == op_kind_name(k)) {
                op.kind = k;
                found = true;
            }
        }
        if (!found) fail("unknown op kind '" + tok[0] + "'");
        size_t ti = 1;
        if (ti < tok.size() && tok[ti].find('=') == std::string::npos && tok[ti] != "out") {
            std::stringstream ts(tok[ti]);
            for (std::string name; std::getline(ts, name, ',');) {
                op.targets.push_back(spin(name));
            }
            ++ti;
        }
        for (; ti < tok.size(); ++ti) {
            const std::string &t = tok[ti];
            if (t == "out") {
                op.output = true;
                continue;
            }
            const size_t eq = t.find('=');
            if (eq == std::string::npos) fail("expected key=value, got '" + t + "'");
            const std::string key = t.substr(0, eq);
            const std::string val = t.substr(eq + 1);
            if (key == "angle") {
                op.angle = number(val);
            } else if (key == "phase") {
                op.phase = number(val);
            } else if (key == "detuning") {
                op.detuning_hz = number(val);
            } else if (key == "rabi") {
                op.f_rabi_hz = number(val);
            } else if (key == "duration") {
                op.duration_s = number(val);
            } else if (key == "p") {
                op.param = number(val);
            } else if (key == "p2") {
                op.param2 = number(val);
            } else if (key == "tally") {
                op.tally = val;
            } else if (key == "post") {
                op.postselect = static_cast<int>(number(val));
            } else if (key == "if") {
                std::stringstream cs(val);
                for (std::string item; std::getline(cs, item, ',');) {
                    const size_t colon = item.find(':');
                    if (colon == std::string::npos) fail("condition item needs spin:state");
                    const std::string st = item.substr(colon + 1);
                    if (st != "0" && st != "1") fail("condition state must be 0 or 1");
                    op.condition.push_back({spin(item.substr(0, colon)), st == "1" ? SpinState::kUp : SpinState::kDown});
                }
            } else {
                fail("unknown key '" + key + "'");
            }
        }
        c.ops.push_back(std::move(op));
    }
    if (!stack.empty()) {
        throw CircuitError("unterminated repeat block");
    }
    c.validate(model);
    return c;
}

}  // namespace donorsim
