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

#include "donorsim/config.h"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "donorsim/device.h"
#include "donorsim/errors.h"

namespace donorsim {

using json = nlohmann::json;

namespace {

std::string at(const std::string &path, const std::string &key) {
    return path.empty() ? key : path + "." + key;
}
std::string idx(const std::string &path, size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

double as_double(const json &j, const std::string &path) {
    if (!j.is_number()) throw ConfigError(path, "expected a number");
    return j.get<double>();
}
size_t as_size(const json &j, const std::string &path) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<int64_t>() >= 0)) {
        throw ConfigError(path, "expected a non-negative integer");
    }
    return j.get<size_t>();
}
bool as_bool(const json &j, const std::string &path) {
    if (!j.is_boolean()) throw ConfigError(path, "expected true or false");
    return j.get<bool>();
}
std::string as_string(const json &j, const std::string &path) {
    if (!j.is_string()) throw ConfigError(path, "expected a string");
    return j.get<std::string>();
}
const json &as_array(const json &j, const std::string &path) {
    if (!j.is_array()) throw ConfigError(path, "expected an array");
    return j;
}
std::vector<double> as_doubles(const json &j, const std::string &path) {
    std::vector<double> out;
    for (size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_double(j[i], idx(path, i)));
    return out;
}
std::vector<std::string> as_strings(const json &j, const std::string &path) {
    std::vector<std::string> out;
    for (size_t i = 0; i < as_array(j, path).size(); ++i) out.push_back(as_string(j[i], idx(path, i)));
    return out;
}

/// Object view that records which keys were read and rejects the rest.
class Obj {
   public:
    Obj(const json &j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError(path_, "expected an object");
    }
    const std::string &path() const {
        return path_;
    }
    const json *find(const std::string &key) {
        used_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }
    const json &need(const std::string &key) {
        const json *v = find(key);
        if (v == nullptr) throw ConfigError(at(path_, key), "missing required field");
        return *v;
    }
    void num(const std::string &key, double &out) {
        if (const json *v = find(key)) out = as_double(*v, at(path_, key));
    }
    void size(const std::string &key, size_t &out) {
        if (const json *v = find(key)) out = as_size(*v, at(path_, key));
    }
    void flag(const std::string &key, bool &out) {
        if (const json *v = find(key)) out = as_bool(*v, at(path_, key));
    }
    void nums(const std::string &key, std::vector<double> &out) {
        if (const json *v = find(key)) out = as_doubles(*v, at(path_, key));
    }
    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!used_.count(it.key())) throw ConfigError(at(path_, it.key()), "unknown field");
        }
    }

   private:
    const json &j_;
    std::string path_;
    std::set<std::string> used_;
};

json curve_to_json(const ShiftCurve &c) {
    return {{"amplitude_V", c.amplitude_v}, {"shift_Hz", c.shift_hz}};
}
ShiftCurve curve_from_json(const json &j, const std::string &path) {
    Obj o(j, path);
    ShiftCurve c;
    o.nums("amplitude_V", c.amplitude_v);
    o.nums("shift_Hz", c.shift_hz);
    o.finish();
    return c;
}

const char *mode_name(DriveMode m) {
    return m == DriveMode::kIdeal ? "ideal" : "realistic";
}

json device_fields(const DeviceModel &m) {
    json j;
    j["b_field_T"] = m.b_field_t;
    j["gamma_e_Hz_per_T"] = m.gamma_e_hz_per_t;
    j["gamma_n_Hz_per_T"] = m.gamma_n_hz_per_t;
    j["detuning_V"] = m.detuning_v;
    json regs = json::array();
    for (const RegisterModel &r : m.registers) {
        regs.push_back({{"label", r.label},
                        {"hyperfine_Hz", r.hyperfine_hz},
                        {"stark_eff_Hz_per_V", r.stark_eff_hz_per_v},
                        {"nucleus_labels", r.nucleus_labels}});
    }
    j["registers"] = regs;
    json ex = json::array();
    for (const ExchangeSample &s : m.exchange_table) ex.push_back({s.detuning_v, s.exchange_hz});
    j["exchange_table"] = ex;
    return j;
}

json noise_to_json(const NoiseModel &n, const DeviceModel &m) {
    json groups = json::array();
    for (const CorrelatedJumpGroup &g : n.drift.groups) {
        std::vector<std::string> names;
        for (size_t s : g.members) names.push_back(m.spin_name(s));
        groups.push_back({{"members", names}, {"magnitude_Hz", g.magnitude_hz}, {"rate_per_s", g.rate_per_s}});
    }
    json tls = json::array();
    for (const TlsDefect &t : n.tls) {
        tls.push_back({{"register", t.register_index},
                       {"amplitude_Hz", t.amplitude_hz},
                       {"rate_up_per_s", t.rate_up_per_s},
                       {"rate_down_per_s", t.rate_down_per_s},
                       {"state_up", t.state}});
    }
    const MicrowaveLoadModel &l = n.load;
    const ReadoutErrorModel &r = n.readout;
    return {
        {"drift",
         {{"collective_sigma_Hz", n.drift.collective_sigma_hz},
          {"nmr_drift_Hz_per_hour", n.drift.nmr_drift_hz_per_hour},
          {"groups", groups},
          {"exchange_sigma_Hz", n.drift.exchange_sigma_hz}}},
        {"tls", tls},
        {"microwave_load",
         {{"nmr_on_nmr_Hz_per_V2", l.nmr_on_nmr_hz_per_v2},
          {"esr_on_nmr", curve_to_json(l.esr_on_nmr)},
          {"nmr_on_esr", curve_to_json(l.nmr_on_esr)},
          {"esr_on_esr", curve_to_json(l.esr_on_esr)},
          {"nmr_filler_Hz", l.nmr_filler_hz},
          {"esr_filler_Hz", l.esr_filler_hz},
          {"nmr_filler_amplitude_V", l.nmr_filler_amplitude_v},
          {"esr_filler_amplitude_V", l.esr_filler_amplitude_v},
          {"esr_drive_amplitude_V", l.esr_drive_amplitude_v},
          {"enabled", l.enabled}}},
        {"readout",
         {{"electron_read_up", r.electron_read_up},
          {"electron_read_down", r.electron_read_down},
          {"nuclear_flip_up_to_down", r.nuclear_flip_up_to_down},
          {"nuclear_flip_down_to_up", r.nuclear_flip_down_to_up},
          {"electron_init_error", r.electron_init_error},
          {"nuclear_init_error", r.nuclear_init_error},
          {"qnd_shot_cap", r.qnd_shot_cap}}},
        {"t2", {{"t2_star_s", n.coherence.t2_star_s}, {"t2_hahn_s", n.coherence.t2_hahn_s}}},
        {"crot_phase_error_rad", n.crot_phase_error_rad},
        {"shot_overhead_s", n.shot_overhead_s},
    };
}

json config_to_json(const Config &c) {
    json j = device_fields(c.device);
    j["schema_version"] = kConfigSchemaVersion;
    j["notes"] = c.notes;
    j["noise"] = noise_to_json(c.noise, c.device);
    const EngineOptions &e = c.engine;
    j["engine"] = {{"mode", mode_name(e.mode)},
                   {"esr_rabi_Hz", e.esr_rabi_hz},
                   {"nmr_rabi_ratio", e.nmr_rabi_ratio},
                   {"bandwidth_factor", e.bandwidth_factor},
                   {"norm_tolerance", e.norm_tolerance},
                   {"threads", e.threads}};
    const CalibrationPolicy &p = c.calibration;
    j["calibration"] = {{"interval_runs", p.interval_runs},   {"interval_s", p.interval_s},
                        {"rotations", p.rotations},           {"span_Hz", p.span_hz},
                        {"step_Hz", p.step_hz},               {"shots", p.shots},
                        {"track_rabi_Hz", p.track_rabi_hz},   {"widen_factor", p.widen_factor},
                        {"max_widenings", p.max_widenings},   {"min_contrast", p.min_contrast},
                        {"track_exchange", p.track_exchange}};
    return j;
}

void read_device(Obj &o, DeviceModel &m) {
    m = DeviceModel{};
    m.b_field_t = as_double(o.need("b_field_T"), "b_field_T");
    o.num("gamma_e_Hz_per_T", m.gamma_e_hz_per_t);
    o.num("gamma_n_Hz_per_T", m.gamma_n_hz_per_t);
    o.num("detuning_V", m.detuning_v);
    const json &regs = as_array(o.need("registers"), "registers");
    for (size_t i = 0; i < regs.size(); ++i) {
        Obj r(regs[i], idx("registers", i));
        RegisterModel reg;
        reg.label = as_string(r.need("label"), at(r.path(), "label"));
        reg.hyperfine_hz = as_doubles(r.need("hyperfine_Hz"), at(r.path(), "hyperfine_Hz"));
        reg.stark_eff_hz_per_v.assign(reg.hyperfine_hz.size(), 0.0);
        r.nums("stark_eff_Hz_per_V", reg.stark_eff_hz_per_v);
        if (const json *v = r.find("nucleus_labels")) reg.nucleus_labels = as_strings(*v, at(r.path(), "nucleus_labels"));
        r.finish();
        m.registers.push_back(std::move(reg));
    }
    size_t counter = 0;
    for (RegisterModel &reg : m.registers) {
        if (reg.nucleus_labels.empty()) {
            for (size_t k = 0; k < reg.num_nuclei(); ++k) reg.nucleus_labels.push_back("n" + std::to_string(counter + k + 1));
        }
        counter += reg.num_nuclei();
    }
    if (const json *ex = o.find("exchange_table")) {
        for (size_t i = 0; i < as_array(*ex, "exchange_table").size(); ++i) {
            const std::string p = idx("exchange_table", i);
            const json &row = (*ex)[i];
            if (!row.is_array() || row.size() != 2) throw ConfigError(p, "expected [detuning_V, J_Hz]");
            m.exchange_table.push_back({as_double(row[0], p + "[0]"), as_double(row[1], p + "[1]")});
        }
    }
    m.validate();
}

void read_noise(const json &j, const DeviceModel &m, NoiseModel &n) {
    Obj o(j, "noise");
    if (const json *d = o.find("drift")) {
        Obj od(*d, "noise.drift");
        od.nums("collective_sigma_Hz", n.drift.collective_sigma_hz);
        od.nums("nmr_drift_Hz_per_hour", n.drift.nmr_drift_hz_per_hour);
        od.num("exchange_sigma_Hz", n.drift.exchange_sigma_hz);
        if (const json *g = od.find("groups")) {
            n.drift.groups.clear();
            for (size_t i = 0; i < as_array(*g, "noise.drift.groups").size(); ++i) {
                Obj og((*g)[i], idx("noise.drift.groups", i));
                CorrelatedJumpGroup grp;
                const std::string mp = at(og.path(), "members");
                for (const std::string &s : as_strings(og.need("members"), mp)) {
                    try {
                        grp.members.push_back(m.find_spin(s));
                    } catch (const ShapeError &) {
                        throw ConfigError(mp, "unknown spin '" + s + "'");
                    }
                }
                og.num("magnitude_Hz", grp.magnitude_hz);
                og.num("rate_per_s", grp.rate_per_s);
                og.finish();
                n.drift.groups.push_back(std::move(grp));
            }
        }
        od.finish();
    }
    if (const json *t = o.find("tls")) {
        n.tls.clear();
        for (size_t i = 0; i < as_array(*t, "noise.tls").size(); ++i) {
            Obj ot((*t)[i], idx("noise.tls", i));
            TlsDefect d;
            ot.size("register", d.register_index);
            ot.num("amplitude_Hz", d.amplitude_hz);
            ot.num("rate_up_per_s", d.rate_up_per_s);
            ot.num("rate_down_per_s", d.rate_down_per_s);
            ot.flag("state_up", d.state);
            ot.finish();
            n.tls.push_back(d);
        }
    }
    if (const json *l = o.find("microwave_load")) {
        Obj ol(*l, "noise.microwave_load");
        MicrowaveLoadModel &ld = n.load;
        ol.nums("nmr_on_nmr_Hz_per_V2", ld.nmr_on_nmr_hz_per_v2);
        if (const json *c = ol.find("esr_on_nmr")) ld.esr_on_nmr = curve_from_json(*c, at(ol.path(), "esr_on_nmr"));
        if (const json *c = ol.find("nmr_on_esr")) ld.nmr_on_esr = curve_from_json(*c, at(ol.path(), "nmr_on_esr"));
        if (const json *c = ol.find("esr_on_esr")) ld.esr_on_esr = curve_from_json(*c, at(ol.path(), "esr_on_esr"));
        ol.num("nmr_filler_Hz", ld.nmr_filler_hz);
        ol.num("esr_filler_Hz", ld.esr_filler_hz);
        ol.num("nmr_filler_amplitude_V", ld.nmr_filler_amplitude_v);
        ol.num("esr_filler_amplitude_V", ld.esr_filler_amplitude_v);
        ol.num("esr_drive_amplitude_V", ld.esr_drive_amplitude_v);
        ol.flag("enabled", ld.enabled);
        ol.finish();
    }
    if (const json *r = o.find("readout")) {
        Obj orr(*r, "noise.readout");
        ReadoutErrorModel &rd = n.readout;
        orr.num("electron_read_up", rd.electron_read_up);
        orr.num("electron_read_down", rd.electron_read_down);
        orr.num("nuclear_flip_up_to_down", rd.nuclear_flip_up_to_down);
        orr.num("nuclear_flip_down_to_up", rd.nuclear_flip_down_to_up);
        orr.num("electron_init_error", rd.electron_init_error);
        orr.num("nuclear_init_error", rd.nuclear_init_error);
        orr.size("qnd_shot_cap", rd.qnd_shot_cap);
        orr.finish();
    }
    if (const json *t = o.find("t2")) {
        Obj ot(*t, "noise.t2");
        ot.nums("t2_star_s", n.coherence.t2_star_s);
        ot.nums("t2_hahn_s", n.coherence.t2_hahn_s);
        ot.finish();
    }
    o.num("crot_phase_error_rad", n.crot_phase_error_rad);
    o.num("shot_overhead_s", n.shot_overhead_s);
    o.finish();
}

void read_engine(const json &j, EngineOptions &e) {
    Obj o(j, "engine");
    if (const json *v = o.find("mode")) {
        const std::string s = as_string(*v, "engine.mode");
        if (s == "ideal") {
            e.mode = DriveMode::kIdeal;
        } else if (s == "realistic") {
            e.mode = DriveMode::kRealistic;
        } else {
            throw ConfigError("engine.mode", "expected 'ideal' or 'realistic'");
        }
    }
    o.num("esr_rabi_Hz", e.esr_rabi_hz);
    o.num("nmr_rabi_ratio", e.nmr_rabi_ratio);
    o.num("bandwidth_factor", e.bandwidth_factor);
    o.num("norm_tolerance", e.norm_tolerance);
    o.size("threads", e.threads);
    o.finish();
}

void read_calibration(const json &j, CalibrationPolicy &p) {
    Obj o(j, "calibration");
    o.size("interval_runs", p.interval_runs);
    o.num("interval_s", p.interval_s);
    o.size("rotations", p.rotations);
    o.num("span_Hz", p.span_hz);
    o.num("step_Hz", p.step_hz);
    o.size("shots", p.shots);
    o.num("track_rabi_Hz", p.track_rabi_hz);
    o.num("widen_factor", p.widen_factor);
    o.size("max_widenings", p.max_widenings);
    o.num("min_contrast", p.min_contrast);
    o.flag("track_exchange", p.track_exchange);
    o.finish();
}

json parse_json(const std::string &text, const std::string &origin) {
    try {
        return json::parse(text);
    } catch (const json::parse_error &e) {
        size_t line = 1, col = 1;
        for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("", origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (" +
                                  e.what() + ")");
    }
}

Config config_from_json(const json &j) {
    Obj o(j, "");
    if (const json *v = o.find("schema_version")) {
        if (as_size(*v, "schema_version") != static_cast<size_t>(kConfigSchemaVersion)) {
            throw ConfigError("schema_version", "unsupported version");
        }
    }
    Config c;
    read_device(o, c.device);
    c.noise = NoiseModel::ideal(c.device);
    if (const json *n = o.find("noise")) read_noise(*n, c.device, c.noise);
    if (const json *e = o.find("engine")) read_engine(*e, c.engine);
    if (const json *p = o.find("calibration")) read_calibration(*p, c.calibration);
    if (const json *v = o.find("notes")) c.notes = as_strings(*v, "notes");
    o.finish();
    c.validate();
    return c;
}

}  // namespace

void Config::validate() const {
    device.validate();
    noise.validate(device);
    calibration.validate();
    if (!(engine.esr_rabi_hz > 0)) throw ConfigError("engine.esr_rabi_Hz", "must be > 0");
    if (!(engine.nmr_rabi_ratio > 0)) throw ConfigError("engine.nmr_rabi_ratio", "must be > 0");
    if (!(engine.bandwidth_factor > 0)) throw ConfigError("engine.bandwidth_factor", "must be > 0");
    if (!(engine.norm_tolerance > 0)) throw ConfigError("engine.norm_tolerance", "must be > 0");
    if (engine.threads < 1) throw ConfigError("engine.threads", "must be >= 1");
}

Config reference_config() {
    Config c;
    c.device = reference_device();
    c.noise = reference_noise(c.device);
    return c;
}

Config parse_config(const std::string &text, const std::string &origin) {
    return config_from_json(parse_json(text, origin));
}

Config load_config(const std::string &path) {
    return parse_config(read_text_file(path), path);
}

std::string serialize_config(const Config &config) {
    return config_to_json(config).dump(2) + "\n";
}

Config apply_noise_overrides(const Config &config, const std::string &patch_json) {
    json j = config_to_json(config);
    j["noise"].merge_patch(parse_json(patch_json, "<noise overrides>"));
    return config_from_json(j);
}

std::string serialize_caltab(const FrequencyTable &table) {
    json regs = json::array();
    for (const FrequencyTable::Register &r : table.registers) {
        json nmr = json::array();
        for (const auto &pair : r.nmr_hz) nmr.push_back({pair[0], pair[1]});
        regs.push_back({{"label", r.label},
                        {"num_nuclei", r.num_nuclei},
                        {"reference_Hz", r.reference_hz},
                        {"offsets_Hz", r.offsets_hz},
                        {"nmr_Hz", nmr},
                        {"calibrated_at_s", r.calibrated_at_s}});
    }
    const json j = {{"schema_version", kCaltabSchemaVersion},
                    {"exchange_Hz", table.exchange_hz},
                    {"exchange_calibrated_at_s", table.exchange_calibrated_at_s},
                    {"registers", regs}};
    return j.dump(2) + "\n";
}

FrequencyTable parse_caltab(const std::string &text, const DeviceModel &model, const std::string &origin) {
    const json j = parse_json(text, origin);
    Obj o(j, "");
    if (as_size(o.need("schema_version"), "schema_version") != static_cast<size_t>(kCaltabSchemaVersion)) {
        throw ConfigError("schema_version", "unsupported calibration table version");
    }
    FrequencyTable t;
    t.exchange_hz = as_double(o.need("exchange_Hz"), "exchange_Hz");
    o.num("exchange_calibrated_at_s", t.exchange_calibrated_at_s);
    const json &regs = as_array(o.need("registers"), "registers");
    if (regs.size() != model.num_registers()) throw ConfigError("registers", "register count does not match the device");
    for (size_t i = 0; i < regs.size(); ++i) {
        Obj r(regs[i], idx("registers", i));
        FrequencyTable::Register reg;
        reg.label = as_string(r.need("label"), at(r.path(), "label"));
        reg.num_nuclei = as_size(r.need("num_nuclei"), at(r.path(), "num_nuclei"));
        if (reg.num_nuclei != model.num_nuclei(i)) throw ConfigError(at(r.path(), "num_nuclei"), "does not match the device");
        reg.reference_hz = as_double(r.need("reference_Hz"), at(r.path(), "reference_Hz"));
        reg.offsets_hz = as_doubles(r.need("offsets_Hz"), at(r.path(), "offsets_Hz"));
        if (reg.offsets_hz.size() != (size_t{1} << reg.num_nuclei)) {
            throw ConfigError(at(r.path(), "offsets_Hz"), "needs one entry per nuclear pattern");
        }
        const std::string np = at(r.path(), "nmr_Hz");
        const json &nmr = as_array(r.need("nmr_Hz"), np);
        if (nmr.size() != reg.num_nuclei) throw ConfigError(np, "needs one pair per nucleus");
        for (size_t k = 0; k < nmr.size(); ++k) {
            const std::vector<double> pair = as_doubles(nmr[k], idx(np, k));
            if (pair.size() != 2) throw ConfigError(idx(np, k), "expected [down_Hz, up_Hz]");
            reg.nmr_hz.push_back({pair[0], pair[1]});
        }
        r.num("calibrated_at_s", reg.calibrated_at_s);
        r.finish();
        t.registers.push_back(std::move(reg));
    }
    o.finish();
    return t;
}

FrequencyTable load_caltab(const std::string &path, const DeviceModel &model) {
    std::ifstream in(path);
    if (!in) return enumerate_lines(model);
    return parse_caltab(read_text_file(path), model, path);
}

void save_caltab(const std::string &path, const FrequencyTable &table) {
    write_text_file(path, serialize_caltab(table));
}

std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("", "cannot write '" + path + "'");
    out << text;
    if (!out) throw ConfigError("", "write failed for '" + path + "'");
}

}  // namespace donorsim
