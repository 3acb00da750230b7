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

#include "donorsim/harness.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <sstream>

#include "donorsim/calibration.h"
#include "donorsim/circuits.h"
#include "donorsim/clifford.h"
#include "donorsim/errors.h"
#include "donorsim/lab.h"
#include "donorsim/protocols.h"
#include "donorsim/rb.h"
#include "donorsim/tomography.h"

namespace donorsim {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// Accessor for the string-valued experiment flags.
class Params {
   public:
    explicit Params(const std::map<std::string, std::string> &p) : p_(p) {
    }
    bool has(const std::string &k) const {
        return p_.count(k) > 0;
    }
    std::string str(const std::string &k, const std::string &def) const {
        const auto it = p_.find(k);
        return it == p_.end() ? def : it->second;
    }
    size_t size(const std::string &k, size_t def) const {
        const auto it = p_.find(k);
        if (it == p_.end()) return def;
        try {
            size_t used = 0;
            const unsigned long long v = std::stoull(it->second, &used);
            if (used == it->second.size() && it->second[0] != '-') return static_cast<size_t>(v);
        } catch (const std::exception &) {
        }
        throw ConfigError("params." + k, "expected a non-negative integer, got '" + it->second + "'");
    }
    double num(const std::string &k, double def) const {
        const auto it = p_.find(k);
        if (it == p_.end()) return def;
        try {
            size_t used = 0;
            const double v = std::stod(it->second, &used);
            if (used == it->second.size()) return v;
        } catch (const std::exception &) {
        }
        throw ConfigError("params." + k, "expected a number, got '" + it->second + "'");
    }
    bool flag(const std::string &k, bool def) const {
        const auto it = p_.find(k);
        if (it == p_.end()) return def;
        if (it->second == "true" || it->second == "1" || it->second.empty()) return true;
        if (it->second == "false" || it->second == "0") return false;
        throw ConfigError("params." + k, "expected true or false");
    }

   private:
    const std::map<std::string, std::string> &p_;
};

std::vector<std::string> split(const std::string &s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

std::vector<size_t> spins(const DeviceModel &m, const std::string &list, const std::string &field) {
    std::vector<size_t> out;
    for (const std::string &name : split(list, ',')) {
        try {
            out.push_back(m.find_spin(name));
        } catch (const ShapeError &) {
            throw ConfigError(field, "unknown spin '" + name + "'");
        }
    }
    return out;
}

/// Output directory writer that records every file in the bundle.
class Outputs {
   public:
    Outputs(std::string dir, ResultBundle &bundle) : dir_(std::move(dir)), bundle_(bundle) {
    }
    void write(const std::string &role, const std::string &name, const std::string &text) {
        const fs::path p = fs::path(dir_) / name;
        fs::create_directories(p.parent_path());
        write_text_file(p.string(), text);
        bundle_.outputs[role] = name;
    }
    void json_file(const std::string &role, const std::string &name, json j) {
        j["schema_version"] = kBundleSchemaVersion;
        write(role, name, j.dump(2) + "\n");
    }

   private:
    std::string dir_;
    ResultBundle &bundle_;
};

std::string counts_csv(const TomographyData &d, size_t k) {
    std::string out = d.exact ? "outcome,probability\n" : "outcome,count,probability\n";
    const size_t n = d.spec.qubits.size();
    for (size_t s = 0; s < (size_t{1} << n); ++s) {
        std::string key;
        for (size_t q = 0; q < n; ++q) key += (s >> q) & 1 ? '1' : '0';
        const auto it = d.probabilities[k].find(key);
        const double p = it == d.probabilities[k].end() ? 0.0 : it->second;
        if (d.exact) {
            out += key + "," + fmt(p) + "\n";
        } else {
            const auto c = d.counts[k].counts.find(key);
            out += key + "," + std::to_string(c == d.counts[k].counts.end() ? 0 : c->second) + "," + fmt(p) + "\n";
        }
    }
    return out;
}

void write_counts(Outputs &o, const TomographyData &d, const std::string &prefix) {
    for (size_t k = 0; k < d.spec.settings.size(); ++k) {
        const std::string label = d.spec.settings[k].label();
        o.write("counts:" + prefix + label, prefix + label + ".csv", counts_csv(d, k));
    }
}

json matrix_json(const Eigen::MatrixXcd &m) {
    json re = json::array(), im = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array(), c = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r.push_back(m(i, j).real());
            c.push_back(m(i, j).imag());
        }
        re.push_back(r);
        im.push_back(c);
    }
    return {{"real", re}, {"imag", im}};
}

json fidelity_json(const FidelityEstimate &f) {
    return {{"fidelity", f.fidelity},
            {"sigma", f.sigma},
            {"populations", f.populations},
            {"coherence", f.coherence},
            {"entangled", f.entangled}};
}

size_t named_clifford(const std::string &name, int nq) {
    const CliffordGroup &g = CliffordGroup::get(nq);
    if (!name.empty() && std::all_of(name.begin(), name.end(), ::isdigit)) {
        const size_t i = std::stoul(name);
        if (i >= g.size()) throw ConfigError("params.interleave", "Clifford index out of range");
        return i;
    }
    using C = std::complex<double>;
    const C i1(0, 1);
    const double r = 1 / std::sqrt(2.0);
    Eigen::Matrix2cd one;
    Eigen::MatrixXcd u;
    if (nq == 1) {
        if (name == "id") {
            one << 1, 0, 0, 1;
        } else if (name == "x") {
            one << 0, 1, 1, 0;
        } else if (name == "y") {
            one << 0, -i1, i1, 0;
        } else if (name == "z") {
            one << 1, 0, 0, -1;
        } else if (name == "h") {
            one << r, r, r, -r;
        } else if (name == "s") {
            one << 1, 0, 0, i1;
        } else if (name == "x2") {
            one << r, -i1 * r, -i1 * r, r;
        } else if (name == "y2") {
            one << r, -r, r, r;
        } else {
            throw ConfigError("params.interleave", "unknown one-qubit gate '" + name + "'");
        }
        u = one;
    } else {
        u = Eigen::MatrixXcd::Identity(4, 4);
        if (name == "cz") {
            u(3, 3) = -1;
        } else if (name == "cnot01" || name == "cnot10") {
            // Basis bit q is qubit q; cnot01 has qubit 0 as control.
            const int flip = name == "cnot01" ? 2 : 1;
            const int ctl = name == "cnot01" ? 1 : 2;
            u = Eigen::MatrixXcd::Zero(4, 4);
            for (int b = 0; b < 4; ++b) u((b & ctl) ? (b ^ flip) : b, b) = 1;
        } else if (name != "id") {
            throw ConfigError("params.interleave", "unknown two-qubit gate '" + name + "'");
        }
    }
    return g.find(u);
}

json rb_summary(const RbResult &r) {
    return {{"A", r.amplitude},       {"p", r.p},
            {"F_C", r.f_c},           {"F_P", r.f_p},
            {"n_bar", r.n_bar},       {"sigma_A", r.sigma_amplitude},
            {"sigma_p", r.sigma_p},   {"sigma_F_C", r.sigma_f_c},
            {"sigma_F_P", r.sigma_f_p}, {"fit_ok", r.fit_ok},
            {"diagnostic", r.diagnostic}};
}

std::string rb_csv(const RbResult &r) {
    std::string out = "length,F_upper,F_lower,F\n";
    for (const RbPoint &p : r.points) {
        out += std::to_string(p.length) + "," + fmt(p.f_up) + "," + fmt(p.f_down) + "," + fmt(p.f) + "\n";
    }
    return out;
}

void exp_rb(Lab &lab, const Params &p, uint64_t seed, Outputs &o) {
    const DeviceModel &m = lab.truth();
    const std::vector<size_t> q = spins(m, p.str("qubit", "n5"), "params.qubit");
    if (q.empty() || q.size() > 2) throw ConfigError("params.qubit", "RB needs one or two qubits");
    const NativeSet set = rb_native_set(m, q);
    RbConfig cfg = q.size() == 1 ? RbConfig::one_qubit() : RbConfig::two_qubit(set == NativeSet::kNuclearCz2q);
    cfg.seed = seed;
    cfg.variations = p.size("variations", cfg.variations);
    cfg.shots = p.size("shots", cfg.shots);
    cfg.bootstrap_resamples = p.size("bootstrap", cfg.bootstrap_resamples);
    cfg.depolarizing = p.num("depolarizing", cfg.depolarizing);
    cfg.interleaved_depolarizing = p.num("interleaved_depolarizing", cfg.interleaved_depolarizing);
    const size_t max_len = p.size("max_length", cfg.lengths.back());
    cfg.lengths.erase(std::remove_if(cfg.lengths.begin(), cfg.lengths.end(), [&](size_t l) { return l > max_len; }),
                      cfg.lengths.end());
    cfg.validate();
    json summary = {{"qubits", p.str("qubit", "n5")}, {"seed", seed}};
    if (p.has("interleave")) {
        const size_t target = named_clifford(p.str("interleave", ""), static_cast<int>(q.size()));
        const InterleavedRbResult r = run_interleaved_rb(lab, q, cfg, target);
        o.write("rb_points", "rb.csv", rb_csv(r.reference));
        o.write("rb_interleaved_points", "rb_interleaved.csv", rb_csv(r.interleaved));
        summary["reference"] = rb_summary(r.reference);
        summary["interleaved"] = rb_summary(r.interleaved);
        summary["interleave"] = p.str("interleave", "");
        summary["target_index"] = r.target;
        summary["ratio"] = r.ratio;
        summary["F_i"] = r.f_i;
        summary["sigma_F_i"] = r.sigma_f_i;
        summary["clamped"] = r.clamped;
        summary["warning"] = r.warning;
    } else {
        const RbResult r = run_rb(lab, q, cfg);
        o.write("rb_points", "rb.csv", rb_csv(r));
        summary["reference"] = rb_summary(r);
    }
    o.json_file("rb_summary", "rb_summary.json", summary);
}

std::vector<std::pair<size_t, size_t>> grid_pairs(const DeviceModel &m, const std::string &grid) {
    std::vector<std::pair<size_t, size_t>> out;
    if (grid == "nonlocal") {
        if (m.num_registers() != 2) throw ConfigError("params.grid", "nonlocal pairs need two registers");
        for (size_t a = 0; a < m.num_nuclei(0); ++a) {
            for (size_t b = 0; b < m.num_nuclei(1); ++b) out.push_back({m.nucleus_spin(0, a), m.nucleus_spin(1, b)});
        }
    } else if (grid == "local") {
        for (size_t r = 0; r < m.num_registers(); ++r) {
            for (size_t a = 0; a < m.num_nuclei(r); ++a) {
                for (size_t b = a + 1; b < m.num_nuclei(r); ++b) {
                    out.push_back({m.nucleus_spin(r, a), m.nucleus_spin(r, b)});
                }
            }
        }
    } else if (grid != "none") {
        throw ConfigError("params.grid", "expected local, nonlocal or none");
    }
    return out;
}

void exp_qst(Lab &lab, const Params &p, uint64_t seed, Outputs &o) {
    const DeviceModel &m = lab.truth();
    const BellState state = parse_bell_state(p.str("state", "phi+"));
    const size_t shots = p.size("shots", 2000);
    const size_t resamples = p.size("bootstrap", 200);
    const bool exact = p.flag("exact", false);
    if (p.has("grid")) {
        std::string csv = "q1,q2,fidelity,sigma\n";
        for (const BellRow &row : bell_campaign(lab, grid_pairs(m, p.str("grid", "")), state, shots, resamples, exact)) {
            csv += m.spin_name(row.q1) + "," + m.spin_name(row.q2) + "," + fmt(row.fidelity) + "," + fmt(row.sigma) + "\n";
        }
        o.write("bell_grid", "bell_grid.csv", csv);
        return;
    }
    const std::vector<size_t> q = spins(m, p.str("pair", "n4,n6"), "params.pair");
    if (q.size() != 2) throw ConfigError("params.pair", "Bell tomography needs two nuclei");
    TomographySpec spec = TomographySpec::full(q);
    spec.shots = shots;
    const TomographyData data = collect_tomography(lab, bell_circuit(m, q[0], q[1], state), spec, exact);
    write_counts(o, data, "counts/");
    const Eigen::MatrixXcd rho = reconstruct_density_matrix(data);
    o.json_file("rho", "rho.json", matrix_json(rho));
    const FidelityEstimate f =
        tomography_fidelity(data, restrict_state(bell_target(m, q[0], q[1], state), q), exact ? 0 : resamples, seed);
    json j = fidelity_json(f);
    j["qubits"] = p.str("pair", "n4,n6");
    j["state"] = bell_state_name(state);
    j["acceptance"] = data.acceptance;
    j["warnings"] = data.warnings;
    o.json_file("fidelity", "fidelity.json", j);
}

void exp_ghz(Lab &lab, const Params &p, uint64_t seed, Outputs &o) {
    const DeviceModel &m = lab.truth();
    const bool reduced = p.flag("reduced", false);
    const bool exact = p.flag("exact", false);
    const size_t shots = p.size("shots", 2000);
    const size_t resamples = p.size("bootstrap", 200);
    std::vector<size_t> sizes;
    for (const std::string &s : split(p.str("n", "3"), ',')) {
        try {
            sizes.push_back(std::stoul(s));
        } catch (const std::exception &) {
            throw ConfigError("params.n", "expected a list of sizes");
        }
    }
    if (sizes.empty()) throw ConfigError("params.n", "no GHZ sizes given");
    std::string csv = "n,method,fidelity,sigma,populations,coherence\n";
    json rows = json::array();
    for (size_t n : sizes) {
        if (n < 2) throw ConfigError("params.n", "GHZ states need at least two qubits");
        if (!reduced && n > 5) throw ConfigError("params.n", "full tomography supports up to 5 qubits");
        const std::vector<size_t> order = default_ghz_order(m, n);
        TomographySpec spec = reduced ? TomographySpec::reduced_ghz(order) : TomographySpec::full(order);
        spec.shots = shots;
        const TomographyData data = collect_tomography(lab, ghz_circuit(m, order), spec, exact);
        write_counts(o, data, "counts/n" + std::to_string(n) + "/");
        const FidelityEstimate f = reduced ? ghz_fidelity_reduced(data, exact ? 0 : resamples, seed)
                                           : tomography_fidelity(data, restrict_state(ghz_target(m, order), order),
                                                                 exact ? 0 : resamples, seed);
        const char *method = reduced ? "reduced" : "full";
        csv += std::to_string(n) + "," + method + "," + fmt(f.fidelity) + "," + fmt(f.sigma) + "," +
               fmt(f.populations) + "," + fmt(f.coherence) + "\n";
        json row = fidelity_json(f);
        std::vector<std::string> names;
        for (size_t s : order) names.push_back(m.spin_name(s));
        row["n"] = n;
        row["method"] = method;
        row["qubits"] = names;
        row["warnings"] = data.warnings;
        rows.push_back(row);
    }
    o.write("ghz_rows", "ghz.csv", csv);
    o.json_file("ghz_fidelity", "ghz_fidelity.json", {{"rows", rows}});
}

void exp_qnd(Lab &lab, const Params &p, Outputs &o) {
    const DeviceModel &m = lab.truth();
    const std::vector<size_t> q = spins(m, p.str("nucleus", "n5"), "params.nucleus");
    if (q.size() != 1 || m.is_electron(q[0])) throw ConfigError("params.nucleus", "expected one nucleus");
    const QndMarkovParams mp = qnd_markov_params(lab.noise().readout);
    const size_t cap = lab.noise().readout.qnd_shot_cap;
    const size_t best = optimal_qnd_shots(mp, cap);
    const size_t shots = p.size("shots", 0) > 0 ? p.size("shots", 0) : best;
    const size_t trials = p.size("trials", 10000);
    const double band = p.num("reject_band", 0.2);
    const QndMonteCarlo mc = qnd_monte_carlo(lab, q[0], shots, trials, band);
    const QndMarkovResult ex = qnd_markov_exact(mp, shots, band);
    std::string hist = "diff,delta_P,count_given_up,count_given_down,markov_given_up,markov_given_down\n";
    for (size_t i = 0; i < mc.diff_given_up.size(); ++i) {
        const long d = static_cast<long>(i) - static_cast<long>(shots);
        hist += std::to_string(d) + "," + fmt(static_cast<double>(d) / static_cast<double>(shots)) + "," +
                std::to_string(mc.diff_given_up[i]) + "," + std::to_string(mc.diff_given_down[i]) + "," +
                fmt(ex.diff_given_up[i]) + "," + fmt(ex.diff_given_down[i]) + "\n";
    }
    o.write("qnd_histogram", "qnd_histogram.csv", hist);
    std::string curve = "N,error\n";
    const std::vector<double> err = qnd_error_curve(mp, cap);
    for (size_t n = 0; n < err.size(); ++n) curve += std::to_string(n + 1) + "," + fmt(err[n]) + "\n";
    o.write("qnd_curve", "qnd_curve.csv", curve);
    o.json_file("qnd_summary", "qnd_summary.json",
                {{"nucleus", m.spin_name(q[0])},
                 {"shots", shots},
                 {"optimal_shots", best},
                 {"trials", trials},
                 {"reject_band", band},
                 {"error_monte_carlo", mc.error},
                 {"sigma_monte_carlo", mc.sigma},
                 {"error_markov", ex.error},
                 {"error_postselected_monte_carlo", mc.error_postselected},
                 {"error_postselected_markov", ex.error_postselected},
                 {"acceptance_monte_carlo", mc.acceptance},
                 {"acceptance_markov", ex.acceptance}});
}

uint32_t parse_pattern(const std::string &s, size_t k) {
    if (s.size() != k || s.find_first_not_of("01") != std::string::npos) {
        throw ConfigError("params.pattern", "expected " + std::to_string(k) + " characters of 0/1 (nucleus 1 first)");
    }
    uint32_t out = 0;
    for (size_t i = 0; i < k; ++i) {
        if (s[i] == '1') out |= uint32_t{1} << i;
    }
    return out;
}

void exp_init(Lab &lab, const Params &p, Outputs &o) {
    const DeviceModel &m = lab.truth();
    EstSpec spec;
    spec.register_index = p.size("register", 0);
    if (spec.register_index >= m.num_registers()) throw ConfigError("params.register", "out of range");
    const size_t k = m.num_nuclei(spec.register_index);
    spec.pattern = parse_pattern(p.str("pattern", std::string(k, '0')), k);
    spec.repetitions = p.size("repetitions", 1);
    spec.verify = p.flag("verify", false);
    spec.reject_band = p.num("reject_band", 0.2);
    spec.qnd_shots = p.size("qnd_shots", 0);
    const EstCampaign c = est_campaign(lab, spec, p.size("trials", 1000));
    o.json_file("est_summary", "est_summary.json",
                {{"register", m.registers[spec.register_index].label},
                 {"pattern", p.str("pattern", std::string(k, '0'))},
                 {"repetitions", spec.repetitions},
                 {"verify", spec.verify},
                 {"trials", c.trials},
                 {"accepted", c.accepted},
                 {"fidelity", c.fidelity},
                 {"sigma", c.sigma}});
}

void exp_stability(Lab &lab, const Params &p, Outputs &o) {
    const CampaignKind kind = parse_campaign_kind(p.str("kind", "esr_ref"));
    CampaignOptions opt;
    opt.duration_s = p.has("hours") ? 3600 * p.num("hours", 1) : p.num("duration_s", opt.duration_s);
    opt.cadence_s = p.num("cadence_s", opt.cadence_s);
    opt.bin_hz = p.num("bin_hz", opt.bin_hz);
    const CampaignResult r = stability_campaign(lab, kind, opt);
    std::string csv = "t_s,line,value_Hz\n";
    for (size_t i = 0; i < r.times_s.size(); ++i) {
        for (size_t j = 0; j < r.labels.size(); ++j) {
            csv += fmt(r.times_s[i]) + "," + r.labels[j] + "," + fmt(r.values_hz[j][i]) + "\n";
        }
    }
    o.write("trace", "stability.csv", csv);
    json lines = json::array();
    for (size_t j = 0; j < r.stats.size(); ++j) {
        const LineStats &s = r.stats[j];
        lines.push_back({{"label", s.label},
                         {"register", s.register_index},
                         {"mean_Hz", s.mean_hz},
                         {"stddev_Hz", s.stddev_hz},
                         {"min_Hz", s.min_hz},
                         {"q1_Hz", s.q1_hz},
                         {"median_Hz", s.median_hz},
                         {"q3_Hz", s.q3_hz},
                         {"max_Hz", s.max_hz},
                         {"histogram",
                          {{"origin_Hz", r.histograms[j].origin_hz},
                           {"bin_Hz", r.histograms[j].bin_hz},
                           {"counts", r.histograms[j].counts}}}});
    }
    json sigma = json::array();
    for (double s : r.sigma_bar_hz) sigma.push_back(std::isfinite(s) ? json(s) : json(nullptr));
    o.json_file("stability_summary", "stability_summary.json",
                {{"kind", campaign_kind_name(kind)},
                 {"duration_s", opt.duration_s},
                 {"cadence_s", opt.cadence_s},
                 {"points", r.times_s.size()},
                 {"sigma_bar_Hz", sigma},
                 {"lines", lines},
                 {"lost_events", r.lost_events}});
}

void exp_calibrate(Lab &lab, const Params &p, Outputs &o) {
    const RecalibrationReport rep = lab.recalibrate();
    json j = {{"time_s", rep.time_s},
              {"measured_refs_Hz", rep.measured_refs_hz},
              {"measurements", rep.measurements},
              {"exchange_Hz", rep.exchange_hz},
              {"lost", rep.lost},
              {"message", rep.message}};
    if (rep.lost) {
        o.json_file("calibration", "calibration.json", j);
        throw CalibrationLost(rep.message);
    }
    if (p.flag("exchange", false) && !lab.policy().track_exchange && lab.truth().num_registers() == 2) {
        const ExchangeResult ex = track_exchange(lab);
        lab.set_table(apply_exchange(lab.table(), ex.exchange_hz, lab.time_s()));
        j["exchange_Hz"] = ex.exchange_hz;
    }
    if (p.flag("phase", false)) {
        const CrotPhaseCalibration cal = calibrate_crot_phase(lab, p.size("phase_points", 16));
        json ph = json::array();
        for (const auto &row : cal.phase_rad) ph.push_back({row[0], row[1]});
        j["crot_phase_rad"] = ph;
    }
    o.json_file("calibration", "calibration.json", j);
}

void exp_lines(Lab &lab, Outputs &o) {
    const DeviceModel &m = lab.truth();
    const FrequencyTable &t = lab.table();
    std::string csv = "channel,register,spin,pattern,branch,frequency_Hz,offset_Hz\n";
    for (const EsrLine &l : t.esr_lines()) {
        std::string pat;
        for (size_t i = 0; i < m.num_nuclei(l.register_index); ++i) pat += (l.pattern >> i) & 1 ? '1' : '0';
        csv += "esr," + m.registers[l.register_index].label + "," +
               m.spin_name(m.electron_spin(l.register_index)) + "," + pat + "," +
               (l.other_electron == SpinState::kUp ? "up" : "down") + "," + fmt(l.frequency_hz) + "," +
               fmt(l.offset_hz) + "\n";
    }
    for (const NmrLine &l : t.nmr_lines()) {
        csv += "nmr," + m.registers[l.register_index].label + "," +
               m.spin_name(m.nucleus_spin(l.register_index, l.nucleus_index)) + ",," +
               (l.electron == SpinState::kUp ? "up" : "down") + "," + fmt(l.frequency_hz) + ",\n";
    }
    o.write("lines", "lines.csv", csv);
    o.json_file("lines_summary", "lines.json",
                {{"esr_lines", t.esr_line_count(false)},
                 {"esr_lines_with_exchange", t.esr_line_count(true)},
                 {"nmr_lines", t.nmr_line_count()},
                 {"exchange_Hz", t.exchange_hz}});
}

json manifest_json(const RunManifest &m) {
    json j = {{"config_path", m.config_path},
              {"noise_overrides", m.noise_overrides},
              {"experiment", m.experiment},
              {"params", m.params},
              {"out_dir", m.out_dir},
              {"caltab_path", m.caltab_path}};
    j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
    return j;
}

std::vector<std::vector<std::string>> read_csv(const std::string &path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_text_file(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

size_t column(const std::vector<std::string> &header, const std::string &name, const std::string &file) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DomainError(file + " has no column '" + name + "'");
    return static_cast<size_t>(it - header.begin());
}

}  // namespace

const std::vector<std::string> &experiment_names() {
    static const std::vector<std::string> names = {"rb",        "qst",       "ghz",  "qnd",
                                                   "init",      "stability", "calibrate", "lines"};
    return names;
}

void RunManifest::validate() const {
    if (!seed) throw ConfigError("seed", "every run needs an explicit seed");
    if (out_dir.empty()) throw ConfigError("out", "output directory is required");
    const auto &names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
        throw ConfigError("experiment", "unknown experiment '" + experiment + "'");
    }
    if (!config_path.empty() && !fs::is_regular_file(config_path)) {
        throw ConfigError("config", "no such file '" + config_path + "'");
    }
    const fs::path cal = resolved_caltab();
    if (fs::exists(cal) && !fs::is_regular_file(cal)) throw ConfigError("caltab", "'" + cal.string() + "' is not a file");
}

std::string RunManifest::resolved_caltab() const {
    return caltab_path.empty() ? (fs::path(out_dir) / "caltab.json").string() : caltab_path;
}

std::string ResultBundle::to_json() const {
    json j = {{"schema_version", schema_version},
              {"manifest", manifest_json(manifest)},
              {"outputs", outputs},
              {"wall_time_s", wall_time_s},
              {"exit_code", exit_code},
              {"error", error}};
    return j.dump(2) + "\n";
}

ResultBundle ResultBundle::from_json(const std::string &text) {
    json j;
    try {
        j = json::parse(text);
        ResultBundle b;
        b.schema_version = j.at("schema_version").get<int>();
        if (b.schema_version != kBundleSchemaVersion) throw ConfigError("schema_version", "unsupported bundle version");
        const json &m = j.at("manifest");
        b.manifest.config_path = m.at("config_path").get<std::string>();
        b.manifest.noise_overrides = m.at("noise_overrides").get<std::string>();
        b.manifest.experiment = m.at("experiment").get<std::string>();
        b.manifest.params = m.at("params").get<std::map<std::string, std::string>>();
        if (!m.at("seed").is_null()) b.manifest.seed = m.at("seed").get<uint64_t>();
        b.manifest.out_dir = m.at("out_dir").get<std::string>();
        b.manifest.caltab_path = m.at("caltab_path").get<std::string>();
        b.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        b.wall_time_s = j.at("wall_time_s").get<double>();
        b.exit_code = j.at("exit_code").get<int>();
        b.error = j.at("error").get<std::string>();
        return b;
    } catch (const json::exception &e) {
        throw ConfigError("bundle", std::string("malformed bundle: ") + e.what());
    }
}

ResultBundle ResultBundle::load(const std::string &dir) {
    return from_json(read_text_file((fs::path(dir) / "bundle.json").string()));
}

int exit_code_for(const std::exception &e) {
    if (dynamic_cast<const ConfigError *>(&e) != nullptr) return 2;
    if (dynamic_cast<const CalibrationLost *>(&e) != nullptr) return 4;
    return 3;
}

Config manifest_config(const RunManifest &manifest) {
    Config c = manifest.config_path.empty() ? reference_config() : load_config(manifest.config_path);
    if (!manifest.noise_overrides.empty()) c = apply_noise_overrides(c, manifest.noise_overrides);
    return c;
}

ResultBundle run(const RunManifest &manifest) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultBundle bundle;
    bundle.manifest = manifest;
    bool dir_ok = false;
    try {
        if (!manifest.out_dir.empty()) {
            fs::create_directories(manifest.out_dir);
            dir_ok = true;
        }
        manifest.validate();
        Config cfg = manifest_config(manifest);
        const Params p(manifest.params);
        const std::string &e = manifest.experiment;
        if ((e == "stability" || e == "calibrate") && p.flag("exact", false)) cfg.calibration.shots = 0;
        const std::string caltab = manifest.resolved_caltab();
        Lab lab(cfg.device, cfg.noise, load_caltab(caltab, cfg.device), *manifest.seed, cfg.engine, cfg.calibration);
        Outputs out(manifest.out_dir, bundle);
        if (e == "rb") {
            exp_rb(lab, p, *manifest.seed, out);
        } else if (e == "qst") {
            exp_qst(lab, p, *manifest.seed, out);
        } else if (e == "ghz") {
            exp_ghz(lab, p, *manifest.seed, out);
        } else if (e == "qnd") {
            exp_qnd(lab, p, out);
        } else if (e == "init") {
            exp_init(lab, p, out);
        } else if (e == "stability") {
            exp_stability(lab, p, out);
        } else if (e == "calibrate") {
            exp_calibrate(lab, p, out);
        } else if (e == "lines") {
            exp_lines(lab, out);
        }
        if (e == "calibrate" || !lab.recalibrations().empty()) {
            save_caltab(caltab, lab.table());
            bundle.outputs["caltab"] = fs::relative(fs::absolute(caltab), fs::absolute(manifest.out_dir)).string();
        }
    } catch (const std::exception &ex) {
        bundle.exit_code = exit_code_for(ex);
        bundle.error = ex.what();
    }
    bundle.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (dir_ok) {
        for (const auto &[role, name] : bundle.outputs) {
            if (!fs::exists(fs::path(manifest.out_dir) / name)) {
                bundle.exit_code = 3;
                bundle.error = "output '" + name + "' missing";
            }
        }
        write_text_file((fs::path(manifest.out_dir) / "bundle.json").string(), bundle.to_json());
    }
    return bundle;
}

const std::vector<std::string> &plot_figures() {
    static const std::vector<std::string> names = {"fig2_rb", "fig3_bell_grid", "fig4_ghz", "figS2",
                                                   "figS3",   "figS4",          "figS8"};
    return names;
}

std::vector<std::string> emit_plotdata(const ResultBundle &bundle, const std::string &bundle_dir,
                                       const std::string &figure, const std::string &out_dir) {
    const auto &figs = plot_figures();
    if (std::find(figs.begin(), figs.end(), figure) == figs.end()) {
        throw DomainError("unknown figure '" + figure + "'");
    }
    const auto need = [&](const std::string &role) {
        const auto it = bundle.outputs.find(role);
        if (it == bundle.outputs.end()) {
            throw DomainError("figure " + figure + " needs a '" + role + "' output; the bundle holds a '" +
                              bundle.manifest.experiment + "' run");
        }
        return (fs::path(bundle_dir) / it->second).string();
    };
    fs::create_directories(out_dir);
    std::vector<std::string> written;
    const auto emit = [&](const std::string &name, const std::string &text) {
        const std::string path = (fs::path(out_dir) / name).string();
        write_text_file(path, text);
        written.push_back(path);
    };

    if (figure == "fig2_rb") {
        const std::string pts = need("rb_points");
        const json s = json::parse(read_text_file(need("rb_summary")));
        const double a = s.at("reference").at("A").is_number() ? s["reference"]["A"].get<double>() : NAN;
        const double pr = s.at("reference").at("p").is_number() ? s["reference"]["p"].get<double>() : NAN;
        const auto rows = read_csv(pts);
        std::string out = "length,F,F_upper,F_lower,fit\n";
        for (size_t i = 1; i < rows.size(); ++i) {
            const double m = std::stod(rows[i][0]);
            out += rows[i][0] + "," + rows[i][3] + "," + rows[i][1] + "," + rows[i][2] + "," + fmt(a * std::pow(pr, m)) +
                   "\n";
        }
        emit("plot_fig2_rb.csv", out);
    } else if (figure == "fig3_bell_grid") {
        const std::string file = need("bell_grid");
        const auto rows = read_csv(file);
        std::string out = "nucleus_4P,nucleus_5P,fidelity,sigma\n";
        if (!rows.empty()) {
            const size_t c1 = column(rows[0], "q1", file), c2 = column(rows[0], "q2", file);
            const size_t cf = column(rows[0], "fidelity", file), cs = column(rows[0], "sigma", file);
            for (size_t i = 1; i < rows.size(); ++i) {
                out += rows[i][c1] + "," + rows[i][c2] + "," + rows[i][cf] + "," + rows[i][cs] + "\n";
            }
        }
        emit("plot_fig3_bell_grid.csv", out);
    } else if (figure == "fig4_ghz") {
        const std::string file = need("ghz_rows");
        const auto rows = read_csv(file);
        std::string out = "n,fidelity,sigma,method\n";
        for (size_t i = 1; i < rows.size(); ++i) {
            out += rows[i][0] + "," + rows[i][2] + "," + rows[i][3] + "," + rows[i][1] + "\n";
        }
        emit("plot_fig4_ghz.csv", out);
    } else if (figure == "figS2" || figure == "figS3") {
        const std::string file = need("trace");
        const json s = json::parse(read_text_file(need("stability_summary")));
        const std::string kind = s.at("kind").get<std::string>();
        const bool want_j = figure == "figS3";
        if (want_j != (kind == "j_gap") || kind == "nmr") {
            throw DomainError("figure " + figure + " needs an " + (want_j ? "j_gap" : "esr_ref or esr_offsets") +
                              " stability run; the bundle holds '" + kind + "'");
        }
        const auto rows = read_csv(file);
        std::string out = want_j ? "t_s,J_Hz\n" : "t_s,line,value_Hz\n";
        for (size_t i = 1; i < rows.size(); ++i) {
            out += want_j ? rows[i][0] + "," + rows[i][2] + "\n" : rows[i][0] + "," + rows[i][1] + "," + rows[i][2] + "\n";
        }
        emit(want_j ? "plot_figS3_trace.csv" : "plot_figS2_trace.csv", out);
        std::string box = "line,register,min_Hz,q1_Hz,median_Hz,q3_Hz,max_Hz,stddev_Hz\n";
        for (const json &l : s.at("lines")) {
            const auto v = [&](const char *k) { return l.at(k).is_number() ? fmt(l[k].get<double>()) : std::string("nan"); };
            box += l.at("label").get<std::string>() + "," + std::to_string(l.at("register").get<size_t>()) + "," +
                   v("min_Hz") + "," + v("q1_Hz") + "," + v("median_Hz") + "," + v("q3_Hz") + "," + v("max_Hz") + "," +
                   v("stddev_Hz") + "\n";
        }
        emit(want_j ? "plot_figS3_box.csv" : "plot_figS2_box.csv", box);
    } else if (figure == "figS4") {
        const auto hist = read_csv(need("qnd_histogram"));
        std::string out = "delta_P,count_given_up,count_given_down\n";
        for (size_t i = 1; i < hist.size(); ++i) out += hist[i][1] + "," + hist[i][2] + "," + hist[i][3] + "\n";
        emit("plot_figS4_histogram.csv", out);
        const auto curve = read_csv(need("qnd_curve"));
        const json s = json::parse(read_text_file(need("qnd_summary")));
        const size_t best = s.at("optimal_shots").get<size_t>();
        std::string c = "N,error,optimum\n";
        for (size_t i = 1; i < curve.size(); ++i) {
            c += curve[i][0] + "," + curve[i][1] + "," + (std::stoul(curve[i][0]) == best ? "1" : "0") + "\n";
        }
        emit("plot_figS4_curve.csv", c);
    } else if (figure == "figS8") {
        const Config cfg = manifest_config(bundle.manifest);
        const double df = cfg.device.exchange_hz();
        std::string out = "f_rabi_Hz,infidelity_pi_half,infidelity_pi\n";
        for (double f = 50e3; f <= 2e6 + 1; f += 5e3) {
            out += fmt(f) + "," + fmt(spin_flip_probability(f, df, 1 / (4 * f))) + "," +
                   fmt(spin_flip_probability(f, df, 1 / (2 * f))) + "\n";
        }
        emit("plot_figS8_curve.csv", out);
        std::string minima = "rotation,n,f_rabi_Hz\n";
        for (int n = 1; n <= 4; ++n) {
            minima += "pi_half," + std::to_string(n) + "," + fmt(optimal_rabi(n, df, kPi / 2)) + "\n";
            minima += "pi," + std::to_string(n) + "," + fmt(optimal_rabi(n, df, kPi)) + "\n";
        }
        emit("plot_figS8_minima.csv", minima);
    }
    return written;
}

}  // namespace donorsim
