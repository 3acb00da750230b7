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

#include "donorsim/protocols.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <numbers>
#include <random>

#include "donorsim/errors.h"

namespace donorsim {

namespace {

constexpr double kPi = std::numbers::pi;

SpinState bit_state(uint64_t basis, size_t spin) {
    return (basis >> spin) & 1 ? SpinState::kUp : SpinState::kDown;
}

std::vector<Control> pattern_truth(const DeviceModel &model, size_t reg, uint32_t pattern) {
    std::vector<Control> out;
    for (size_t i = 0; i < model.num_nuclei(reg); ++i) {
        out.push_back({model.nucleus_spin(reg, i), (pattern >> i) & 1 ? SpinState::kUp : SpinState::kDown});
    }
    return out;
}

NoiseContext exact_preparation(NoiseContext ctx) {
    ctx.nuclear_init_error = 0;
    return ctx;
}

size_t resolve_shots(const Lab &lab, size_t shots) {
    return shots > 0 ? shots : lab.qnd_shots();
}

double quantile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(pos));
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

QndSpec QndSpec::nucleus_mode(size_t nucleus, size_t shots) {
    QndSpec s;
    s.nucleus = nucleus;
    s.shots = shots;
    return s;
}

QndSpec QndSpec::pattern_mode(size_t register_index, uint32_t pattern, size_t shots) {
    QndSpec s;
    s.mode = Mode::kPattern;
    s.register_index = register_index;
    s.pattern = pattern;
    s.shots = shots;
    return s;
}

void QndSpec::validate(const DeviceModel &model) const {
    if (!(reject_band >= 0 && reject_band <= 1)) throw ConfigError("qnd.reject_band", "must lie in [0, 1]");
    if (mode == Mode::kNucleus) {
        if (nucleus >= model.num_spins() || model.is_electron(nucleus)) {
            throw ConfigError("qnd.nucleus", "not a nucleus of the device");
        }
        return;
    }
    if (register_index >= model.num_registers()) throw ConfigError("qnd.register", "out of range");
    if (pattern >> model.num_nuclei(register_index)) throw ConfigError("qnd.pattern", "bits beyond the register");
}

QndReadout qnd_read(Lab &lab, const QndSpec &spec, uint64_t initial_state, const NoiseContext *ctx) {
    const DeviceModel &m = lab.truth();
    spec.validate(m);
    const size_t n = resolve_shots(lab, spec.shots);
    const NoiseContext c = exact_preparation(ctx != nullptr ? *ctx : lab.sample_context());
    RunOptions run;
    run.initial_state = initial_state;
    Circuit circuit;
    std::string plus, minus;
    if (spec.mode == QndSpec::Mode::kNucleus) {
        const ReadoutErrorModel &r = lab.noise().readout;
        circuit = qnd_circuit(m, spec.nucleus, n, r.nuclear_flip_up_to_down, r.nuclear_flip_down_to_up, false);
        run.truth_pattern = {{spec.nucleus, bit_state(initial_state, spec.nucleus)}};
        plus = "up";
        minus = "down";
    } else {
        circuit = qnd_state_circuit(m, spec.register_index, spec.pattern, n, false);
        uint32_t prepared = 0;
        for (size_t i = 0; i < m.num_nuclei(spec.register_index); ++i) {
            if ((initial_state >> m.nucleus_spin(spec.register_index, i)) & 1) prepared |= uint32_t{1} << i;
        }
        run.truth_pattern = pattern_truth(m, spec.register_index, prepared);
        plus = "target";
        minus = "other";
    }
    const ShotRecord rec = lab.run_shots(circuit, c, 1, run).at(0);
    QndReadout out;
    out.shots = n;
    out.delta_p = static_cast<double>(rec.tally(plus) - rec.tally(minus)) / static_cast<double>(n);
    out.up = out.delta_p >= 0;
    out.rejected = std::abs(out.delta_p) < spec.reject_band;
    out.preserved = rec.truth_probability;
    return out;
}

QndMarkovParams qnd_markov_params(const ReadoutErrorModel &r) {
    QndMarkovParams p;
    p.p_flip_up_to_down = r.nuclear_flip_up_to_down;
    p.p_flip_down_to_up = r.nuclear_flip_down_to_up;
    p.p_read_up = r.electron_read_up;
    p.p_read_down = r.electron_read_down;
    return fold_init_error(p, r.electron_init_error);
}

size_t optimal_qnd_shots(const QndMarkovParams &params, size_t cap) {
    return qnd_operating_point(params, cap).shots;
}

QndMonteCarlo qnd_monte_carlo(Lab &lab, size_t nucleus, size_t shots, size_t trials, double reject_band,
                              const NoiseContext *ctx) {
    const DeviceModel &m = lab.truth();
    if (shots < 1) throw DomainError("QND shot count must be >= 1");
    if (trials < 2) throw DomainError("Monte Carlo needs at least two trials");
    if (!(reject_band >= 0 && reject_band <= 1)) throw DomainError("reject band must lie in [0, 1]");
    NoiseContext c;
    if (ctx != nullptr) {
        c = *ctx;
    } else {
        c = make_noise_context(m, lab.noise(), LineOffsets::zero(m), lab.nuclear_read_error());
        c.t2_star_s.assign(c.t2_star_s.size(), 0.0);
        c.t2_hahn_s.assign(c.t2_hahn_s.size(), 0.0);
    }
    c = exact_preparation(c);
    const ReadoutErrorModel &r = lab.noise().readout;
    const Circuit circuit = qnd_circuit(m, nucleus, shots, r.nuclear_flip_up_to_down, r.nuclear_flip_down_to_up, false);

    QndMonteCarlo out;
    out.shots = shots;
    out.trials = trials;
    out.diff_given_up.assign(2 * shots + 1, 0);
    out.diff_given_down.assign(2 * shots + 1, 0);
    double err[2] = {0, 0};
    double n_each[2] = {0, 0};
    uint64_t accepted = 0, wrong_accepted = 0;
    for (int up = 0; up < 2; ++up) {
        const size_t n = up ? trials / 2 : trials - trials / 2;
        RunOptions run;
        run.initial_state = up ? uint64_t{1} << nucleus : 0;
        auto &hist = up ? out.diff_given_up : out.diff_given_down;
        for (const ShotRecord &rec : lab.run_shots(circuit, c, n, run)) {
            const int d = rec.tally("up") - rec.tally("down");
            ++hist[static_cast<size_t>(d + static_cast<int>(shots))];
            const bool wrong = (d >= 0) != static_cast<bool>(up);
            err[up] += wrong;
            if (std::abs(static_cast<double>(d)) >= reject_band * static_cast<double>(shots)) {
                ++accepted;
                wrong_accepted += wrong;
            }
        }
        n_each[up] = static_cast<double>(n);
    }
    const double eu = err[1] / n_each[1], ed = err[0] / n_each[0];
    out.error = 0.5 * (eu + ed);
    out.sigma = 0.5 * std::sqrt(eu * (1 - eu) / n_each[1] + ed * (1 - ed) / n_each[0]);
    out.acceptance = static_cast<double>(accepted) / static_cast<double>(trials);
    out.error_postselected = accepted > 0 ? static_cast<double>(wrong_accepted) / static_cast<double>(accepted) : 0.0;
    return out;
}

void EstSpec::validate(const DeviceModel &model) const {
    if (register_index >= model.num_registers()) throw ConfigError("est.register", "out of range");
    if (pattern >> model.num_nuclei(register_index)) throw ConfigError("est.pattern", "bits beyond the register");
    if (repetitions < 1 || repetitions > 3) throw ConfigError("est.repetitions", "must lie in [1, 3]");
    if (!(reject_band >= 0 && reject_band <= 1)) throw ConfigError("est.reject_band", "must lie in [0, 1]");
}

namespace {

Circuit est_full_circuit(const Lab &lab, const EstSpec &spec, size_t *qnd_shots) {
    const DeviceModel &m = lab.truth();
    Circuit c = est_circuit(m, spec.register_index, spec.pattern, spec.repetitions);
    *qnd_shots = 0;
    if (spec.verify) {
        *qnd_shots = resolve_shots(lab, spec.qnd_shots);
        c.append(qnd_state_circuit(m, spec.register_index, spec.pattern, *qnd_shots, false));
    }
    return c;
}

bool verified(const ShotRecord &rec, size_t qnd_shots, double band, double *delta_p) {
    *delta_p = static_cast<double>(rec.tally("target") - rec.tally("other")) / static_cast<double>(qnd_shots);
    return *delta_p >= band;
}

}  // namespace

EstResult est_initialize(Lab &lab, const EstSpec &spec, uint64_t initial_state, const NoiseContext *ctx) {
    const DeviceModel &m = lab.truth();
    spec.validate(m);
    size_t qs = 0;
    const Circuit c = est_full_circuit(lab, spec, &qs);
    RunOptions run;
    run.initial_state = initial_state;
    run.truth_pattern = pattern_truth(m, spec.register_index, spec.pattern);
    const NoiseContext nc = exact_preparation(ctx != nullptr ? *ctx : lab.sample_context());
    const ShotRecord rec = lab.run_shots(c, nc, 1, run).at(0);
    EstResult out;
    out.fidelity = rec.truth_probability;
    if (spec.verify) out.success = verified(rec, qs, spec.reject_band, &out.verify_delta_p);
    return out;
}

EstCampaign est_campaign(Lab &lab, const EstSpec &spec, size_t trials) {
    const DeviceModel &m = lab.truth();
    spec.validate(m);
    if (trials == 0) throw DomainError("EST campaign needs at least one trial");
    size_t qs = 0;
    const Circuit c = est_full_circuit(lab, spec, &qs);
    const size_t k = m.num_nuclei(spec.register_index);
    const size_t patterns = size_t{1} << k;
    std::vector<size_t> per(patterns, 0);
    std::uniform_int_distribution<size_t> pick(0, patterns - 1);
    for (size_t t = 0; t < trials; ++t) ++per[pick(lab.rng())];

    EstCampaign out;
    out.trials = trials;
    double sum = 0, sum2 = 0;
    for (size_t p = 0; p < patterns; ++p) {
        if (per[p] == 0) continue;
        RunOptions run;
        for (size_t i = 0; i < k; ++i) {
            if ((p >> i) & 1) run.initial_state |= uint64_t{1} << m.nucleus_spin(spec.register_index, i);
        }
        run.truth_pattern = pattern_truth(m, spec.register_index, spec.pattern);
        const NoiseContext nc = exact_preparation(lab.sample_context());
        for (const ShotRecord &rec : lab.run_shots(c, nc, per[p], run)) {
            double dp = 0;
            if (spec.verify && !verified(rec, qs, spec.reject_band, &dp)) continue;
            ++out.accepted;
            sum += rec.truth_probability;
            sum2 += rec.truth_probability * rec.truth_probability;
        }
    }
    if (out.accepted > 0) {
        const double n = static_cast<double>(out.accepted);
        out.fidelity = sum / n;
        out.sigma = std::sqrt(std::max(0.0, sum2 / n - out.fidelity * out.fidelity) / n);
    }
    return out;
}

const char *campaign_kind_name(CampaignKind kind) {
    switch (kind) {
        case CampaignKind::kEsrRef:
            return "esr_ref";
        case CampaignKind::kEsrOffsets:
            return "esr_offsets";
        case CampaignKind::kJGap:
            return "j_gap";
        case CampaignKind::kNmr:
            return "nmr";
    }
    return "?";
}

CampaignKind parse_campaign_kind(const std::string &name) {
    for (CampaignKind k : {CampaignKind::kEsrRef, CampaignKind::kEsrOffsets, CampaignKind::kJGap, CampaignKind::kNmr}) {
        if (name == campaign_kind_name(k)) return k;
    }
    throw ConfigError("stability.kind", "unknown campaign kind '" + name + "'");
}

void CampaignOptions::validate() const {
    if (!(duration_s > 0)) throw ConfigError("stability.duration_s", "must be positive");
    if (!(cadence_s > 0)) throw ConfigError("stability.cadence_s", "must be positive");
    if (!(bin_hz > 0)) throw ConfigError("stability.bin_hz", "must be positive");
    if (!(nmr_span_hz > 0 && nmr_step_hz > 0 && nmr_rabi_hz > 0)) {
        throw ConfigError("stability.nmr", "span, step and Rabi frequency must be positive");
    }
}

std::vector<double> Histogram::modes(uint64_t min_count) const {
    std::vector<double> out;
    for (size_t i = 0; i < counts.size(); ++i) {
        const uint64_t left = i > 0 ? counts[i - 1] : 0;
        const uint64_t right = i + 1 < counts.size() ? counts[i + 1] : 0;
        if (counts[i] >= min_count && counts[i] > left && counts[i] >= right) {
            out.push_back(origin_hz + (static_cast<double>(i) + 0.5) * bin_hz);
        }
    }
    return out;
}

Histogram make_histogram(const std::vector<double> &values, double bin_hz) {
    if (!(bin_hz > 0)) throw DomainError("histogram bin must be positive");
    Histogram h;
    h.bin_hz = bin_hz;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : values) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!std::isfinite(lo)) return h;
    h.origin_hz = std::floor(lo / bin_hz) * bin_hz;
    h.counts.assign(static_cast<size_t>(std::floor((hi - h.origin_hz) / bin_hz)) + 1, 0);
    for (double v : values) {
        if (std::isfinite(v)) ++h.counts[static_cast<size_t>(std::floor((v - h.origin_hz) / bin_hz))];
    }
    return h;
}

LineStats line_stats(const std::string &label, size_t register_index, const std::vector<double> &values) {
    LineStats s;
    s.label = label;
    s.register_index = register_index;
    std::vector<double> v;
    for (double x : values) {
        if (std::isfinite(x)) v.push_back(x);
    }
    std::sort(v.begin(), v.end());
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (v.empty()) {
        s.mean_hz = s.stddev_hz = s.min_hz = s.q1_hz = s.median_hz = s.q3_hz = s.max_hz = nan;
        return s;
    }
    s.mean_hz = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0;
    for (double x : v) ss += (x - s.mean_hz) * (x - s.mean_hz);
    s.stddev_hz = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    s.min_hz = v.front();
    s.max_hz = v.back();
    s.q1_hz = quantile(v, 0.25);
    s.median_hz = quantile(v, 0.5);
    s.q3_hz = quantile(v, 0.75);
    return s;
}

double CampaignResult::peak_to_peak_hz(size_t line) const {
    const LineStats &s = stats.at(line);
    return s.max_hz - s.min_hz;
}

namespace {

struct TrackedLine {
    std::string label;
    size_t register_index = 0;
    std::function<double(const NoiseContext &)> measure;
};

std::vector<size_t> all_or(const std::vector<size_t> &sel, size_t n) {
    if (!sel.empty()) return sel;
    std::vector<size_t> out(n);
    std::iota(out.begin(), out.end(), 0);
    return out;
}

/// ESR tracking of one register line with the nuclei first flipped into `pattern`.
double track_pattern(Lab &lab, size_t reg, uint32_t pattern, const NoiseContext &ctx) {
    const DeviceModel &m = lab.truth();
    const CalibrationPolicy &pol = lab.policy();
    const size_t e = m.electron_spin(reg);
    const auto circuit_at = [&](double d) {
        Circuit c("esr_track_pattern");
        c.init_electron(e);
        for (size_t i = 0; i < m.num_nuclei(reg); ++i) {
            if ((pattern >> i) & 1) c.nmr(m.nucleus_spin(reg, i), kPi, 0, {{e, SpinState::kDown}});
        }
        c.append(esr_track_circuit(m, reg, pattern, d, pol.rotations, pol.track_rabi_hz));
        return c;
    };
    return track_line(lab, lab.table().esr(reg, pattern, SpinState::kDown), circuit_at, &ctx).frequency_hz;
}

}  // namespace

CampaignResult stability_campaign(Lab &lab, CampaignKind kind, const CampaignOptions &options) {
    options.validate();
    const DeviceModel &m = lab.truth();
    std::vector<TrackedLine> lines;
    switch (kind) {
        case CampaignKind::kEsrRef:
            for (size_t r : all_or(options.registers, m.num_registers())) {
                if (r >= m.num_registers()) throw ConfigError("stability.registers", "out of range");
                lines.push_back({m.registers[r].label + "_ref", r, [&lab, r](const NoiseContext &c) {
                                     return track_reference(lab, r, &c).offset_hz;
                                 }});
            }
            break;
        case CampaignKind::kEsrOffsets:
            for (size_t r : all_or(options.registers, m.num_registers())) {
                if (r >= m.num_registers()) throw ConfigError("stability.registers", "out of range");
                for (uint32_t p = 1; p < (uint32_t{1} << m.num_nuclei(r)); ++p) {
                    std::string label = m.registers[r].label + "_";
                    for (size_t i = 0; i < m.num_nuclei(r); ++i) label += (p >> i) & 1 ? 'u' : 'd';
                    lines.push_back({label, r, [&lab, r, p](const NoiseContext &c) {
                                         return track_pattern(lab, r, p, c) - track_pattern(lab, r, 0, c);
                                     }});
                }
            }
            break;
        case CampaignKind::kJGap:
            if (m.num_registers() != 2) throw ConfigError("stability.kind", "j_gap needs two registers");
            lines.push_back({"J", 0, [&lab](const NoiseContext &c) { return track_exchange(lab, &c).exchange_hz; }});
            break;
        case CampaignKind::kNmr:
            for (size_t n : all_or(options.nuclei, m.num_spins())) {
                if (n >= m.num_spins()) throw ConfigError("stability.nuclei", "out of range");
                if (m.is_electron(n)) {
                    if (options.nuclei.empty()) continue;
                    throw ConfigError("stability.nuclei", m.spin_name(n) + " is not a nucleus");
                }
                lines.push_back({m.spin_name(n), m.spin_ref(n).register_index, [&lab, &options, n](const NoiseContext &c) {
                                     return track_nmr(lab, n, options.nmr_span_hz, options.nmr_step_hz,
                                                      options.nmr_rabi_hz, &c)
                                         .frequency_hz;
                                 }});
            }
            break;
    }

    CampaignResult out;
    out.kind = kind;
    for (const TrackedLine &l : lines) out.labels.push_back(l.label);
    out.values_hz.assign(lines.size(), {});
    const double start = lab.time_s();
    const auto points = static_cast<size_t>(std::floor(options.duration_s / options.cadence_s + 1e-9));
    for (size_t i = 0; i < points; ++i) {
        const double slot = start + static_cast<double>(i) * options.cadence_s;
        if (lab.time_s() < slot) lab.advance(slot - lab.time_s());
        out.times_s.push_back(lab.time_s() - start);
        const NoiseContext ctx = lab.sample_context();
        for (size_t j = 0; j < lines.size(); ++j) {
            double v = std::numeric_limits<double>::quiet_NaN();
            try {
                v = lines[j].measure(ctx);
            } catch (const CalibrationLost &e) {
                out.lost_events.push_back("t=" + std::to_string(out.times_s.back()) + " s " + lines[j].label + ": " +
                                          e.what());
            }
            out.values_hz[j].push_back(v);
        }
    }
    std::vector<double> sum(m.num_registers(), 0.0);
    std::vector<size_t> cnt(m.num_registers(), 0);
    for (size_t j = 0; j < lines.size(); ++j) {
        out.stats.push_back(line_stats(lines[j].label, lines[j].register_index, out.values_hz[j]));
        out.histograms.push_back(make_histogram(out.values_hz[j], options.bin_hz));
        if (std::isfinite(out.stats.back().stddev_hz)) {
            sum[lines[j].register_index] += out.stats.back().stddev_hz;
            ++cnt[lines[j].register_index];
        }
    }
    for (size_t r = 0; r < sum.size(); ++r) {
        out.sigma_bar_hz.push_back(cnt[r] > 0 ? sum[r] / static_cast<double>(cnt[r])
                                              : std::numeric_limits<double>::quiet_NaN());
    }
    return out;
}

std::vector<BellRow> bell_campaign(Lab &lab, const std::vector<std::pair<size_t, size_t>> &pairs, BellState state,
                                   size_t shots, size_t resamples, bool exact) {
    const DeviceModel &m = lab.truth();
    std::vector<BellRow> out;
    for (const auto &[a, b] : pairs) {
        TomographySpec spec = TomographySpec::full({a, b});
        spec.shots = shots;
        const TomographyData data = collect_tomography(lab, bell_circuit(m, a, b, state), spec, exact);
        const FidelityEstimate f =
            tomography_fidelity(data, restrict_state(bell_target(m, a, b, state), {a, b}), exact ? 0 : resamples);
        out.push_back({a, b, f.fidelity, f.sigma});
    }
    return out;
}

std::vector<GhzRow> ghz_campaign(Lab &lab, const std::vector<size_t> &sizes, bool reduced, size_t shots,
                                 size_t resamples, bool exact) {
    const DeviceModel &m = lab.truth();
    std::vector<GhzRow> out;
    for (size_t n : sizes) {
        const std::vector<size_t> order = default_ghz_order(m, n);
        TomographySpec spec = reduced ? TomographySpec::reduced_ghz(order) : TomographySpec::full(order);
        spec.shots = shots;
        const TomographyData data = collect_tomography(lab, ghz_circuit(m, order), spec, exact);
        GhzRow row;
        row.n = n;
        row.reduced = reduced;
        row.estimate = reduced ? ghz_fidelity_reduced(data, exact ? 0 : resamples)
                               : tomography_fidelity(data, restrict_state(ghz_target(m, order), order),
                                                     exact ? 0 : resamples);
        out.push_back(row);
    }
    return out;
}

}  // namespace donorsim
