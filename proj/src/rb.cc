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

#include "donorsim/rb.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "donorsim/circuits.h"
#include "donorsim/errors.h"
#include "donorsim/fitting.h"

namespace donorsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double dimension(size_t num_qubits) {
    return static_cast<double>(size_t{1} << num_qubits);
}

double sample_stddev(const std::vector<double> &v) {
    if (v.size() < 2) return kNaN;
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

CountsTable resample(const CountsTable &t, std::mt19937_64 &rng) {
    CountsTable out;
    out.rejected = t.rejected;
    uint64_t left = t.total();
    double mass = 1;
    // Sequential binomials reproduce a multinomial draw.
    for (auto it = t.counts.begin(); it != t.counts.end(); ++it) {
        const double q = static_cast<double>(it->second) / static_cast<double>(t.total());
        uint64_t k = left;
        if (std::next(it) != t.counts.end() && left > 0) {
            const double pr = std::clamp(q / mass, 0.0, 1.0);
            k = std::binomial_distribution<uint64_t>(left, pr)(rng);
        }
        if (k > 0) out.add(it->first, k);
        left -= k;
        mass -= q;
    }
    return out;
}

std::vector<RbPoint> points_from_counts(const std::vector<std::vector<std::vector<CountsTable>>> &counts,
                                        const std::vector<size_t> &lengths, const std::string &all_up) {
    std::vector<RbPoint> pts(lengths.size());
    for (size_t l = 0; l < lengths.size(); ++l) {
        pts[l].length = lengths[l];
        double f[2] = {0, 0};
        for (size_t d = 0; d < 2; ++d) {
            for (const CountsTable &t : counts[d][l]) f[d] += t.probability(all_up);
            f[d] /= static_cast<double>(counts[d][l].size());
        }
        pts[l].f_up = f[0];
        pts[l].f_down = f[1];
        pts[l].f = f[0] - f[1];
    }
    return pts;
}

struct Fitted {
    double a = kNaN, p = kNaN, f_c = kNaN, f_p = kNaN;
    bool ok = false;
    std::string why;
};

Fitted fit_points(const std::vector<RbPoint> &pts, size_t nq, double n_bar) {
    Fitted r;
    std::vector<double> n, y;
    for (const RbPoint &q : pts) {
        n.push_back(static_cast<double>(q.length));
        y.push_back(q.f);
    }
    DecayFit fit;
    try {
        fit = fit_decay(n, y);
    } catch (const Error &e) {
        r.why = e.what();
        return r;
    }
    if (!fit.converged || !std::isfinite(fit.p) || !std::isfinite(fit.amplitude)) {
        r.why = "decay fit did not converge";
        return r;
    }
    if (!(fit.amplitude > 0)) {
        r.why = "no decay signal (fitted amplitude <= 0)";
        return r;
    }
    r.a = fit.amplitude;
    r.p = fit.p;
    r.f_c = clifford_fidelity(fit.p, nq);
    r.f_p = nq == 1 ? r.f_c : primitive_fidelity(r.f_c, n_bar);
    r.ok = true;
    return r;
}

std::string all_up_key(size_t nq) {
    return std::string(nq, '1');
}

}  // namespace

RbConfig RbConfig::one_qubit() {
    return RbConfig{};
}

RbConfig RbConfig::two_qubit(bool nuclear) {
    RbConfig c;
    c.variations = 20;
    c.lengths = {1, 2, 4, 8, 16, 32, 64, 128, 256};
    c.shots = nuclear ? 50 : 200;
    return c;
}

void RbConfig::validate() const {
    if (variations < 1) throw ConfigError("rb.variations", "must be >= 1");
    if (lengths.size() < 2) throw ConfigError("rb.lengths", "needs at least two lengths");
    for (size_t i = 1; i < lengths.size(); ++i) {
        if (lengths[i] <= lengths[i - 1]) throw ConfigError("rb.lengths[" + std::to_string(i) + "]", "must ascend");
    }
    if (shots < 1) throw ConfigError("rb.shots", "must be >= 1");
    if (bootstrap_resamples != 0 && bootstrap_resamples < 100) {
        throw ConfigError("rb.bootstrap_resamples", "must be 0 (off) or >= 100");
    }
    if (!(depolarizing >= 0 && depolarizing <= 1)) throw ConfigError("rb.depolarizing", "must be in [0, 1]");
    if (!(interleaved_depolarizing >= 0 && interleaved_depolarizing <= 1)) {
        throw ConfigError("rb.interleaved_depolarizing", "must be in [0, 1]");
    }
}

double clifford_fidelity(double p, size_t num_qubits) {
    const double d = dimension(num_qubits);
    return (1 + (d - 1) * p) / d;
}

double primitive_fidelity(double f_c, double n_bar) {
    if (!(n_bar > 0)) throw DomainError("n_bar must be positive");
    return 1 - (1 - f_c) / n_bar;
}

double interleaved_fidelity(double ratio, size_t num_qubits) {
    return clifford_fidelity(ratio, num_qubits);
}

NativeSet rb_native_set(const DeviceModel &model, const std::vector<size_t> &qubits) {
    if (qubits.size() == 1) return NativeSet::kEuler1q;
    if (qubits.size() != 2) throw CircuitError("RB acts on one or two qubits");
    const bool e0 = model.is_electron(qubits[0]), e1 = model.is_electron(qubits[1]);
    if (e0 != e1) throw CircuitError("RB pair mixes an electron and a nucleus");
    return e0 ? NativeSet::kCrot2q : NativeSet::kNuclearCz2q;
}

void fit_rb(RbResult &r) {
    const Fitted f = fit_points(r.points, r.num_qubits, r.n_bar);
    r.amplitude = f.a;
    r.p = f.p;
    r.f_c = f.f_c;
    r.f_p = f.f_p;
    r.fit_ok = f.ok;
    r.diagnostic = f.why;
}

RbResult run_rb(Lab &lab, const std::vector<size_t> &qubits, const RbConfig &config, int interleaved) {
    config.validate();
    const DeviceModel &m = lab.truth();
    const NativeSet set = rb_native_set(m, qubits);
    const size_t nq = qubits.size();
    const CliffordGroup &g = CliffordGroup::get(static_cast<int>(nq));
    if (interleaved >= 0 && static_cast<size_t>(interleaved) >= g.size()) {
        throw CircuitError("interleaved Clifford index out of range");
    }

    RbResult r;
    r.num_qubits = nq;
    r.native_set = set;
    r.n_bar = nq == 1 ? 1.0 : g.mean_physical_count(set);
    r.counts.assign(2, std::vector<std::vector<CountsTable>>(config.lengths.size()));

    const uint64_t set_seed = interleaved >= 0 && !config.reuse_sets ? config.seed ^ 0x9e3779b97f4a7c15ULL : config.seed;
    std::mt19937_64 pick(set_seed);
    std::uniform_int_distribution<size_t> uni(0, g.size() - 1);
    for (size_t l = 0; l < config.lengths.size(); ++l) {
        for (size_t v = 0; v < config.variations; ++v) {
            std::vector<size_t> seq(config.lengths[l]);
            for (auto &x : seq) x = uni(pick);
            for (size_t d = 0; d < 2; ++d) {
                const Circuit c = rb_sequence_circuit(m, qubits, seq, set, d == 0, config.depolarizing, interleaved,
                                                      config.interleaved_depolarizing);
                r.counts[d][l].push_back(lab.run(c, config.shots));
            }
        }
    }
    const std::string key = all_up_key(nq);
    r.points = points_from_counts(r.counts, config.lengths, key);
    fit_rb(r);
    if (!r.fit_ok) {
        r.sigma_amplitude = r.sigma_p = r.sigma_f_c = r.sigma_f_p = kNaN;
        return r;
    }

    if (config.bootstrap_resamples > 0) {
        std::vector<CountsTable> flat;
        for (const auto &dir : r.counts) {
            for (const auto &len : dir) flat.insert(flat.end(), len.begin(), len.end());
        }
        const size_t nl = config.lengths.size(), nv = config.variations;
        const auto stat = [&](const std::vector<CountsTable> &t) -> std::vector<double> {
            std::vector<std::vector<std::vector<CountsTable>>> c(2, std::vector<std::vector<CountsTable>>(nl));
            size_t k = 0;
            for (size_t d = 0; d < 2; ++d) {
                for (size_t l = 0; l < nl; ++l) c[d][l].assign(t.begin() + k, t.begin() + k + nv), k += nv;
            }
            const Fitted f = fit_points(points_from_counts(c, config.lengths, key), nq, r.n_bar);
            return {f.a, f.p, f.f_c, f.f_p};
        };
        const auto s = bootstrap_errors(flat, config.bootstrap_resamples, stat, config.seed + 17);
        r.sigma_amplitude = s[0];
        r.sigma_p = s[1];
        r.sigma_f_c = s[2];
        r.sigma_f_p = s[3];
    }
    return r;
}

InterleavedRbResult run_interleaved_rb(Lab &lab, const std::vector<size_t> &qubits, const RbConfig &config,
                                       size_t target, const RbResult *reference) {
    InterleavedRbResult out;
    out.target = target;
    out.reference = reference != nullptr ? *reference : run_rb(lab, qubits, config);
    out.interleaved = run_rb(lab, qubits, config, static_cast<int>(target));
    const RbResult &a = out.reference, &b = out.interleaved;
    const size_t nq = qubits.size();
    if (!a.fit_ok || !b.fit_ok || !(a.p > 0)) {
        out.ratio = out.f_i = out.sigma_f_i = kNaN;
        out.warning = "reference or interleaved fit failed";
        return out;
    }
    out.ratio = b.p / a.p;
    double rel = 0;
    if (std::isfinite(a.sigma_p) && std::isfinite(b.sigma_p) && b.p > 0) {
        rel = std::hypot(a.sigma_p / a.p, b.sigma_p / b.p);
    }
    const double sigma_ratio = out.ratio * rel;
    if (out.ratio > 1 + 2 * sigma_ratio) {
        out.clamped = true;
        out.warning = "interleaved decay slower than reference beyond 2 sigma; ratio clamped to 1";
        out.ratio = 1;
    }
    out.f_i = interleaved_fidelity(out.ratio, nq);
    const double d = dimension(nq);
    out.sigma_f_i = (d - 1) / d * sigma_ratio;
    return out;
}

std::vector<double> bootstrap_errors(const std::vector<CountsTable> &counts, size_t resamples,
                                     const std::function<std::vector<double>(const std::vector<CountsTable> &)> &statistic,
                                     uint64_t seed) {
    if (counts.empty()) throw DomainError("bootstrap needs at least one count table");
    for (const CountsTable &t : counts) {
        if (t.total() == 0) throw DomainError("bootstrap count table is empty");
    }
    if (resamples < 100) throw DomainError("bootstrap needs at least 100 resamples");
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> values;
    std::vector<CountsTable> draw(counts.size());
    for (size_t k = 0; k < resamples; ++k) {
        for (size_t i = 0; i < counts.size(); ++i) draw[i] = resample(counts[i], rng);
        const std::vector<double> s = statistic(draw);
        if (values.empty()) values.resize(s.size());
        for (size_t j = 0; j < s.size(); ++j) {
            if (std::isfinite(s[j])) values[j].push_back(s[j]);
        }
    }
    std::vector<double> out;
    for (const auto &v : values) out.push_back(sample_stddev(v));
    return out;
}

double bootstrap_error(const std::vector<CountsTable> &counts, size_t resamples,
                       const std::function<double(const std::vector<CountsTable> &)> &statistic, uint64_t seed) {
    return bootstrap_errors(
        counts, resamples, [&](const std::vector<CountsTable> &t) { return std::vector<double>{statistic(t)}; },
        seed)[0];
}

}  // namespace donorsim
