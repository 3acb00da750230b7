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

#include "donorsim/clifford.h"

#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <numbers>

#include "donorsim/errors.h"

namespace donorsim {

namespace {

using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

Eigen::Matrix2cd rot(double theta, double phi) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const cd i(0, 1);
    Eigen::Matrix2cd m;
    m << c, -i * s * std::exp(-i * phi), -i * s * std::exp(i * phi), c;
    return m;
}

Eigen::Matrix2cd rz(double theta) {
    const cd i(0, 1);
    Eigen::Matrix2cd m;
    m << std::exp(-i * (theta / 2)), 0, 0, std::exp(i * (theta / 2));
    return m;
}

Eigen::MatrixXcd embed(const Eigen::Matrix2cd &u, int qubit, int n) {
    const int d = 1 << n;
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
    for (int r = 0; r < d; ++r) {
        for (int c = 0; c < d; ++c) {
            if ((r & ~(1 << qubit)) != (c & ~(1 << qubit))) continue;
            m(r, c) = u((r >> qubit) & 1, (c >> qubit) & 1);
        }
    }
    return m;
}

Eigen::Matrix2cd pauli(int k) {
    Eigen::Matrix2cd m;
    const cd i(0, 1);
    switch (k) {
        case 0:
            m << 1, 0, 0, 1;
            break;
        case 1:
            m << 0, 1, 1, 0;
            break;
        case 2:
            m << 0, -i, i, 0;
            break;
        default:
            m << 1, 0, 0, -1;
    }
    return m;
}

}  // namespace

Eigen::MatrixXcd primitive_unitary(const Primitive &p, int n) {
    if (p.qubit < 0 || p.qubit >= n || (p.control >= n)) {
        throw ShapeError("primitive qubit out of range");
    }
    switch (p.kind) {
        case PrimitiveKind::kVirtualZ:
            return embed(rz(-p.angle), p.qubit, n);
        case PrimitiveKind::kRotation:
            return embed(rot(p.angle, p.phase), p.qubit, n);
        case PrimitiveKind::kCz: {
            if (n != 2) throw ShapeError("CZ needs two qubits");
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(4, 4);
            m(3, 3) = -1;
            return m;
        }
        case PrimitiveKind::kCrot: {
            if (p.control < 0 || p.control == p.qubit) throw ShapeError("CROT needs a distinct control");
            const int d = 1 << n;
            const Eigen::MatrixXcd x = embed(rot(kPi, 0), p.qubit, n);
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(d, d);
            for (int c = 0; c < d; ++c) {
                const bool active = ((c >> p.control) & 1) == p.control_state;
                for (int r = 0; r < d; ++r) {
                    m(r, c) = active ? x(r, c) : (r == c ? cd(1) : cd(0));
                }
            }
            return m;
        }
    }
    return {};
}

Eigen::MatrixXcd sequence_unitary(const std::vector<Primitive> &seq, int n) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1 << n, 1 << n);
    for (const auto &p : seq) {
        u = primitive_unitary(p, n) * u;
    }
    return u;
}

double phase_insensitive_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("matrix dimensions differ");
    }
    const cd overlap = (b.adjoint() * a).trace();
    const cd phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cd(1);
    return (a - phase * b).cwiseAbs().maxCoeff();
}

EulerAngles euler_zyz(const Eigen::Matrix2cd &u) {
    const Eigen::Matrix2cd v = u / std::sqrt(u.determinant());
    const double theta = 2 * std::atan2(std::abs(v(1, 0)), std::abs(v(0, 0)));
    const double eps = 1e-12;
    const double half_sum = std::abs(v(1, 1)) > eps ? std::arg(v(1, 1)) : 0.0;
    const double half_diff = std::abs(v(1, 0)) > eps ? std::arg(v(1, 0)) : 0.0;
    return {half_sum + half_diff, theta, half_sum - half_diff};
}

CliffordGroup::CliffordGroup(int n) : num_qubits_(n) {
    const int np = 1 << (2 * n);
    for (int code = 0; code < np; ++code) {
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Ones(1, 1);
        for (int q = n - 1; q >= 0; --q) {
            const Eigen::Matrix2cd p = pauli((code >> (2 * q)) & 3);
            Eigen::MatrixXcd k(m.rows() * 2, m.cols() * 2);
            for (int r = 0; r < m.rows(); ++r) {
                for (int c = 0; c < m.cols(); ++c) {
                    k.block(2 * r, 2 * c, 2, 2) = m(r, c) * p;
                }
            }
            m = k;
        }
        paulis_.push_back(m);
    }
    std::vector<Eigen::MatrixXcd> gens;
    const double s2 = 1 / std::sqrt(2.0);
    Eigen::Matrix2cd h;
    h << s2, s2, s2, -s2;
    Eigen::Matrix2cd s;
    s << 1, 0, 0, cd(0, 1);
    for (int q = 0; q < n; ++q) {
        gens.push_back(embed(h, q, n));
        gens.push_back(embed(s, q, n));
    }
    if (n == 2) {
        Eigen::MatrixXcd cz = Eigen::MatrixXcd::Identity(4, 4);
        cz(3, 3) = -1;
        gens.push_back(cz);
    }
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(1 << n, 1 << n);
    unitaries_.push_back(id);
    index_[key(id)] = 0;
    for (size_t head = 0; head < unitaries_.size(); ++head) {
        for (const auto &g : gens) {
            Eigen::MatrixXcd u = g * unitaries_[head];
            const uint64_t k = key(u);
            if (index_.count(k)) continue;
            index_[k] = unitaries_.size();
            unitaries_.push_back(std::move(u));
        }
    }
    inverses_.resize(unitaries_.size());
    for (size_t i = 0; i < unitaries_.size(); ++i) {
        inverses_[i] = find(unitaries_[i].adjoint());
    }
}

const CliffordGroup &CliffordGroup::get(int num_qubits) {
    if (num_qubits == 1) {
        static const CliffordGroup g1(1);
        return g1;
    }
    if (num_qubits == 2) {
        static const CliffordGroup g2(2);
        return g2;
    }
    throw DomainError("Clifford groups are provided for one or two qubits");
}

uint64_t CliffordGroup::key(const Eigen::MatrixXcd &u) const {
    const int n = num_qubits_;
    const double d = static_cast<double>(1 << n);
    uint64_t k = 0;
    for (int q = 0; q < n; ++q) {
        for (int which : {1, 3}) {
            const Eigen::MatrixXcd g = paulis_[static_cast<size_t>(which) << (2 * q)];
            const Eigen::MatrixXcd m = u * g * u.adjoint();
            int best = -1;
            cd coef = 0;
            for (size_t c = 1; c < paulis_.size(); ++c) {
                const cd t = (paulis_[c] * m).trace() / d;
                if (std::abs(t) > 0.5) {
                    best = static_cast<int>(c);
                    coef = t;
                    break;
                }
            }
            if (best < 0 || std::abs(std::abs(coef) - 1) > 1e-6 || std::abs(coef.imag()) > 1e-6) {
                return std::numeric_limits<uint64_t>::max();
            }
            k = k * (2 * paulis_.size()) + static_cast<uint64_t>(2 * best + (coef.real() < 0 ? 1 : 0));
        }
    }
    return k;
}

size_t CliffordGroup::find(const Eigen::MatrixXcd &u) const {
    if (u.rows() != (1 << num_qubits_) || u.cols() != u.rows()) {
        throw ShapeError("unitary dimension does not match the group");
    }
    auto it = index_.find(key(u));
    if (it == index_.end()) {
        throw DomainError("matrix is not a Clifford element");
    }
    return it->second;
}

size_t CliffordGroup::compose(size_t first, size_t second) const {
    return find(unitaries_.at(second) * unitaries_.at(first));
}

const std::vector<std::vector<Primitive>> &CliffordGroup::decompositions(NativeSet set) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto &out = decomp_[static_cast<int>(set)];
    if (!out.empty()) return out;
    const int n = num_qubits_;
    if (set == NativeSet::kEuler1q) {
        if (n != 1) throw DomainError("Euler decomposition applies to one qubit");
        out.resize(size());
        for (size_t i = 0; i < size(); ++i) {
            const EulerAngles e = euler_zyz(unitaries_[i]);
            out[i] = {{PrimitiveKind::kVirtualZ, 0, -e.b},
                      {PrimitiveKind::kRotation, 0, e.theta, kPi / 2},
                      {PrimitiveKind::kVirtualZ, 0, -e.a}};
        }
        return out;
    }
    if (n != 2) throw DomainError("two-qubit native sets need the two-qubit group");
    std::vector<Primitive> physical, free;
    for (int q = 0; q < 2; ++q) {
        for (double a : {kPi / 2, -kPi / 2}) {
            physical.push_back({PrimitiveKind::kRotation, q, a, 0});
            physical.push_back({PrimitiveKind::kRotation, q, a, kPi / 2});
        }
        for (double a : {kPi / 2, -kPi / 2, kPi}) free.push_back({PrimitiveKind::kVirtualZ, q, a});
    }
    if (set == NativeSet::kNuclearCz2q) {
        physical.push_back({PrimitiveKind::kCz, 0});
    } else {
        for (int t = 0; t < 2; ++t) {
            for (int s = 0; s < 2; ++s) physical.push_back({PrimitiveKind::kCrot, t, kPi, 0, 1 - t, s});
        }
    }
    std::vector<Eigen::MatrixXcd> pu, fu;
    for (const auto &p : physical) pu.push_back(primitive_unitary(p, 2));
    for (const auto &p : free) fu.push_back(primitive_unitary(p, 2));
    const size_t none = std::numeric_limits<size_t>::max();
    std::vector<size_t> dist(size(), none), pred(size(), none);
    std::vector<Primitive> via(size());
    std::deque<size_t> dq{0};
    dist[0] = 0;
    std::vector<bool> done(size(), false);
    while (!dq.empty()) {
        const size_t cur = dq.front();
        dq.pop_front();
        if (done[cur]) continue;
        done[cur] = true;
        auto relax = [&](const Eigen::MatrixXcd &g, const Primitive &p, size_t w) {
            const size_t nxt = find(g * unitaries_[cur]);
            if (dist[cur] + w < dist[nxt]) {
                dist[nxt] = dist[cur] + w;
                pred[nxt] = cur;
                via[nxt] = p;
                if (w == 0) {
                    dq.push_front(nxt);
                } else {
                    dq.push_back(nxt);
                }
            }
        };
        for (size_t k = 0; k < free.size(); ++k) relax(fu[k], free[k], 0);
        for (size_t k = 0; k < physical.size(); ++k) relax(pu[k], physical[k], 1);
    }
    out.resize(size());
    for (size_t i = 0; i < size(); ++i) {
        std::vector<Primitive> seq;
        for (size_t cur = i; cur != 0; cur = pred[cur]) seq.push_back(via[cur]);
        out[i].assign(seq.rbegin(), seq.rend());
    }
    return out;
}

const std::vector<Primitive> &CliffordGroup::decomposition(size_t i, NativeSet set) const {
    return decompositions(set).at(i);
}

double CliffordGroup::mean_physical_count(NativeSet set) const {
    const auto &all = decompositions(set);
    double total = 0;
    for (const auto &seq : all) {
        for (const auto &p : seq) total += p.physical() ? 1 : 0;
    }
    return total / static_cast<double>(all.size());
}

}  // namespace donorsim
