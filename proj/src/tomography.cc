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

#include "donorsim/tomography.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <unordered_map>
#include <unsupported/Eigen/NonLinearOptimization>

#include "donorsim/circuits.h"
#include "donorsim/errors.h"
#include "donorsim/rb.h"

namespace donorsim {

namespace {

constexpr double kPi = std::numbers::pi;
const Complex kI(0, 1);

bool near(double a, double b) {
    return std::abs(std::remainder(a - b, 2 * kPi)) < 1e-9;
}

Eigen::Matrix2cd pauli(int k) {
    Eigen::Matrix2cd m;
    switch (k) {
        case 0:
            m << 1, 0, 0, 1;
            break;
        case 1:
            m << 0, 1, 1, 0;
            break;
        case 2:
            m << 0, -kI, kI, 0;
            break;
        default:
            m << 1, 0, 0, -1;
    }
    return m;
}

Eigen::Matrix2cd rot(double theta, double phi) {
    return std::cos(theta / 2) * pauli(0) - kI * std::sin(theta / 2) * (std::cos(phi) * pauli(1) + std::sin(phi) * pauli(2));
}

/// Logical measurement rotation of one qubit for a setting.
Eigen::Matrix2cd projection_unitary(Basis b, double phase) {
    switch (b) {
        case Basis::kX:
            return rot(kPi / 2, -kPi / 2);
        case Basis::kY:
            return rot(kPi / 2, 0);
        case Basis::kZ:
            return pauli(0);
        case Basis::kEquator:
            return rot(kPi / 2, phase - kPi / 2);
    }
    return pauli(0);
}

/// proj[b] = U^dag |b><b| U.
std::array<Eigen::Matrix2cd, 2> projectors(Basis b, double phase) {
    const Eigen::Matrix2cd u = projection_unitary(b, phase);
    std::array<Eigen::Matrix2cd, 2> out;
    for (int s = 0; s < 2; ++s) {
        Eigen::Matrix2cd k = Eigen::Matrix2cd::Zero();
        k(s, s) = 1;
        out[s] = u.adjoint() * k * u;
    }
    return out;
}

std::string outcome_key(uint64_t s, size_t n) {
    std::string k(n, '0');
    for (size_t i = 0; i < n; ++i) {
        if ((s >> i) & 1) k[i] = '1';
    }
    return k;
}

double prob(const std::map<std::string, double> &p, const std::string &k) {
    const auto it = p.find(k);
    return it == p.end() ? 0.0 : it->second;
}

bool touches(const GateOp &op, size_t q) {
    if (std::find(op.targets.begin(), op.targets.end(), q) != op.targets.end()) return true;
    return std::any_of(op.condition.begin(), op.condition.end(), [&](const Control &c) { return c.spin == q; });
}

/// Index of a trailing Y/2 on `q` that no later op touches, or -1.
int trailing_y2(const Circuit &c, size_t q) {
    for (size_t j = c.ops.size(); j-- > 0;) {
        const GateOp &op = c.ops[j];
        if (!touches(op, q)) continue;
        const bool rotation = op.kind == OpKind::kNmr || op.kind == OpKind::kEsr;
        if (!rotation || op.targets.size() != 1 || std::abs(op.angle - kPi / 2) > 1e-12 || !near(op.phase, kPi / 2)) {
            return -1;
        }
        for (const RepeatBlock &b : c.repeat_blocks) {
            if (b.end > j) return -1;
        }
        return static_cast<int>(j);
    }
    return -1;
}

std::vector<Setting> all_settings(size_t n) {
    std::vector<Setting> out;
    size_t total = 1;
    for (size_t i = 0; i < n; ++i) total *= 3;
    for (size_t k = 0; k < total; ++k) {
        Setting s;
        size_t x = k;
        for (size_t i = 0; i < n; ++i) {
            s.bases.push_back(static_cast<Basis>(x % 3));
            x /= 3;
        }
        out.push_back(s);
    }
    return out;
}

std::vector<std::map<std::string, double>> to_probabilities(const std::vector<CountsTable> &counts) {
    std::vector<std::map<std::string, double>> out;
    for (const CountsTable &t : counts) out.push_back(t.probabilities());
    return out;
}

size_t popcount_key(const std::string &k) {
    return static_cast<size_t>(std::count(k.begin(), k.end(), '1'));
}

/// Weighted residuals of outcome probabilities for rho = T T^dag / Tr(T T^dag), with T lower
/// triangular: real diagonal first, then (re, im) of every entry below it.
struct CholeskyResidual {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    Eigen::Index d;
    const Eigen::MatrixXcd &design;  // rows x d^2, p = Re(design * vec(rho)), vec row-major
    const Eigen::VectorXd &observed;
    const Eigen::VectorXd &sqrt_w;

    int inputs() const {
        return static_cast<int>(d * d);
    }
    int values() const {
        return static_cast<int>(observed.size());
    }

    Eigen::MatrixXcd unpack(const Eigen::VectorXd &x) const {
        Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(d, d);
        Eigen::Index k = 0;
        for (Eigen::Index i = 0; i < d; ++i) t(i, i) = x(k++);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < i; ++j, k += 2) t(i, j) = Complex(x(k), x(k + 1));
        }
        return t;
    }
    static Eigen::VectorXcd vec(const Eigen::MatrixXcd &m) {
        Eigen::VectorXcd v(m.size());
        for (Eigen::Index a = 0; a < m.rows(); ++a) {
            for (Eigen::Index b = 0; b < m.cols(); ++b) v(a * m.cols() + b) = m(a, b);
        }
        return v;
    }
    int operator()(const Eigen::VectorXd &x, Eigen::VectorXd &f) const {
        const Eigen::MatrixXcd t = unpack(x);
        const Eigen::MatrixXcd m = t * t.adjoint();
        const Eigen::VectorXcd p = design * vec(m / m.trace().real());
        f = sqrt_w.cwiseProduct(p.real() - observed);
        return 0;
    }
    int df(const Eigen::VectorXd &x, Eigen::MatrixXd &jac) const {
        const Eigen::MatrixXcd t = unpack(x);
        const Eigen::MatrixXcd m = t * t.adjoint();
        const double tr = m.trace().real();
        const Eigen::MatrixXcd rho = m / tr;
        Eigen::MatrixXcd dr(d * d, d * d);
        Eigen::Index k = 0;
        const auto column = [&](Eigen::Index i, Eigen::Index j, Complex e) {
            // dM = E T^dag + T E^dag with E = e at (i, j).
            Eigen::MatrixXcd et = Eigen::MatrixXcd::Zero(d, d);
            et.row(i) = e * t.col(j).adjoint();
            const Eigen::MatrixXcd dm = et + et.adjoint();
            dr.col(k++) = vec((dm - rho * dm.trace().real()) / tr);
        };
        for (Eigen::Index i = 0; i < d; ++i) column(i, i, 1);
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index j = 0; j < i; ++j) {
                column(i, j, 1);
                column(i, j, Complex(0, 1));
            }
        }
        jac = sqrt_w.asDiagonal() * (design * dr).real();
        return 0;
    }
};

}  // namespace

std::string Setting::label() const {
    if (std::any_of(bases.begin(), bases.end(), [](Basis b) { return b == Basis::kEquator; })) {
        return "phi" + std::to_string(phase);
    }
    std::string s;
    for (Basis b : bases) s += b == Basis::kX ? 'x' : b == Basis::kY ? 'y' : 'z';
    return s;
}

TomographySpec TomographySpec::full(std::vector<size_t> qubits) {
    TomographySpec s;
    s.settings = all_settings(qubits.size());
    s.qubits = std::move(qubits);
    return s;
}

TomographySpec TomographySpec::reduced_ghz(std::vector<size_t> qubits) {
    TomographySpec s;
    const size_t n = qubits.size();
    s.settings.push_back({std::vector<Basis>(n, Basis::kZ), 0});
    for (size_t k = 0; k < n; ++k) {
        s.settings.push_back({std::vector<Basis>(n, Basis::kEquator), kPi * static_cast<double>(k) / static_cast<double>(n)});
    }
    s.qubits = std::move(qubits);
    return s;
}

void TomographySpec::validate() const {
    if (qubits.empty()) throw ConfigError("tomography.qubits", "must not be empty");
    if (settings.empty()) throw ConfigError("tomography.settings", "must not be empty");
    for (size_t i = 0; i < settings.size(); ++i) {
        if (settings[i].bases.size() != qubits.size()) {
            throw ConfigError("tomography.settings[" + std::to_string(i) + "]", "needs one basis per qubit");
        }
    }
    if (shots < 1) throw ConfigError("tomography.shots", "must be >= 1");
    if (!(min_acceptance >= 0 && min_acceptance <= 1)) throw ConfigError("tomography.min_acceptance", "must be in [0, 1]");
}

ProjectionEdit append_projection(Circuit &c, const DeviceModel &model, size_t q, Basis basis, double phase,
                                 bool merge) {
    if (model.is_electron(q)) throw CircuitError("tomography projections act on nuclear data qubits");
    ProjectionEdit e;
    const int t = merge && (basis == Basis::kX || basis == Basis::kY) ? trailing_y2(c, q) : -1;
    if (t >= 0) {
        const auto at = c.ops.begin() + t;
        if (basis == Basis::kX) {
            c.ops.erase(at);
            e.removed = 1;
        } else {
            GateOp vz;
            vz.kind = OpKind::kVirtualZ;
            vz.targets = {q};
            vz.angle = -kPi / 2;
            c.ops.insert(at, vz);
        }
        return e;
    }
    switch (basis) {
        case Basis::kZ:
            return e;
        case Basis::kX:
            append_nuclear_rotation(c, model, q, -kPi / 2, kPi / 2);
            break;
        case Basis::kY:
            append_nuclear_rotation(c, model, q, kPi / 2, 0);
            break;
        case Basis::kEquator:
            append_nuclear_rotation(c, model, q, kPi / 2, phase - kPi / 2);
            break;
    }
    e.added_physical = 1;
    return e;
}

Circuit tomography_circuit(const Circuit &state, const DeviceModel &model, const TomographySpec &spec,
                           const Setting &setting, bool postselect) {
    for (const GateOp &op : state.ops) {
        if (op.kind == OpKind::kMeasureElectron || op.kind == OpKind::kReadNucleus) {
            throw CircuitError("tomography state circuit must not measure");
        }
    }
    if (setting.bases.size() != spec.qubits.size()) throw CircuitError("setting does not match the qubit list");
    Circuit c(state.label + "_" + setting.label());
    if (postselect) {
        for (size_t q : spec.qubits) c.read_nucleus(q, false, 0);
    }
    c.append(state);
    for (size_t k = 0; k < spec.qubits.size(); ++k) {
        append_projection(c, model, spec.qubits[k], setting.bases[k], setting.phase, spec.merge);
    }
    for (size_t q : spec.qubits) c.read_nucleus(q);
    return c;
}

TomographyData collect_tomography(Lab &lab, const Circuit &state, const TomographySpec &spec, bool exact) {
    spec.validate();
    TomographyData d;
    d.spec = spec;
    d.exact = exact;
    for (const Setting &s : spec.settings) {
        const Circuit c = tomography_circuit(state, lab.truth(), spec, s, spec.postselect && !exact);
        if (exact) {
            d.probabilities.push_back(lab.exact(c, lab.sample_context(), spec.shots));
            d.acceptance.push_back(1);
            continue;
        }
        CountsTable t = lab.run(c, spec.shots);
        const double acc = static_cast<double>(t.total()) / static_cast<double>(t.total() + t.rejected);
        d.acceptance.push_back(acc);
        if (acc < spec.min_acceptance) {
            d.warnings.push_back("setting " + s.label() + ": post-selection acceptance " + std::to_string(acc) +
                                 " below " + std::to_string(spec.min_acceptance));
        }
        if (t.total() == 0) throw ReconstructionError("setting " + s.label() + " kept no shots");
        d.probabilities.push_back(t.probabilities());
        d.counts.push_back(std::move(t));
    }
    return d;
}

std::map<std::string, double> setting_probabilities(const Eigen::MatrixXcd &rho, const Setting &setting) {
    const size_t n = setting.bases.size();
    if (rho.rows() != (Eigen::Index{1} << n) || rho.cols() != rho.rows()) throw ShapeError("density matrix size");
    // Qubit 0 is the least significant bit, so the Kronecker order runs from the top qubit down.
    Eigen::MatrixXcd rot_all = Eigen::MatrixXcd::Identity(1, 1);
    for (size_t k = n; k-- > 0;) {
        const Eigen::MatrixXcd prev = rot_all;
        const Eigen::Matrix2cd u = projection_unitary(setting.bases[k], setting.phase);
        rot_all = Eigen::kroneckerProduct(prev, u).eval();
    }
    const Eigen::MatrixXcd r = rot_all * rho * rot_all.adjoint();
    std::map<std::string, double> out;
    for (Eigen::Index s = 0; s < r.rows(); ++s) {
        const double p = r(s, s).real();
        if (p > 1e-15) out[outcome_key(static_cast<uint64_t>(s), n)] = p;
    }
    return out;
}

TomographyData synthetic_tomography(const Eigen::MatrixXcd &rho, const TomographySpec &spec) {
    TomographyData d;
    d.spec = spec;
    d.exact = true;
    for (const Setting &s : spec.settings) {
        d.probabilities.push_back(setting_probabilities(rho, s));
        d.acceptance.push_back(1);
    }
    return d;
}

Eigen::MatrixXcd reconstruct_density_matrix(const std::vector<std::map<std::string, double>> &probabilities,
                                            const std::vector<Setting> &settings, size_t n,
                                            const std::vector<double> &shots) {
    if (probabilities.size() != settings.size()) throw ShapeError("one probability map per setting");
    if (!shots.empty() && shots.size() != settings.size()) throw ShapeError("one shot count per setting");
    if (n < 1 || n > 5) throw DomainError("full reconstruction supports 1 to 5 qubits");
    const size_t dim = size_t{1} << n;
    const auto d = static_cast<Eigen::Index>(dim);
    const size_t np = dim * dim;
    const auto rows = static_cast<Eigen::Index>(settings.size() * dim);
    Eigen::MatrixXd a(rows, static_cast<Eigen::Index>(np - 1));
    Eigen::VectorXd f(rows), sqrt_w = Eigen::VectorXd::Ones(rows);
    Eigen::MatrixXcd design(rows, d * d);
    for (size_t j = 0; j < settings.size(); ++j) {
        if (settings[j].bases.size() != n) throw ShapeError("setting does not match the qubit count");
        std::vector<std::array<Eigen::Matrix2cd, 2>> pr(n);
        // Tr(P_k proj) per qubit factor, real for Hermitian operators.
        std::vector<std::array<std::array<double, 4>, 2>> tr(n);
        for (size_t k = 0; k < n; ++k) {
            pr[k] = projectors(settings[j].bases[k], settings[j].phase);
            for (int s = 0; s < 2; ++s) {
                for (int p = 0; p < 4; ++p) tr[k][s][p] = (pauli(p) * pr[k][s]).trace().real();
            }
        }
        for (size_t s = 0; s < dim; ++s) {
            const auto row = static_cast<Eigen::Index>(j * dim + s);
            for (size_t pi = 1; pi < np; ++pi) {
                double v = 1;
                size_t x = pi;
                for (size_t k = 0; k < n && v != 0; ++k, x >>= 2) v *= tr[k][(s >> k) & 1][x & 3];
                a(row, static_cast<Eigen::Index>(pi - 1)) = v / static_cast<double>(dim);
            }
            f(row) = prob(probabilities[j], outcome_key(s, n));
            if (!shots.empty()) {
                // Gaussian weight from the Laplace-smoothed binomial variance.
                const double nj = shots[j];
                const double q = (f(row) * nj + 1) / (nj + 2);
                sqrt_w(row) = std::sqrt(nj / (q * (1 - q)));
            }
            Eigen::MatrixXcd proj = Eigen::MatrixXcd::Identity(1, 1);
            for (size_t k = n; k-- > 0;) proj = Eigen::kroneckerProduct(proj, pr[k][(s >> k) & 1]).eval();
            for (Eigen::Index x = 0; x < d; ++x) {
                for (Eigen::Index y = 0; y < d; ++y) design(row, x * d + y) = proj(y, x);
            }
        }
    }
    const Eigen::VectorXd b = f - Eigen::VectorXd::Constant(rows, 1.0 / static_cast<double>(dim));
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sqrt_w.asDiagonal() * a);
    if (qr.rank() < a.cols()) {
        std::vector<std::string> have;
        for (const Setting &s : settings) have.push_back(s.label());
        std::string missing;
        for (const Setting &s : all_settings(n)) {
            if (std::find(have.begin(), have.end(), s.label()) == have.end()) missing += (missing.empty() ? "" : ", ") + s.label();
        }
        throw ReconstructionError("tomography design is rank deficient; missing settings: " +
                                  (missing.empty() ? std::string("none of the Pauli settings") : missing));
    }
    const Eigen::VectorXd c = qr.solve(sqrt_w.asDiagonal() * b);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(d, d);
    for (size_t pi = 1; pi < np; ++pi) {
        const double coef = c(static_cast<Eigen::Index>(pi - 1));
        if (coef == 0) continue;
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(1, 1);
        for (size_t k = n; k-- > 0;) p = Eigen::kroneckerProduct(p, pauli(static_cast<int>((pi >> (2 * k)) & 3))).eval();
        rho += coef * p;
    }
    rho /= static_cast<double>(dim);
    rho = (rho + rho.adjoint()).eval() / 2.0;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    if (es.eigenvalues().minCoeff() >= -1e-12) return rho;
    Eigen::MatrixXcd seed = project_physical(rho);
    if (n > 4) return seed;

    // Constrained fit over physical states, seeded from the projected estimate.
    seed = (1 - 1e-3) * seed + 1e-3 * Eigen::MatrixXcd::Identity(d, d) / static_cast<double>(dim);
    const Eigen::MatrixXcd t0 = seed.llt().matrixL();
    Eigen::VectorXd x(d * d);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d; ++i) x(k++) = t0(i, i).real();
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < i; ++j) {
            x(k++) = t0(i, j).real();
            x(k++) = t0(i, j).imag();
        }
    }
    CholeskyResidual fn{d, design, f, sqrt_w};
    Eigen::LevenbergMarquardt<CholeskyResidual> lm(fn);
    lm.parameters.maxfev = 4000;
    lm.minimize(x);
    const Eigen::MatrixXcd t = fn.unpack(x);
    const Eigen::MatrixXcd m = t * t.adjoint();
    const Eigen::MatrixXcd fitted = m / m.trace().real();
    if (!fitted.allFinite()) return project_physical(rho);
    return (fitted + fitted.adjoint()) / 2.0;
}

Eigen::MatrixXcd reconstruct_density_matrix(const TomographyData &data) {
    std::vector<double> shots;
    for (const CountsTable &t : data.counts) shots.push_back(static_cast<double>(t.total()));
    return reconstruct_density_matrix(data.probabilities, data.spec.settings, data.spec.qubits.size(), shots);
}

Eigen::MatrixXcd project_physical(const Eigen::MatrixXcd &rho) {
    Eigen::MatrixXcd h = (rho + rho.adjoint()) / 2.0;
    const double tr = h.trace().real();
    if (!(tr > 0)) throw ReconstructionError("reconstructed matrix has non-positive trace");
    h /= tr;
    // Closest unit-trace PSD matrix in Frobenius norm: zero the most negative eigenvalues and
    // spread their weight evenly over the rest until everything left is non-negative.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXd mu = es.eigenvalues();  // ascending
    const Eigen::Index d = mu.size();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(d);
    double acc = 0;
    Eigen::Index lo = 0;
    while (lo < d - 1 && mu(lo) + acc / static_cast<double>(d - lo) < 0) {
        acc += mu(lo);
        ++lo;
    }
    for (Eigen::Index j = lo; j < d; ++j) lambda(j) = mu(j) + acc / static_cast<double>(d - lo);
    return es.eigenvectors() * lambda.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

double state_fidelity(const Eigen::MatrixXcd &rho, const Eigen::VectorXcd &psi) {
    if (rho.rows() != psi.size() || rho.cols() != psi.size()) throw ShapeError("target and density matrix differ in size");
    return std::clamp((psi.adjoint() * rho * psi)(0, 0).real(), 0.0, 1.0);
}

Eigen::MatrixXcd reduced_density_matrix(const StateVector &state, const std::vector<size_t> &qubits) {
    uint64_t mask = 0;
    for (size_t q : qubits) {
        if (q >= state.num_spins()) throw ShapeError("qubit outside the state");
        mask |= uint64_t{1} << q;
    }
    const auto dim = static_cast<Eigen::Index>(size_t{1} << qubits.size());
    std::unordered_map<uint64_t, Eigen::VectorXcd> parts;
    const auto &amp = state.amplitudes();
    for (uint64_t i = 0; i < amp.size(); ++i) {
        if (amp[i] == Complex(0, 0)) continue;
        auto [it, fresh] = parts.try_emplace(i & ~mask, Eigen::VectorXcd::Zero(dim));
        uint64_t a = 0;
        for (size_t k = 0; k < qubits.size(); ++k) a |= ((i >> qubits[k]) & 1) << k;
        it->second(static_cast<Eigen::Index>(a)) = amp[i];
    }
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto &[rest, v] : parts) rho += v * v.adjoint();
    return rho;
}

Eigen::VectorXcd restrict_state(const std::vector<Complex> &full, const std::vector<size_t> &qubits) {
    uint64_t mask = 0;
    for (size_t q : qubits) mask |= uint64_t{1} << q;
    uint64_t rest = 0;
    double best = -1;
    for (uint64_t i = 0; i < full.size(); ++i) {
        if (std::norm(full[i]) > best) best = std::norm(full[i]), rest = i & ~mask;
    }
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(size_t{1} << qubits.size()));
    for (uint64_t i = 0; i < full.size(); ++i) {
        if (std::norm(full[i]) < 1e-24) continue;
        if ((i & ~mask) != rest) throw DomainError("spectator spins are not in a product basis state");
        uint64_t a = 0;
        for (size_t k = 0; k < qubits.size(); ++k) a |= ((i >> qubits[k]) & 1) << k;
        v(static_cast<Eigen::Index>(a)) = full[i];
    }
    return v;
}

Eigen::VectorXcd ghz_vector(size_t n) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(size_t{1} << n));
    v(0) = v(v.size() - 1) = 1 / std::sqrt(2.0);
    return v;
}

FidelityEstimate ghz_fidelity_reduced(const std::vector<std::map<std::string, double>> &probabilities,
                                      const std::vector<Setting> &settings, size_t n) {
    if (probabilities.size() != settings.size()) throw ShapeError("one probability map per setting");
    const auto all = [&](const Setting &s, Basis b) {
        return s.bases.size() == n && std::all_of(s.bases.begin(), s.bases.end(), [&](Basis x) { return x == b; });
    };
    int z = -1;
    std::vector<int> par(n, -1);
    for (size_t j = 0; j < settings.size(); ++j) {
        if (all(settings[j], Basis::kZ)) z = static_cast<int>(j);
        if (!all(settings[j], Basis::kEquator)) continue;
        for (size_t k = 0; k < n; ++k) {
            if (std::abs(settings[j].phase - kPi * static_cast<double>(k) / static_cast<double>(n)) < 1e-9) {
                par[k] = static_cast<int>(j);
            }
        }
    }
    std::string missing;
    if (z < 0) missing = "z";
    for (size_t k = 0; k < n; ++k) {
        if (par[k] < 0) missing += (missing.empty() ? "" : ", ") + std::string("parity k=") + std::to_string(k);
    }
    if (!missing.empty()) throw ReconstructionError("reduced GHZ estimate is missing settings: " + missing);
    FidelityEstimate f;
    const auto &pz = probabilities[static_cast<size_t>(z)];
    f.populations = (prob(pz, std::string(n, '0')) + prob(pz, std::string(n, '1'))) / 2;
    double c = 0;
    for (size_t k = 0; k < n; ++k) {
        double parity = 0;
        for (const auto &[key, p] : probabilities[static_cast<size_t>(par[k])]) parity += (popcount_key(key) % 2 ? -p : p);
        c += (k % 2 ? -parity : parity);
    }
    f.coherence = c / static_cast<double>(n);
    f.fidelity = std::clamp(f.populations + f.coherence / 2, 0.0, 1.0);
    f.entangled = f.fidelity > 0.5;
    return f;
}

FidelityEstimate ghz_fidelity_reduced(const TomographyData &data, size_t resamples, uint64_t seed) {
    const size_t n = data.spec.qubits.size();
    FidelityEstimate f = ghz_fidelity_reduced(data.probabilities, data.spec.settings, n);
    if (!data.counts.empty() && resamples > 0) {
        f.sigma = bootstrap_error(
            data.counts, resamples,
            [&](const std::vector<CountsTable> &t) {
                return ghz_fidelity_reduced(to_probabilities(t), data.spec.settings, n).fidelity;
            },
            seed);
    }
    return f;
}

FidelityEstimate tomography_fidelity(const TomographyData &data, const Eigen::VectorXcd &target, size_t resamples,
                                     uint64_t seed) {
    FidelityEstimate f;
    f.fidelity = state_fidelity(reconstruct_density_matrix(data), target);
    f.entangled = f.fidelity > 0.5;
    if (!data.counts.empty() && resamples > 0) {
        const size_t n = data.spec.qubits.size();
        f.sigma = bootstrap_error(
            data.counts, resamples,
            [&](const std::vector<CountsTable> &t) {
                std::vector<double> shots;
                for (const CountsTable &c : t) shots.push_back(static_cast<double>(c.total()));
                return state_fidelity(reconstruct_density_matrix(to_probabilities(t), data.spec.settings, n, shots),
                                      target);
            },
            seed);
    }
    return f;
}

}  // namespace donorsim
