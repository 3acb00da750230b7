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

#include "donorsim/fitting.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unsupported/Eigen/NonLinearOptimization>

#include "donorsim/errors.h"

namespace donorsim {

namespace {

template <typename Derived>
struct LsqFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const std::vector<double> &x;
    const std::vector<double> &y;
    int num_inputs;

    int inputs() const {
        return num_inputs;
    }
    int values() const {
        return static_cast<int>(x.size());
    }
};

struct GaussianResidual : LsqFunctor<GaussianResidual> {
    int operator()(const Eigen::VectorXd &q, Eigen::VectorXd &f) const {
        for (size_t i = 0; i < x.size(); ++i) {
            const double u = (x[i] - q[1]) / q[2];
            f[static_cast<Eigen::Index>(i)] = q[3] + q[0] * std::exp(-0.5 * u * u) - y[i];
        }
        return 0;
    }
    int df(const Eigen::VectorXd &q, Eigen::MatrixXd &j) const {
        for (size_t i = 0; i < x.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double u = (x[i] - q[1]) / q[2];
            const double g = std::exp(-0.5 * u * u);
            j(r, 0) = g;
            j(r, 1) = q[0] * g * u / q[2];
            j(r, 2) = q[0] * g * u * u / q[2];
            j(r, 3) = 1;
        }
        return 0;
    }
};

struct DecayResidual : LsqFunctor<DecayResidual> {
    int operator()(const Eigen::VectorXd &q, Eigen::VectorXd &f) const {
        for (size_t i = 0; i < x.size(); ++i) {
            f[static_cast<Eigen::Index>(i)] = q[0] * std::pow(q[1], x[i]) - y[i];
        }
        return 0;
    }
    int df(const Eigen::VectorXd &q, Eigen::MatrixXd &j) const {
        for (size_t i = 0; i < x.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            j(r, 0) = std::pow(q[1], x[i]);
            j(r, 1) = x[i] == 0 ? 0.0 : q[0] * x[i] * std::pow(q[1], x[i] - 1);
        }
        return 0;
    }
};

bool lm_ok(Eigen::LevenbergMarquardtSpace::Status s) {
    using namespace Eigen::LevenbergMarquardtSpace;
    return s == RelativeReductionTooSmall || s == RelativeErrorTooSmall || s == RelativeErrorAndReductionTooSmall ||
           s == CosinusTooSmall || s == XtolTooSmall || s == FtolTooSmall || s == GtolTooSmall;
}

}  // namespace

GaussianFit fit_gaussian(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size()) throw ShapeError("x and y differ in length");
    if (x.size() < 4) throw DomainError("Gaussian fit needs at least four points");
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    const size_t imax = static_cast<size_t>(hi - y.begin());
    const double span = *std::max_element(x.begin(), x.end()) - *std::min_element(x.begin(), x.end());
    // Width seed from the half-maximum crossing count.
    size_t above = 0;
    for (double v : y) above += v > (*lo + *hi) / 2;
    const double dx = span / static_cast<double>(x.size() - 1);
    Eigen::VectorXd q(4);
    q << *hi - *lo, x[imax], std::max(dx, 0.425 * dx * static_cast<double>(above)), *lo;
    GaussianResidual f{{x, y, 4}};
    Eigen::LevenbergMarquardt<GaussianResidual> lm(f);
    const auto status = lm.minimize(q);
    GaussianFit out;
    out.amplitude = q[0];
    out.center = q[1];
    out.sigma = std::abs(q[2]);
    out.baseline = q[3];
    out.converged = lm_ok(status) && std::isfinite(q[1]) && std::isfinite(q[2]);
    return out;
}

DecayFit fit_decay(const std::vector<double> &n, const std::vector<double> &y) {
    if (n.size() != y.size()) throw ShapeError("lengths and values differ in size");
    if (n.size() < 2) throw DomainError("decay fit needs at least two lengths");
    // Log-linear seed.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    size_t m = 0;
    for (size_t i = 0; i < n.size(); ++i) {
        if (!(y[i] > 0)) continue;
        const double ly = std::log(y[i]);
        sx += n[i];
        sy += ly;
        sxx += n[i] * n[i];
        sxy += n[i] * ly;
        ++m;
    }
    double a0 = *std::max_element(y.begin(), y.end()), p0 = 0.99;
    if (m >= 2) {
        const double det = static_cast<double>(m) * sxx - sx * sx;
        if (det > 0) {
            const double slope = (static_cast<double>(m) * sxy - sx * sy) / det;
            const double icpt = (sy - slope * sx) / static_cast<double>(m);
            a0 = std::exp(icpt);
            p0 = std::clamp(std::exp(slope), 1e-6, 1.0);
        }
    }
    Eigen::VectorXd q(2);
    q << a0, p0;
    DecayResidual f{{n, y, 2}};
    Eigen::LevenbergMarquardt<DecayResidual> lm(f);
    const auto status = lm.minimize(q);
    DecayFit out;
    out.amplitude = q[0];
    out.p = std::clamp(q[1], 0.0, 1.0);
    out.converged = lm_ok(status) && std::isfinite(q[0]) && std::isfinite(q[1]);
    return out;
}

double CosineFit::amplitude() const {
    return std::hypot(a, b);
}

double CosineFit::phase() const {
    return std::atan2(b, a);
}

CosineFit fit_cosine(const std::vector<double> &x, const std::vector<double> &y) {
    if (x.size() != y.size()) throw ShapeError("x and y differ in length");
    if (x.size() < 3) throw DomainError("cosine fit needs at least three points");
    Eigen::MatrixXd a(static_cast<Eigen::Index>(x.size()), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
    for (size_t i = 0; i < x.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        a(r, 0) = 1;
        a(r, 1) = std::cos(x[i]);
        a(r, 2) = std::sin(x[i]);
        b[r] = y[i];
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    return {c[0], c[1], c[2]};
}

}  // namespace donorsim
