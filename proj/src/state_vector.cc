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

#include "donorsim/state_vector.h"

#include <cmath>

#include "donorsim/errors.h"

namespace donorsim {

StateVector::StateVector(size_t num_spins) : StateVector(num_spins, 0) {
}

StateVector::StateVector(size_t num_spins, uint64_t basis_state) : num_spins_(num_spins) {
    if (num_spins > 24) {
        throw ShapeError("state vector limited to 24 spins");
    }
    amplitudes_.assign(size_t{1} << num_spins, Complex(0, 0));
    if (basis_state >= amplitudes_.size()) {
        throw ShapeError("basis state out of range");
    }
    amplitudes_[basis_state] = 1;
}

StateVector StateVector::from_amplitudes(std::vector<Complex> amplitudes) {
    size_t n = 0;
    while ((size_t{1} << n) < amplitudes.size()) {
        ++n;
    }
    if ((size_t{1} << n) != amplitudes.size() || amplitudes.empty()) {
        throw ShapeError("amplitude count must be a power of two");
    }
    StateVector s(n);
    s.amplitudes_ = std::move(amplitudes);
    return s;
}

double StateVector::norm_squared() const {
    double t = 0;
    for (const auto &a : amplitudes_) {
        t += std::norm(a);
    }
    return t;
}

void StateVector::normalize() {
    const double n = std::sqrt(norm_squared());
    if (!(n > 0)) {
        throw DomainError("cannot normalize a zero state");
    }
    for (auto &a : amplitudes_) {
        a /= n;
    }
}

double StateVector::probability_up(size_t spin) const {
    const uint64_t bit = uint64_t{1} << spin;
    double p = 0;
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        if (i & bit) {
            p += std::norm(amplitudes_[i]);
        }
    }
    return p;
}

void StateVector::apply_1q(size_t spin, const Mat2 &u, uint64_t mask, uint64_t value) {
    const uint64_t bit = uint64_t{1} << spin;
    mask &= ~bit;
    value &= mask;
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        if ((i & bit) || (i & mask) != value) {
            continue;
        }
        const Complex a0 = amplitudes_[i];
        const Complex a1 = amplitudes_[i | bit];
        amplitudes_[i] = u.m00 * a0 + u.m01 * a1;
        amplitudes_[i | bit] = u.m10 * a0 + u.m11 * a1;
    }
}

void StateVector::apply_x(size_t spin) {
    const uint64_t bit = uint64_t{1} << spin;
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        if (!(i & bit)) {
            std::swap(amplitudes_[i], amplitudes_[i | bit]);
        }
    }
}

void StateVector::apply_y(size_t spin) {
    const uint64_t bit = uint64_t{1} << spin;
    const Complex im(0, 1);
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        if (!(i & bit)) {
            const Complex a0 = amplitudes_[i];
            amplitudes_[i] = -im * amplitudes_[i | bit];
            amplitudes_[i | bit] = im * a0;
        }
    }
}

void StateVector::apply_z(size_t spin) {
    const uint64_t bit = uint64_t{1} << spin;
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        if (i & bit) {
            amplitudes_[i] = -amplitudes_[i];
        }
    }
}

double StateVector::collapse(size_t spin, bool up) {
    const uint64_t bit = uint64_t{1} << spin;
    double p = 0;
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        if (((i & bit) != 0) == up) {
            p += std::norm(amplitudes_[i]);
        } else {
            amplitudes_[i] = 0;
        }
    }
    if (!(p > 0)) {
        throw DomainError("collapse onto a zero-probability outcome");
    }
    const double s = 1.0 / std::sqrt(p);
    for (auto &a : amplitudes_) {
        a *= s;
    }
    return p;
}

double StateVector::overlap(const StateVector &other) const {
    if (other.dimension() != dimension()) {
        throw ShapeError("overlap of states with different dimensions");
    }
    Complex t = 0;
    for (size_t i = 0; i < amplitudes_.size(); ++i) {
        t += std::conj(amplitudes_[i]) * other.amplitudes_[i];
    }
    return std::norm(t);
}

Mat2 mat2_multiply(const Mat2 &a, const Mat2 &b) {
    return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11, a.m10 * b.m00 + a.m11 * b.m10,
            a.m10 * b.m01 + a.m11 * b.m11};
}

Mat2 rotation(double theta, double phi) {
    const double c = std::cos(theta / 2);
    const double s = std::sin(theta / 2);
    const Complex im(0, 1);
    // -i s (cos phi X + sin phi Y): off-diagonals -i s e^{-i phi} (top right), -i s e^{i phi}.
    return {c, -im * s * std::polar(1.0, -phi), -im * s * std::polar(1.0, phi), c};
}

Mat2 rotation_z(double theta) {
    return {std::polar(1.0, -theta / 2), 0, 0, std::polar(1.0, theta / 2)};
}

}  // namespace donorsim
