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

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace donorsim {

using Complex = std::complex<double>;

/// 2x2 complex matrix in row-major order: {m00, m01, m10, m11}.
struct Mat2 {
    Complex m00, m01, m10, m11;
};

/// Amplitudes over an ordered tensor product of spins. Bit `s` of a basis index is spin `s`
/// (1 = up).
class StateVector {
   public:
    /// All spins down.
    explicit StateVector(size_t num_spins);
    StateVector(size_t num_spins, uint64_t basis_state);
    static StateVector from_amplitudes(std::vector<Complex> amplitudes);

    size_t num_spins() const {
        return num_spins_;
    }
    size_t dimension() const {
        return amplitudes_.size();
    }
    std::vector<Complex> &amplitudes() {
        return amplitudes_;
    }
    const std::vector<Complex> &amplitudes() const {
        return amplitudes_;
    }
    Complex &operator[](size_t i) {
        return amplitudes_[i];
    }
    const Complex &operator[](size_t i) const {
        return amplitudes_[i];
    }

    double norm_squared() const;
    void normalize();
    double probability_up(size_t spin) const;

    /// Applies `u` on spin `spin` to every pair whose other bits satisfy (index & mask) == value.
    void apply_1q(size_t spin, const Mat2 &u, uint64_t mask = 0, uint64_t value = 0);
    void apply_x(size_t spin);
    void apply_y(size_t spin);
    void apply_z(size_t spin);
    /// Projects `spin` onto `up` and renormalizes. Returns the prior probability of that outcome.
    double collapse(size_t spin, bool up);

    /// |<this|other>|^2.
    double overlap(const StateVector &other) const;

   private:
    size_t num_spins_;
    std::vector<Complex> amplitudes_;
};

Mat2 mat2_multiply(const Mat2 &a, const Mat2 &b);

/// exp(-i theta (cos(phi) X + sin(phi) Y) / 2) with |0> = down.
Mat2 rotation(double theta, double phi);

/// exp(-i theta Z / 2).
Mat2 rotation_z(double theta);

}  // namespace donorsim
