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

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <mutex>
#include <unordered_map>
#include <vector>

namespace donorsim {

enum class PrimitiveKind : uint8_t {
    kVirtualZ,  // frame advance by `angle` (logical Rz(-angle)), free
    kRotation,  // R(angle, phase) = exp(-i angle (cos(phase) X + sin(phase) Y) / 2)
    kCz,        // diag(1, 1, 1, -1)
    kCrot,      // pi rotation about X of `qubit` when `control` is in `control_state`
};

struct Primitive {
    PrimitiveKind kind = PrimitiveKind::kVirtualZ;
    int qubit = 0;
    double angle = 0;
    double phase = 0;
    int control = -1;
    int control_state = 1;

    bool physical() const {
        return kind != PrimitiveKind::kVirtualZ;
    }
};

enum class NativeSet : uint8_t {
    kEuler1q,      // VZ, one Y(theta), VZ
    kCrot2q,       // +-X/2, +-Y/2 on either electron, CROT and zCROT in both directions
    kNuclearCz2q,  // +-X/2, +-Y/2 on either nucleus, CZ
};

/// Unitary of a primitive on `num_qubits` qubits; qubit q is bit q of the basis index.
Eigen::MatrixXcd primitive_unitary(const Primitive &p, int num_qubits);
/// Product of primitives applied in order.
Eigen::MatrixXcd sequence_unitary(const std::vector<Primitive> &seq, int num_qubits);
/// max |a - e^{i g} b| over entries, minimized over the global phase g.
double phase_insensitive_distance(const Eigen::MatrixXcd &a, const Eigen::MatrixXcd &b);

/// Clifford group on one or two qubits, generated by closure from H, S and CZ. Elements are
/// identified by how they conjugate the Pauli generators (global phase ignored).
class CliffordGroup {
   public:
    /// Shared immutable instance; constructed on first use.
    static const CliffordGroup &get(int num_qubits);

    int num_qubits() const {
        return num_qubits_;
    }
    size_t size() const {
        return unitaries_.size();
    }
    size_t identity() const {
        return 0;
    }
    const Eigen::MatrixXcd &unitary(size_t i) const {
        return unitaries_.at(i);
    }
    /// Element for `first` followed by `second`.
    size_t compose(size_t first, size_t second) const;
    size_t inverse(size_t i) const {
        return inverses_.at(i);
    }
    /// Index of a Clifford unitary. Throws DomainError if `u` is not in the group.
    size_t find(const Eigen::MatrixXcd &u) const;

    /// Primitive sequence (time order) reproducing element `i` up to global phase.
    const std::vector<Primitive> &decomposition(size_t i, NativeSet set) const;
    /// Mean count of physical primitives over the whole group.
    double mean_physical_count(NativeSet set) const;

   private:
    explicit CliffordGroup(int num_qubits);
    uint64_t key(const Eigen::MatrixXcd &u) const;
    const std::vector<std::vector<Primitive>> &decompositions(NativeSet set) const;

    int num_qubits_;
    std::vector<Eigen::MatrixXcd> unitaries_;
    std::vector<size_t> inverses_;
    std::unordered_map<uint64_t, size_t> index_;
    std::vector<Eigen::MatrixXcd> paulis_;
    mutable std::mutex mu_;
    mutable std::vector<std::vector<Primitive>> decomp_[3];
};

/// ZYZ Euler angles: u = e^{i g} Rz(a) Ry(theta) Rz(b), theta in [0, pi].
struct EulerAngles {
    double a, theta, b;
};
EulerAngles euler_zyz(const Eigen::Matrix2cd &u);

}  // namespace donorsim
