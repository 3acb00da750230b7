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

#include <stdexcept>
#include <string>

namespace donorsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Index out of range or mismatched list lengths.
class ShapeError : public Error {
   public:
    using Error::Error;
};

/// Query outside a tabulated or interpolated range.
class RangeError : public Error {
   public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
   public:
    using Error::Error;
};

/// Invalid configuration. `field` names the offending path (e.g. "registers[1].hyperfine_Hz[2]").
class ConfigError : public Error {
   public:
    ConfigError(std::string field, const std::string &message)
        : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {
    }
    const std::string &field() const {
        return field_;
    }

   private:
    std::string field_;
};

/// Malformed circuit (bad condition pattern, unknown kind, bad parameters).
class CircuitError : public Error {
   public:
    using Error::Error;
};

/// A tracking measurement failed to locate its resonance.
class CalibrationLost : public Error {
   public:
    using Error::Error;
};

/// Tomography data insufficient to reconstruct a state.
class ReconstructionError : public Error {
   public:
    using Error::Error;
};

/// Scheduling conflict while building power-budget slices.
class SchedulingError : public Error {
   public:
    using Error::Error;
};

}  // namespace donorsim
