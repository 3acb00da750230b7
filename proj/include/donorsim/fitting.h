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

#include <cstddef>
#include <vector>

namespace donorsim {

/// y = baseline + amplitude * exp(-(x - center)^2 / (2 sigma^2)).
struct GaussianFit {
    double amplitude = 0;
    double center = 0;
    double sigma = 0;
    double baseline = 0;
    bool converged = false;
};

/// Levenberg-Marquardt fit seeded from the sample maximum. Needs at least four points.
GaussianFit fit_gaussian(const std::vector<double> &x, const std::vector<double> &y);

/// y = A p^n.
struct DecayFit {
    double amplitude = 0;
    double p = 0;
    bool converged = false;
};

/// Nonlinear least squares seeded from a log-linear regression over the positive samples; p is
/// clamped to [0, 1]. Needs at least two lengths.
DecayFit fit_decay(const std::vector<double> &n, const std::vector<double> &y);

/// y = offset + a cos(x) + b sin(x) by linear least squares.
struct CosineFit {
    double offset = 0;
    double a = 0;
    double b = 0;

    double amplitude() const;
    /// Phase of the maximum.
    double phase() const;
};

CosineFit fit_cosine(const std::vector<double> &x, const std::vector<double> &y);

}  // namespace donorsim
