// Copyright 2026 The nopa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Variance-based inseparability tests for four-mode states. A criterion
// holds when Var(sum c_k Q_k) is strictly below its shot-noise bound
// sum c_k^2 (vacuum variance 1 per quadrature).

#include <array>
#include <span>
#include <string>
#include <vector>

#include "nopa/gaussian.hpp"
#include "nopa/ledger.hpp"

namespace nopa {

inline constexpr double kCriterionSlack = 1e-12;

struct Criterion {
    std::string label;
    QuadratureCombination combo;

    [[nodiscard]] double bound() const { return combo.shot_noise_bound(); }
};

struct CriterionResult {
    std::string label;
    std::string expression;
    double variance = 0.0;
    double bound = 0.0;
    double margin = 0.0;  ///< bound - variance
    bool passed = false;
};

struct CriterionReport {
    std::vector<CriterionResult> results;
    bool all_passed = false;

    [[nodiscard]] Json to_json() const;
    /// Aligned table, six significant digits.
    [[nodiscard]] std::string to_table() const;
};

using FourModeLabels = std::array<ModeLabel, 4>;

inline const FourModeLabels kNopaModes = {"a1", "a2", "a3", "a4"};

/// The four three-mode combinations certifying the nonlocal-amplifier
/// resource state, for reflectivity R in [0, 1].
std::vector<Criterion> nopa_criteria(double reflectivity, const FourModeLabels& modes = kNopaModes);

/// Four-mode cluster combinations: X1+X2+X3, X3+X4, P1-P2, P2-P3+P4.
std::vector<Criterion> cluster_criteria(const FourModeLabels& modes = kNopaModes);

/// Four-mode GHZ combinations: X1+X2+X3+X4 and every Pi-Pj, i<j.
std::vector<Criterion> ghz_criteria(const FourModeLabels& modes = kNopaModes);

CriterionReport evaluate(const GaussianState& state, std::span<const Criterion> criteria);
CriterionReport evaluate(const HeisenbergLedger& ledger, std::span<const Criterion> criteria);

struct ContrastReport {
    std::vector<std::size_t> nopa_counts;
    std::vector<std::size_t> cluster_counts;
    std::vector<std::size_t> ghz_counts;
    bool nopa_all_three_mode = false;
    bool cluster_has_two_mode = false;
    bool ghz_has_two_mode = false;
};

/// Number of modes each combination touches, for R in (0, 1).
ContrastReport criteria_contrast(double reflectivity);

}  // namespace nopa
