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

// Heisenberg-picture ledger: each live mode's X and P operators are kept as
// exact real linear combinations of a fixed basis of source quadratures,
// plus a classical offset. Second moments follow from the basis
// covariance, so the ledger is an independent route to every statistic the
// covariance engine computes.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nopa/gaussian.hpp"

namespace nopa {

/// Names one quadrature operator of one mode.
struct QuadratureRef {
    ModeLabel mode;
    Quadrature quad;

    friend bool operator==(const QuadratureRef&, const QuadratureRef&) = default;
};

/// The source modes and their joint first/second moments.
struct BasisSpec {
    std::vector<ModeLabel> modes;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    /// Optional F with F F^dagger = cov + i Omega / 2; derived from cov when
    /// empty. Supplying the exact factor keeps physicality checks accurate
    /// when cov is strongly squeezed.
    Eigen::MatrixXcd factor;

    /// Takes modes, mean and covariance from a GaussianState.
    static BasisSpec from_state(const GaussianState& state);
};

inline constexpr double kCommutatorTolerance = 1e-12;

class HeisenbergLedger {
public:
    /// Every basis mode starts live with unit coefficient on itself.
    /// Throws InvalidArgument for an empty basis or a malformed/unphysical
    /// basis covariance.
    explicit HeisenbergLedger(BasisSpec spec);

    [[nodiscard]] const BasisSpec& basis() const { return basis_; }
    [[nodiscard]] const std::vector<ModeLabel>& live_modes() const { return live_; }
    [[nodiscard]] bool is_live(std::string_view mode) const;

    /// Coefficient vector (length 2M over basis quadratures) of a live row.
    [[nodiscard]] Eigen::VectorXd row(const QuadratureRef& ref) const;
    [[nodiscard]] double offset(const QuadratureRef& ref) const;

    [[nodiscard]] double row_coefficient(const QuadratureRef& row, const QuadratureRef& basis_entry) const;

    /// u^T Omega v over the basis; equals [A, B] / i for the two operators.
    [[nodiscard]] double symplectic_product(const QuadratureRef& a, const QuadratureRef& b) const;

    /// Largest deviation from [X_k, P_k] = 2i and from zero cross-commutators
    /// over all live rows.
    [[nodiscard]] double commutator_residual() const;

    [[nodiscard]] HeisenbergLedger apply(const SymplecticOp& op, std::span<const ModeLabel> targets) const;
    [[nodiscard]] HeisenbergLedger apply(const SymplecticOp& op, std::initializer_list<ModeLabel> targets) const;

    /// Classical displacement of a live mode's offsets.
    [[nodiscard]] HeisenbergLedger displace(std::string_view mode, double dx, double dp) const;

    [[nodiscard]] HeisenbergLedger relabeled(std::string_view from, ModeLabel to) const;

    /// Measures `measured` quadratures and feeds them forward:
    ///   target_t += sum_m gains(t, m) * measured_m
    /// then drops every mode that owns a measured quadrature. The measured
    /// operators must commute pairwise, so the substitution is an exact
    /// operator identity. `gains` is targets.size() x measured.size().
    [[nodiscard]] HeisenbergLedger measure_feedforward(std::span<const QuadratureRef> measured,
                                                       std::span<const QuadratureRef> targets,
                                                       const Eigen::MatrixXd& gains) const;

    /// Variance of sum_k c_k (live row k).
    [[nodiscard]] double variance(const QuadratureCombination& combo) const;
    [[nodiscard]] double mean(const QuadratureCombination& combo) const;

    /// Moments of the listed live modes: cov = C basis_cov C^T,
    /// mean = C basis_mean + offsets.
    [[nodiscard]] GaussianState to_state(std::span<const ModeLabel> labels) const;
    [[nodiscard]] GaussianState to_state() const { return to_state(live_); }

    /// Physicality of the listed live modes evaluated in factored form:
    /// C F (C F)^dagger is positive semidefinite by construction, so the
    /// smallest eigenvalue of cov + i Omega / 2 is bounded below by
    /// sigma_min(C F)^2 minus the commutator defect of the rows.
    [[nodiscard]] PhysicalityReport physicality(std::span<const ModeLabel> labels) const;
    [[nodiscard]] PhysicalityReport physicality() const { return physicality(live_); }

    /// {"basis":[...], "rows":{"mode.X":[...], ...}, "offsets":{...}}
    [[nodiscard]] Json to_json() const;

private:
    [[nodiscard]] Eigen::Index row_index(const QuadratureRef& ref) const;
    [[nodiscard]] Eigen::Index basis_index(const QuadratureRef& ref) const;
    [[nodiscard]] Eigen::VectorXd combination_vector(const QuadratureCombination& combo, double* offset) const;

    BasisSpec basis_;
    std::vector<ModeLabel> live_;
    Eigen::MatrixXd rows_;     // 2L x 2M, interleaved per live mode
    Eigen::VectorXd offsets_;  // 2L
};

}  // namespace nopa
