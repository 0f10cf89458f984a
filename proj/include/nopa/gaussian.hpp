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

// Gaussian-state engine over labeled optical modes.
//
// Conventions: X = a + a^dagger, P = -i(a - a^dagger), so [X, P] = 2i and
// the vacuum has unit variance in both quadratures. Phase-space vectors are
// interleaved per mode: (X_1, P_1, X_2, P_2, ...).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "nopa/json_io.hpp"
#include "nopa/random.hpp"

namespace nopa {

using ModeLabel = std::string;

enum class Quadrature { X, P };

std::string_view to_string(Quadrature q);

/// Offset of `q` inside a mode's (X, P) block.
constexpr std::size_t quadrature_offset(Quadrature q) { return q == Quadrature::X ? 0 : 1; }

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPhysicalityFloor = -1e-9;
inline constexpr double kSymplecticTolerance = 1e-12;

/// Block-diagonal symplectic form for `modes` modes, per-mode block
/// ((0, 2), (-2, 0)).
Eigen::MatrixXd symplectic_form(std::size_t modes);

// ---------------------------------------------------------------------------

/// A real linear map on the quadratures of `arity()` modes that preserves
/// the commutation relations (S Omega S^T = Omega).
class SymplecticOp {
public:
    /// Throws InvalidArgument if `matrix` is not square with even size or
    /// fails the symplectic condition.
    explicit SymplecticOp(Eigen::MatrixXd matrix);

    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return matrix_; }
    [[nodiscard]] std::size_t arity() const { return static_cast<std::size_t>(matrix_.rows() / 2); }

    /// max |S Omega S^T - Omega|.
    [[nodiscard]] double symplectic_residual() const;

    [[nodiscard]] SymplecticOp inverse() const;

private:
    Eigen::MatrixXd matrix_;
};

SymplecticOp identity_map(std::size_t arity);

/// Beam splitter with reflectivity R acting on (u, v):
///   first output  = sqrt(1-R) v - sqrt(R) u
///   second output = sqrt(R) v + sqrt(1-R) u
/// identically on X and P.
SymplecticOp beam_splitter_map(double reflectivity);

/// 50/50 combiner: (u, v) -> ((u+v)/sqrt2, (u-v)/sqrt2).
SymplecticOp balanced_combiner_map();

/// Single-mode squeezer; the chosen quadrature is scaled by e^{-r}, the
/// conjugate by e^{r}.
SymplecticOp squeezer_map(double r, Quadrature squeezed);

/// Single-mode phase rotation a -> a e^{-i theta}.
SymplecticOp phase_rotation_map(double theta);

/// Exact pi phase rotation, (X, P) -> (-X, -P).
SymplecticOp phase_flip_map();

// ---------------------------------------------------------------------------

struct QuadratureTerm {
    ModeLabel mode;
    Quadrature quad;
    double coeff;
};

/// A real linear combination of quadratures, sum_k c_k Q_k.
class QuadratureCombination {
public:
    /// Throws InvalidArgument on an empty term list, duplicate
    /// (mode, quadrature) pairs, or non-finite coefficients.
    explicit QuadratureCombination(std::vector<QuadratureTerm> terms);

    [[nodiscard]] const std::vector<QuadratureTerm>& terms() const { return terms_; }

    /// Variance of the combination on uncorrelated vacuum: sum c^2.
    [[nodiscard]] double shot_noise_bound() const;

    /// Number of distinct modes with a nonzero coefficient.
    [[nodiscard]] std::size_t mode_count() const;

    [[nodiscard]] QuadratureCombination scaled(double k) const;

    [[nodiscard]] std::string to_string() const;

private:
    std::vector<QuadratureTerm> terms_;
};

// ---------------------------------------------------------------------------

/// Preparation recipe for a single input mode.
struct InputSpec {
    enum class Kind { vacuum, coherent, squeezed };

    Kind kind = Kind::vacuum;
    double mean_x = 0.0;
    double mean_p = 0.0;
    double r = 0.0;
    Quadrature squeezed_quad = Quadrature::X;

    static InputSpec vacuum() { return {}; }
    static InputSpec coherent(double x, double p) { return {Kind::coherent, x, p, 0.0, Quadrature::X}; }
    static InputSpec squeezed(double r, Quadrature q) { return {Kind::squeezed, 0.0, 0.0, r, q}; }

    /// Throws InvalidArgument for non-finite parameters.
    void validate() const;
};

// ---------------------------------------------------------------------------

/// First and second moments of a Gaussian state over labeled modes.
/// Immutable; every operation returns a new value.
class GaussianState {
public:
    /// Throws InvalidArgument on duplicate labels, size mismatch, non-finite
    /// entries or an asymmetric covariance. Physicality is not enforced here
    /// (see check_physicality).
    GaussianState(std::vector<ModeLabel> modes, Eigen::VectorXd mean, Eigen::MatrixXd cov);

    [[nodiscard]] const std::vector<ModeLabel>& modes() const { return modes_; }
    [[nodiscard]] const Eigen::VectorXd& mean() const { return mean_; }
    [[nodiscard]] const Eigen::MatrixXd& cov() const { return cov_; }
    [[nodiscard]] std::size_t mode_count() const { return modes_.size(); }

    [[nodiscard]] bool has_mode(std::string_view label) const;
    /// Position of `label` in modes(); throws InvalidArgument if absent.
    [[nodiscard]] std::size_t mode_index(std::string_view label) const;
    /// Row of (label, q) in mean()/cov().
    [[nodiscard]] std::size_t quadrature_index(std::string_view label, Quadrature q) const;

    [[nodiscard]] double quadrature_mean(std::string_view label, Quadrature q) const;

    [[nodiscard]] GaussianState relabeled(std::string_view from, ModeLabel to) const;

    /// Marginal over `labels`, in the given order.
    [[nodiscard]] GaussianState reduced(std::span<const ModeLabel> labels) const;

    [[nodiscard]] Json to_json() const;
    static GaussianState from_json(const Json& doc);

private:
    std::vector<ModeLabel> modes_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

GaussianState vacuum_state(std::span<const ModeLabel> labels);
GaussianState vacuum_state(std::size_t n, std::span<const ModeLabel> labels);

GaussianState coherent_state(ModeLabel label, double mean_x, double mean_p);

GaussianState squeezed_state(ModeLabel label, double r, Quadrature squeezed);

GaussianState prepare_input(ModeLabel label, const InputSpec& spec);

/// Two-mode squeezed vacuum: Var(X_i) = Var(P_i) = cosh 2r,
/// Cov(X_1, X_2) = -sinh 2r, Cov(P_1, P_2) = +sinh 2r.
GaussianState epr_state(double r, ModeLabel first, ModeLabel second);

/// Product state; mode labels must be disjoint.
GaussianState tensor_product(const GaussianState& a, const GaussianState& b);

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op,
                               std::span<const ModeLabel> targets);

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op,
                               std::initializer_list<ModeLabel> targets);

/// X -> X + dx, P -> P + dp on one mode. Covariance is untouched.
GaussianState displace(const GaussianState& state, std::string_view mode, double dx, double dp);

/// Conditions the rest of the state on observing `outcome` for quadrature
/// `q` of `mode`, then removes `mode`. Uses the generalized inverse of the
/// projected measured block; throws StateError if its variance is not
/// positive.
GaussianState condition_on_homodyne(const GaussianState& state, std::string_view mode, Quadrature q,
                                    double outcome);

struct HomodyneResult {
    double outcome;
    GaussianState conditioned;
};

/// Samples an outcome from the marginal of (mode, q) and conditions on it.
HomodyneResult homodyne_measure(const GaussianState& state, std::string_view mode, Quadrature q,
                                RngStream& rng);

/// c^T cov c for the coefficient vector of `combo`.
double combination_variance(const GaussianState& state, const QuadratureCombination& combo);

double combination_mean(const GaussianState& state, const QuadratureCombination& combo);

struct PhysicalityReport {
    double symmetry_residual = 0.0;
    double min_eigenvalue = 0.0;  ///< smallest eigenvalue of cov + i Omega / 2
    bool physical = false;
};

PhysicalityReport check_physicality(const Eigen::MatrixXd& cov);
PhysicalityReport check_physicality(const GaussianState& state);

/// F with F F^dagger = cov + i Omega / 2. Per-mode 2x2 blocks are factored in
/// closed form, which stays exact for strongly squeezed product states;
/// other covariances fall back to an eigendecomposition with clamped
/// round-off. Throws InvalidArgument for an unphysical covariance.
Eigen::MatrixXcd uncertainty_factor(const Eigen::MatrixXd& cov);

/// Closed-form uncertainty factor of epr_state(r, ...), built from the two
/// single-mode squeezed vacua the pair is combined from.
Eigen::MatrixXcd epr_uncertainty_factor(double r);

}  // namespace nopa
