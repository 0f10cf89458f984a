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

// Nonlocal nondegenerate optical parametric amplifier.
//
// Two EPR pairs (aEPR1, aEPR2), (bEPR1, bEPR2) are merged on a beam splitter
// of reflectivity R into four modes a1..a4, one per remote station. The
// signal and idler input stations mix a1 / a2 with their inputs on 50/50
// combiners and homodyne both ports; the outcomes are broadcast to the two
// output stations, which displace a3 / a4. The result is a two-mode
// amplifier with gain G = 1 / (1 - R) plus excess noise that vanishes as the
// squeezing grows.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nopa/gaussian.hpp"
#include "nopa/ledger.hpp"
#include "nopa/random.hpp"

namespace nopa {

namespace labels {
inline const ModeLabel kInSignal = "in_s";
inline const ModeLabel kInIdler = "in_i";
inline const ModeLabel kEprA1 = "aEPR1";
inline const ModeLabel kEprA2 = "aEPR2";
inline const ModeLabel kEprB1 = "bEPR1";
inline const ModeLabel kEprB2 = "bEPR2";
inline const ModeLabel kA1 = "a1";
inline const ModeLabel kA2 = "a2";
inline const ModeLabel kA3 = "a3";
inline const ModeLabel kA4 = "a4";
inline const ModeLabel kSignalSum = "s1_sum";
inline const ModeLabel kSignalDiff = "s1_diff";
inline const ModeLabel kIdlerSum = "s2_sum";
inline const ModeLabel kIdlerDiff = "s2_diff";
inline const ModeLabel kOutSignal = "out_s";
inline const ModeLabel kOutIdler = "out_i";
}  // namespace labels

/// Feedforward scaling factors g_{quadrature, station outcome, target}.
struct FeedforwardGains {
    double x1_a3 = 0.0;
    double p1_a3 = 0.0;
    double x2_a3 = 0.0;
    double p2_a3 = 0.0;
    double x1_a4 = 0.0;
    double p1_a4 = 0.0;
    double x2_a4 = 0.0;
    double p2_a4 = 0.0;

    /// g_x1_a3 = -g_p1_a3, g_x2_a3 = g_p2_a3, g_x1_a4 = g_p1_a4,
    /// g_x2_a4 = -g_p2_a4.
    [[nodiscard]] bool has_reference_sign_pattern(double tol = 1e-12) const;

    /// Rows (a3.X, a3.P, a4.X, a4.P), columns (x1, p1, x2, p2).
    [[nodiscard]] Eigen::Matrix4d matrix() const;

    friend bool operator==(const FeedforwardGains&, const FeedforwardGains&) = default;
};

/// Reference gains for reflectivity R in [0, 1).
FeedforwardGains nominal_gains(double reflectivity);

struct MeasurementRecord {
    double x1 = 0.0;  ///< (X_a1 + X_in_s) / sqrt2
    double p1 = 0.0;  ///< (P_a1 - P_in_s) / sqrt2
    double x2 = 0.0;  ///< (X_a2 - X_in_i) / sqrt2
    double p2 = 0.0;  ///< (P_a2 + P_in_i) / sqrt2
};

struct DisplacementSignal {
    double x_a3 = 0.0;
    double p_a3 = 0.0;
    double x_a4 = 0.0;
    double p_a4 = 0.0;
};

DisplacementSignal displacement_signal(const MeasurementRecord& rec, const FeedforwardGains& gains);

struct ProtocolConfig {
    double reflectivity = 0.5;
    double r1 = 1.0;
    double r2 = 1.0;
    InputSpec input_s = InputSpec::vacuum();
    InputSpec input_i = InputSpec::vacuum();
    std::optional<FeedforwardGains> gains;  ///< defaults to nominal_gains(reflectivity)
    std::uint64_t seed = 0;
    std::size_t shots = 1000;
    std::size_t transcript_limit = 16;  ///< shots kept in serialized transcripts

    /// Throws InvalidArgument unless 0 <= R < 1 - 1e-9 and r1, r2 are finite
    /// and non-negative.
    void validate() const;

    [[nodiscard]] double gain() const { return 1.0 / (1.0 - reflectivity); }
    [[nodiscard]] FeedforwardGains effective_gains() const;
};

/// Local two-mode squeezing amplifier on (signal, idler):
///   X_s' = sqrt(G) X_s + sqrt(G-1) X_i      P_s' = sqrt(G) P_s - sqrt(G-1) P_i
///   X_i' = sqrt(G-1) X_s + sqrt(G) X_i      P_i' = -sqrt(G-1) P_s + sqrt(G) P_i
SymplecticOp ideal_nopa_map(double gain);

GaussianState ideal_nopa(double gain, const GaussianState& state, std::string_view signal, std::string_view idler);

struct FourModeResources {
    GaussianState state;       ///< over a1, a2, a3, a4
    HeisenbergLedger ledger;   ///< basis aEPR1, aEPR2, bEPR1, bEPR2; live a1..a4
};

FourModeResources build_four_mode_state(double r1, double r2, double reflectivity);

/// Both engines at the start of a run: inputs tensored with the four-mode
/// resource. Live modes in_s, in_i, a1, a2, a3, a4; ledger basis in_s, in_i,
/// aEPR1, aEPR2, bEPR1, bEPR2.
struct PreparedProtocol {
    GaussianState state;
    HeisenbergLedger ledger;
};

PreparedProtocol prepare_protocol(const ProtocolConfig& config);

// Station-local quantum steps, shared by run_protocol and the networked
// simulation so both drive the covariance engine identically.

using StateObserver = std::function<void(const GaussianState&)>;

struct StationMeasurement {
    double x = 0.0;
    double p = 0.0;
    GaussianState state;
};

/// Signal input station: combine (a1, in_s), measure X on the sum port and P
/// on the difference port.
StationMeasurement measure_signal_input(const GaussianState& state, RngStream& rng,
                                        const StateObserver& observe = {});

/// Idler input station: combine (a2, in_i), measure X on the difference port
/// and P on the sum port.
StationMeasurement measure_idler_input(const GaussianState& state, RngStream& rng,
                                       const StateObserver& observe = {});

/// Signal output station: displace a3 and rename it out_s.
GaussianState apply_signal_output(const GaussianState& state, double dx, double dp);

/// Idler output station: displace a4, rotate its phase by pi, rename it
/// out_i. The pi rotation aligns the idler phase reference with the local
/// amplifier convention above.
GaussianState apply_idler_output(const GaussianState& state, double dx, double dp);

using LedgerObserver = std::function<void(const HeisenbergLedger&)>;

/// Exact counterpart of the whole pipeline on the ledger. `observe` sees
/// the ledger after each station step.
HeisenbergLedger ledger_pipeline(const HeisenbergLedger& prepared, const FeedforwardGains& gains,
                                 const LedgerObserver& observe = {});

// ---------------------------------------------------------------------------

struct ShotRecord {
    MeasurementRecord measurement;
    DisplacementSignal signal;
    Eigen::Vector4d output_mean;  ///< conditional mean of (X_s, P_s, X_i, P_i)
    Eigen::Vector4d sample;       ///< one phase-space sample of the output
};

/// Running first/second moments (Welford).
class MomentAccumulator {
public:
    void add(const Eigen::Vector4d& v);
    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] Eigen::Vector4d mean() const { return mean_; }
    /// Unbiased sample covariance.
    [[nodiscard]] Eigen::Matrix4d cov() const;

private:
    std::size_t n_ = 0;
    Eigen::Vector4d mean_ = Eigen::Vector4d::Zero();
    Eigen::Matrix4d m2_ = Eigen::Matrix4d::Zero();
};

struct SampledMoments {
    std::size_t samples = 0;
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
};

struct MomentComparison {
    Eigen::Vector4d z_mean = Eigen::Vector4d::Zero();
    Eigen::Matrix4d z_cov = Eigen::Matrix4d::Zero();
    double max_abs_z = 0.0;
};

/// z-scores of sampled moments against exact Gaussian moments, using the
/// standard errors sqrt(S_ii / N) and sqrt((S_ii S_jj + S_ij^2) / N).
MomentComparison compare_moments(const SampledMoments& sampled, const GaussianState& exact);

struct RunResult {
    ProtocolConfig config;
    FeedforwardGains gains;
    GaussianState analytic_output;        ///< ledger moments of (out_s, out_i)
    HeisenbergLedger ledger;              ///< final ledger, live out_s, out_i
    Eigen::Matrix4d conditional_cov;      ///< per-shot conditional covariance
    std::vector<ShotRecord> shots;
    SampledMoments sampled;
    double min_physicality_eigenvalue = 0.0;  ///< covariance engine, over shot 0's intermediate states
    double min_ledger_physicality = 0.0;      ///< ledger path, factored form, over every station step
};

/// Runs `config.shots` rounds of the sampled pipeline, each on its own
/// stream RngStream(seed, {shot}), and the ledger pipeline once.
/// `observer`, if set, sees every intermediate covariance-engine state of
/// shot 0 (covariances do not depend on outcomes).
RunResult run_protocol(const ProtocolConfig& config, const StateObserver& observer = {});

/// Shared per-shot finishing step: samples the output in phase space and
/// records the shot.
ShotRecord finish_shot(const MeasurementRecord& rec, const DisplacementSignal& signal,
                       const GaussianState& output, RngStream& rng);

/// Assembles a RunResult from per-shot records.
RunResult assemble_result(const ProtocolConfig& config, std::vector<ShotRecord> shots,
                          const Eigen::Matrix4d& conditional_cov, double min_physicality);

Json to_json(const RunResult& result);

// ---------------------------------------------------------------------------

/// Ledger coefficients of the output rows on every basis quadrature.
struct TransferReport {
    std::vector<std::string> basis;     ///< "in_s.X", "in_s.P", ...
    std::vector<std::string> outputs;   ///< "out_s.X", "out_s.P", "out_i.X", "out_i.P"
    Eigen::MatrixXd coefficients;       ///< outputs x basis

    [[nodiscard]] double at(std::string_view output, std::string_view basis_entry) const;
};

TransferReport transfer_report(const ProtocolConfig& config);

struct ExcessNoise {
    double signal_x = 0.0;
    double signal_p = 0.0;
    double idler_x = 0.0;
    double idler_p = 0.0;
};

/// Closed-form excess variances over the ideal amplifier for vacuum inputs:
/// signal 2 e^{-2 r1} / (1 - R); idler 2 e^{-2 r2} + 2 R e^{-2 r1} / (1 - R).
ExcessNoise added_noise(double r1, double r2, double reflectivity);

/// Output moments of the local amplifier fed with the configured inputs.
GaussianState ideal_output(const ProtocolConfig& config);

/// Output moments of the nonlocal protocol from the ledger.
GaussianState analytic_output(const ProtocolConfig& config);

struct SweepRow {
    double reflectivity, r1, r2, gain;
    double var_xs, var_ps, var_xi, var_pi;
    double excess_xs, excess_xi;
};

SweepRow sweep_point(const ProtocolConfig& config);

/// Header line and rows in the fixed CSV column order.
std::string sweep_csv_header();
std::string sweep_csv_row(const SweepRow& row);

}  // namespace nopa
