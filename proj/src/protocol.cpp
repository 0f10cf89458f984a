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

#include "nopa/protocol.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "nopa/error.hpp"

namespace nopa {

using namespace labels;

bool FeedforwardGains::has_reference_sign_pattern(double tol) const {
    return std::abs(x1_a3 + p1_a3) <= tol && std::abs(x2_a3 - p2_a3) <= tol && std::abs(x1_a4 - p1_a4) <= tol &&
           std::abs(x2_a4 + p2_a4) <= tol;
}

Eigen::Matrix4d FeedforwardGains::matrix() const {
    Eigen::Matrix4d g;
    g << x1_a3, 0.0, x2_a3, 0.0,  //
        0.0, p1_a3, 0.0, p2_a3,   //
        x1_a4, 0.0, x2_a4, 0.0,   //
        0.0, p1_a4, 0.0, p2_a4;
    return g;
}

FeedforwardGains nominal_gains(double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity < 1.0)) throw InvalidArgument("reflectivity must lie in [0, 1)");
    const double t = 1.0 - reflectivity;
    const double direct = std::sqrt(2.0 / t);
    const double cross = std::sqrt(2.0 * reflectivity / t);
    FeedforwardGains g;
    g.x1_a3 = direct;
    g.p1_a3 = -direct;
    g.x2_a3 = -cross;
    g.p2_a3 = -cross;
    g.x1_a4 = -cross;
    g.p1_a4 = -cross;
    g.x2_a4 = direct;
    g.p2_a4 = -direct;
    return g;
}

DisplacementSignal displacement_signal(const MeasurementRecord& rec, const FeedforwardGains& g) {
    return {g.x1_a3 * rec.x1 + g.x2_a3 * rec.x2, g.p1_a3 * rec.p1 + g.p2_a3 * rec.p2,
            g.x1_a4 * rec.x1 + g.x2_a4 * rec.x2, g.p1_a4 * rec.p1 + g.p2_a4 * rec.p2};
}

void ProtocolConfig::validate() const {
    if (!(reflectivity >= 0.0 && reflectivity < 1.0 - 1e-9)) {
        throw InvalidArgument("reflectivity must satisfy 0 <= R < 1");
    }
    if (!std::isfinite(r1) || !std::isfinite(r2) || r1 < 0.0 || r2 < 0.0) {
        throw InvalidArgument("squeezing parameters must be finite and non-negative");
    }
    input_s.validate();
    input_i.validate();
    if (gains) {
        const Eigen::Matrix4d g = gains->matrix();
        if (!g.allFinite()) throw InvalidArgument("feedforward gains must be finite");
    }
}

FeedforwardGains ProtocolConfig::effective_gains() const { return gains ? *gains : nominal_gains(reflectivity); }

// ---------------------------------------------------------------------------

SymplecticOp ideal_nopa_map(double gain) {
    if (!std::isfinite(gain) || gain < 1.0) throw InvalidArgument("amplifier gain must be >= 1");
    const double a = std::sqrt(gain);
    const double b = std::sqrt(gain - 1.0);
    Eigen::MatrixXd s(4, 4);
    s << a, 0, b, 0,  //
        0, a, 0, -b,  //
        b, 0, a, 0,   //
        0, -b, 0, a;
    return SymplecticOp(s);
}

GaussianState ideal_nopa(double gain, const GaussianState& state, std::string_view signal, std::string_view idler) {
    return apply_symplectic(state, ideal_nopa_map(gain), {ModeLabel(signal), ModeLabel(idler)});
}

namespace {

// Shared wiring of the four-mode resource; `Engine` is GaussianState or
// HeisenbergLedger.
template <typename Engine>
Engine combine_epr_pairs(const Engine& engine, double reflectivity) {
    const SymplecticOp bs = beam_splitter_map(reflectivity);
    // First output of the splitter is c_t, second c_r.
    return engine.apply(bs, {kEprA2, kEprB2})
        .relabeled(kEprA1, kA1)
        .relabeled(kEprA2, kA2)
        .relabeled(kEprB2, kA3)
        .relabeled(kEprB1, kA4);
}

// Adapter so the template above reads the same for the covariance engine.
struct StateEngine {
    GaussianState state;
    [[nodiscard]] StateEngine apply(const SymplecticOp& op, std::initializer_list<ModeLabel> targets) const {
        return {apply_symplectic(state, op, targets)};
    }
    [[nodiscard]] StateEngine relabeled(std::string_view from, ModeLabel to) const {
        return {state.relabeled(from, std::move(to))};
    }
};

GaussianState epr_sources(double r1, double r2) {
    return tensor_product(epr_state(r1, kEprA1, kEprA2), epr_state(r2, kEprB1, kEprB2));
}

// Sources with their closed-form uncertainty factor attached.
BasisSpec source_basis(const GaussianState& sources, std::initializer_list<Eigen::MatrixXcd> leading, double r1,
                       double r2) {
    std::vector<Eigen::MatrixXcd> blocks(leading);
    blocks.push_back(epr_uncertainty_factor(r1));
    blocks.push_back(epr_uncertainty_factor(r2));
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    BasisSpec spec = BasisSpec::from_state(sources);
    spec.factor = Eigen::MatrixXcd::Zero(n, n);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        spec.factor.block(at, at, b.rows(), b.cols()) = b;
        at += b.rows();
    }
    return spec;
}

}  // namespace

FourModeResources build_four_mode_state(double r1, double r2, double reflectivity) {
    if (!std::isfinite(r1) || !std::isfinite(r2) || r1 < 0.0 || r2 < 0.0) {
        throw InvalidArgument("squeezing parameters must be finite and non-negative");
    }
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) throw InvalidArgument("reflectivity must lie in [0, 1]");
    const GaussianState sources = epr_sources(r1, r2);
    GaussianState state = combine_epr_pairs(StateEngine{sources}, reflectivity).state;
    const ModeLabel order[] = {kA1, kA2, kA3, kA4};
    return {state.reduced(order),
            combine_epr_pairs(HeisenbergLedger(source_basis(sources, {}, r1, r2)), reflectivity)};
}

PreparedProtocol prepare_protocol(const ProtocolConfig& config) {
    config.validate();
    const GaussianState inputs =
        tensor_product(prepare_input(kInSignal, config.input_s), prepare_input(kInIdler, config.input_i));
    const GaussianState sources = tensor_product(inputs, epr_sources(config.r1, config.r2));
    const BasisSpec basis = source_basis(sources, {uncertainty_factor(inputs.cov())}, config.r1, config.r2);
    return {combine_epr_pairs(StateEngine{sources}, config.reflectivity).state,
            combine_epr_pairs(HeisenbergLedger(basis), config.reflectivity)};
}

namespace {

void notify(const StateObserver& observe, const GaussianState& s) {
    if (observe) observe(s);
}

}  // namespace

StationMeasurement measure_signal_input(const GaussianState& state, RngStream& rng, const StateObserver& observe) {
    const GaussianState mixed = apply_symplectic(state, balanced_combiner_map(), {kA1, kInSignal})
                                    .relabeled(kA1, kSignalSum)
                                    .relabeled(kInSignal, kSignalDiff);
    notify(observe, mixed);
    auto hx = homodyne_measure(mixed, kSignalSum, Quadrature::X, rng);
    notify(observe, hx.conditioned);
    auto hp = homodyne_measure(hx.conditioned, kSignalDiff, Quadrature::P, rng);
    notify(observe, hp.conditioned);
    return {hx.outcome, hp.outcome, std::move(hp.conditioned)};
}

StationMeasurement measure_idler_input(const GaussianState& state, RngStream& rng, const StateObserver& observe) {
    const GaussianState mixed = apply_symplectic(state, balanced_combiner_map(), {kA2, kInIdler})
                                    .relabeled(kA2, kIdlerSum)
                                    .relabeled(kInIdler, kIdlerDiff);
    notify(observe, mixed);
    auto hx = homodyne_measure(mixed, kIdlerDiff, Quadrature::X, rng);
    notify(observe, hx.conditioned);
    auto hp = homodyne_measure(hx.conditioned, kIdlerSum, Quadrature::P, rng);
    notify(observe, hp.conditioned);
    return {hx.outcome, hp.outcome, std::move(hp.conditioned)};
}

GaussianState apply_signal_output(const GaussianState& state, double dx, double dp) {
    return displace(state, kA3, dx, dp).relabeled(kA3, kOutSignal);
}

GaussianState apply_idler_output(const GaussianState& state, double dx, double dp) {
    return apply_symplectic(displace(state, kA4, dx, dp), phase_flip_map(), {kA4}).relabeled(kA4, kOutIdler);
}

HeisenbergLedger ledger_pipeline(const HeisenbergLedger& prepared, const FeedforwardGains& gains,
                                 const LedgerObserver& observe) {
    const auto step = [&](HeisenbergLedger next) {
        if (observe) observe(next);
        return next;
    };
    const SymplecticOp combiner = balanced_combiner_map();
    const HeisenbergLedger mixed = step(step(prepared.apply(combiner, {kA1, kInSignal})
                                                 .relabeled(kA1, kSignalSum)
                                                 .relabeled(kInSignal, kSignalDiff))
                                            .apply(combiner, {kA2, kInIdler})
                                            .relabeled(kA2, kIdlerSum)
                                            .relabeled(kInIdler, kIdlerDiff));
    const QuadratureRef measured[] = {{kSignalSum, Quadrature::X},
                                      {kSignalDiff, Quadrature::P},
                                      {kIdlerDiff, Quadrature::X},
                                      {kIdlerSum, Quadrature::P}};
    const QuadratureRef targets[] = {
        {kA3, Quadrature::X}, {kA3, Quadrature::P}, {kA4, Quadrature::X}, {kA4, Quadrature::P}};
    const HeisenbergLedger fed = step(mixed.measure_feedforward(measured, targets, gains.matrix()));
    return step(fed.apply(phase_flip_map(), {kA4}).relabeled(kA3, kOutSignal).relabeled(kA4, kOutIdler));
}

// ---------------------------------------------------------------------------

void MomentAccumulator::add(const Eigen::Vector4d& v) {
    ++n_;
    const Eigen::Vector4d delta = v - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (v - mean_).transpose();
}

Eigen::Matrix4d MomentAccumulator::cov() const {
    if (n_ < 2) return Eigen::Matrix4d::Zero();
    const Eigen::Matrix4d c = m2_ / static_cast<double>(n_ - 1);
    return 0.5 * (c + c.transpose());
}

MomentComparison compare_moments(const SampledMoments& sampled, const GaussianState& exact) {
    if (exact.mean().size() != 4) throw InvalidArgument("compare_moments expects a two-mode state");
    if (sampled.samples < 2) throw InvalidArgument("compare_moments needs at least two samples");
    const double n = static_cast<double>(sampled.samples);
    const Eigen::Matrix4d s = exact.cov();
    MomentComparison cmp;
    for (int i = 0; i < 4; ++i) {
        const double se = std::sqrt(s(i, i) / n);
        cmp.z_mean(i) = (sampled.mean(i) - exact.mean()(i)) / se;
        cmp.max_abs_z = std::max(cmp.max_abs_z, std::abs(cmp.z_mean(i)));
        for (int j = 0; j < 4; ++j) {
            const double se_c = std::sqrt((s(i, i) * s(j, j) + s(i, j) * s(i, j)) / n);
            cmp.z_cov(i, j) = (sampled.cov(i, j) - s(i, j)) / se_c;
            cmp.max_abs_z = std::max(cmp.max_abs_z, std::abs(cmp.z_cov(i, j)));
        }
    }
    return cmp;
}

ShotRecord finish_shot(const MeasurementRecord& rec, const DisplacementSignal& signal, const GaussianState& output,
                       RngStream& rng) {
    const ModeLabel order[] = {kOutSignal, kOutIdler};
    const GaussianState out = output.reduced(order);
    ShotRecord shot;
    shot.measurement = rec;
    shot.signal = signal;
    shot.output_mean = out.mean();
    // Phase-space sample from N(mean, cov): mean + V sqrt(D) z.
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(Eigen::Matrix4d(out.cov()));
    Eigen::Vector4d z;
    for (int i = 0; i < 4; ++i) z(i) = rng.standard_normal();
    const Eigen::Vector4d scale = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    shot.sample = shot.output_mean + eig.eigenvectors() * scale.cwiseProduct(z);
    return shot;
}

RunResult assemble_result(const ProtocolConfig& config, std::vector<ShotRecord> shots,
                          const Eigen::Matrix4d& conditional_cov, double min_physicality) {
    const FeedforwardGains gains = config.effective_gains();
    const HeisenbergLedger prepared = prepare_protocol(config).ledger;
    double min_ledger = prepared.physicality().min_eigenvalue;
    HeisenbergLedger ledger = ledger_pipeline(prepared, gains, [&](const HeisenbergLedger& l) {
        min_ledger = std::min(min_ledger, l.physicality().min_eigenvalue);
    });
    const ModeLabel order[] = {kOutSignal, kOutIdler};
    GaussianState analytic = ledger.to_state(order);
    min_ledger = std::min(min_ledger, check_physicality(analytic).min_eigenvalue);

    MomentAccumulator acc;
    for (const auto& s : shots) acc.add(s.sample);
    SampledMoments sampled{acc.count(), acc.mean(), acc.cov()};
    return RunResult{config,         gains, std::move(analytic), std::move(ledger), conditional_cov, std::move(shots),
                     sampled,        min_physicality, min_ledger};
}

RunResult run_protocol(const ProtocolConfig& config, const StateObserver& observer) {
    config.validate();
    const PreparedProtocol prepared = prepare_protocol(config);
    const FeedforwardGains gains = config.effective_gains();

    double min_eig = check_physicality(prepared.state).min_eigenvalue;
    const StateObserver track = [&](const GaussianState& s) {
        min_eig = std::min(min_eig, check_physicality(s).min_eigenvalue);
        if (observer) observer(s);
    };

    std::vector<ShotRecord> shots;
    shots.reserve(config.shots);
    Eigen::Matrix4d conditional_cov = Eigen::Matrix4d::Zero();
    for (std::size_t k = 0; k < config.shots; ++k) {
        RngStream rng(config.seed, {static_cast<std::uint64_t>(k)});
        const StateObserver none;
        const StateObserver& observe = k == 0 ? track : none;
        StationMeasurement m1 = measure_signal_input(prepared.state, rng, observe);
        StationMeasurement m2 = measure_idler_input(m1.state, rng, observe);
        const MeasurementRecord rec{m1.x, m1.p, m2.x, m2.p};
        const DisplacementSignal sig = displacement_signal(rec, gains);
        GaussianState out = apply_idler_output(apply_signal_output(m2.state, sig.x_a3, sig.p_a3), sig.x_a4, sig.p_a4);
        if (k == 0) {
            track(out);
            const ModeLabel order[] = {kOutSignal, kOutIdler};
            conditional_cov = out.reduced(order).cov();
        }
        shots.push_back(finish_shot(rec, sig, out, rng));
    }
    return assemble_result(config, std::move(shots), conditional_cov, min_eig);
}

// ---------------------------------------------------------------------------

namespace {

Json vector_json(const Eigen::VectorXd& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Json matrix_json(const Eigen::MatrixXd& m) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) a.push_back(vector_json(m.row(i).transpose()));
    return a;
}

Json input_json(const InputSpec& in) {
    Json j = Json::object();
    switch (in.kind) {
        case InputSpec::Kind::vacuum:
            j["kind"] = "vacuum";
            break;
        case InputSpec::Kind::coherent:
            j["kind"] = "coherent";
            j["mean_x"] = in.mean_x;
            j["mean_p"] = in.mean_p;
            break;
        case InputSpec::Kind::squeezed:
            j["kind"] = "squeezed";
            j["r"] = in.r;
            j["quadrature"] = std::string(to_string(in.squeezed_quad));
            break;
    }
    return j;
}

Json gains_json(const FeedforwardGains& g) {
    Json j = Json::object();
    j["g_x1_a3"] = g.x1_a3;
    j["g_p1_a3"] = g.p1_a3;
    j["g_x2_a3"] = g.x2_a3;
    j["g_p2_a3"] = g.p2_a3;
    j["g_x1_a4"] = g.x1_a4;
    j["g_p1_a4"] = g.p1_a4;
    j["g_x2_a4"] = g.x2_a4;
    j["g_p2_a4"] = g.p2_a4;
    return j;
}

}  // namespace

Json to_json(const RunResult& result) {
    const auto& c = result.config;
    Json doc = Json::object();
    Json cfg = Json::object();
    cfg["reflectivity"] = c.reflectivity;
    cfg["r1"] = c.r1;
    cfg["r2"] = c.r2;
    cfg["gain"] = c.gain();
    cfg["input_s"] = input_json(c.input_s);
    cfg["input_i"] = input_json(c.input_i);
    cfg["seed"] = c.seed;
    cfg["shots"] = c.shots;
    doc["config"] = std::move(cfg);
    doc["gains"] = gains_json(result.gains);
    doc["analytic"] = result.analytic_output.to_json();
    doc["conditional_cov"] = matrix_json(result.conditional_cov);
    Json sampled = Json::object();
    sampled["samples"] = result.sampled.samples;
    sampled["mean"] = vector_json(result.sampled.mean);
    sampled["cov"] = matrix_json(result.sampled.cov);
    if (result.sampled.samples >= 2) {
        const MomentComparison cmp = compare_moments(result.sampled, result.analytic_output);
        sampled["z_mean"] = vector_json(cmp.z_mean);
        sampled["z_cov"] = matrix_json(cmp.z_cov);
        sampled["max_abs_z"] = cmp.max_abs_z;
    }
    doc["sampled"] = std::move(sampled);
    doc["min_physicality_eigenvalue"] = result.min_physicality_eigenvalue;
    doc["min_ledger_physicality"] = result.min_ledger_physicality;
    Json transcripts = Json::array();
    const std::size_t keep = std::min(c.transcript_limit, result.shots.size());
    for (std::size_t k = 0; k < keep; ++k) {
        const auto& s = result.shots[k];
        Json t = Json::object();
        t["shot"] = k;
        t["measurement"] = Json{{"x1", s.measurement.x1}, {"p1", s.measurement.p1}, {"x2", s.measurement.x2},
                                {"p2", s.measurement.p2}};
        t["signal"] = Json{{"x_a3", s.signal.x_a3}, {"p_a3", s.signal.p_a3}, {"x_a4", s.signal.x_a4},
                           {"p_a4", s.signal.p_a4}};
        t["output_mean"] = vector_json(s.output_mean);
        transcripts.push_back(std::move(t));
    }
    doc["transcripts"] = std::move(transcripts);
    return doc;
}

// ---------------------------------------------------------------------------

double TransferReport::at(std::string_view output, std::string_view basis_entry) const {
    const auto row = std::find(outputs.begin(), outputs.end(), output);
    const auto col = std::find(basis.begin(), basis.end(), basis_entry);
    if (row == outputs.end() || col == basis.end()) {
        throw InvalidArgument("unknown transfer entry " + std::string(output) + " <- " + std::string(basis_entry));
    }
    return coefficients(row - outputs.begin(), col - basis.begin());
}

TransferReport transfer_report(const ProtocolConfig& config) {
    const HeisenbergLedger ledger = ledger_pipeline(prepare_protocol(config).ledger, config.effective_gains());
    TransferReport report;
    for (const auto& m : ledger.basis().modes) {
        report.basis.push_back(m + ".X");
        report.basis.push_back(m + ".P");
    }
    report.coefficients.resize(4, static_cast<Eigen::Index>(report.basis.size()));
    Eigen::Index r = 0;
    for (const auto& mode : {kOutSignal, kOutIdler}) {
        for (auto q : {Quadrature::X, Quadrature::P}) {
            report.outputs.push_back(mode + "." + std::string(to_string(q)));
            report.coefficients.row(r++) = ledger.row({mode, q}).transpose();
        }
    }
    return report;
}

ExcessNoise added_noise(double r1, double r2, double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity < 1.0)) throw InvalidArgument("reflectivity must lie in [0, 1)");
    if (!std::isfinite(r1) || !std::isfinite(r2)) throw InvalidArgument("squeezing parameters must be finite");
    const double t = 1.0 - reflectivity;
    const double a = std::exp(-2.0 * r1);
    const double b = std::exp(-2.0 * r2);
    const double signal = 2.0 * a / t;
    const double idler = 2.0 * b + 2.0 * reflectivity * a / t;
    return {signal, signal, idler, idler};
}

GaussianState ideal_output(const ProtocolConfig& config) {
    config.validate();
    const GaussianState inputs =
        tensor_product(prepare_input(kInSignal, config.input_s), prepare_input(kInIdler, config.input_i));
    return ideal_nopa(config.gain(), inputs, kInSignal, kInIdler)
        .relabeled(kInSignal, kOutSignal)
        .relabeled(kInIdler, kOutIdler);
}

GaussianState analytic_output(const ProtocolConfig& config) {
    const HeisenbergLedger ledger = ledger_pipeline(prepare_protocol(config).ledger, config.effective_gains());
    const ModeLabel order[] = {kOutSignal, kOutIdler};
    return ledger.to_state(order);
}

SweepRow sweep_point(const ProtocolConfig& config) {
    const GaussianState out = analytic_output(config);
    const GaussianState ideal = ideal_output(config);
    SweepRow row{};
    row.reflectivity = config.reflectivity;
    row.r1 = config.r1;
    row.r2 = config.r2;
    row.gain = config.gain();
    row.var_xs = out.cov()(0, 0);
    row.var_ps = out.cov()(1, 1);
    row.var_xi = out.cov()(2, 2);
    row.var_pi = out.cov()(3, 3);
    row.excess_xs = row.var_xs - ideal.cov()(0, 0);
    row.excess_xi = row.var_xi - ideal.cov()(2, 2);
    return row;
}

std::string sweep_csv_header() { return "R,r1,r2,G,var_Xs,var_Ps,var_Xi,var_Pi,excess_Xs,excess_Xi"; }

std::string sweep_csv_row(const SweepRow& r) {
    std::string line;
    for (double v : {r.reflectivity, r.r1, r.r2, r.gain, r.var_xs, r.var_ps, r.var_xi, r.var_pi, r.excess_xs,
                     r.excess_xi}) {
        if (!line.empty()) line.push_back(',');
        line += format_double(v);
    }
    return line;
}

}  // namespace nopa
