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

#include "nopa/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <sstream>
#include <utility>

#include "nopa/error.hpp"

namespace nopa {

std::string_view to_string(Quadrature q) { return q == Quadrature::X ? "X" : "P"; }

Eigen::MatrixXd symplectic_form(std::size_t modes) {
    const auto n = static_cast<Eigen::Index>(2 * modes);
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 0; k < n; k += 2) {
        omega(k, k + 1) = 2.0;
        omega(k + 1, k) = -2.0;
    }
    return omega;
}

// ---------------------------------------------------------------------------
// SymplecticOp

SymplecticOp::SymplecticOp(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
    if (matrix_.rows() == 0 || matrix_.rows() != matrix_.cols() || matrix_.rows() % 2 != 0) {
        throw InvalidArgument("symplectic op must be a non-empty 2k x 2k matrix");
    }
    if (!matrix_.allFinite()) {
        throw InvalidArgument("symplectic op has non-finite entries");
    }
    // Entries of squeezing maps grow with the gain, so the residual is
    // compared relative to |S|^2.
    const double scale = std::max(1.0, matrix_.cwiseAbs().maxCoeff() * matrix_.cwiseAbs().maxCoeff());
    if (symplectic_residual() > kSymplecticTolerance * scale) {
        throw InvalidArgument("matrix does not preserve the symplectic form");
    }
}

double SymplecticOp::symplectic_residual() const {
    const Eigen::MatrixXd omega = symplectic_form(arity());
    return (matrix_ * omega * matrix_.transpose() - omega).cwiseAbs().maxCoeff();
}

SymplecticOp SymplecticOp::inverse() const {
    // S^{-1} = -Omega S^T Omega / 4 for the (0, 2; -2, 0) form.
    const Eigen::MatrixXd omega = symplectic_form(arity());
    return SymplecticOp(-omega * matrix_.transpose() * omega / 4.0);
}

SymplecticOp identity_map(std::size_t arity) {
    if (arity == 0) throw InvalidArgument("identity_map: arity must be positive");
    const auto n = static_cast<Eigen::Index>(2 * arity);
    return SymplecticOp(Eigen::MatrixXd::Identity(n, n));
}

namespace {

// Embeds a 2x2 mode-mixing matrix M into the interleaved (X_u, P_u, X_v, P_v)
// space, acting identically on X and P.
Eigen::MatrixXd passive_two_mode(const Eigen::Matrix2d& m) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(4, 4);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            s(2 * i, 2 * j) = m(i, j);
            s(2 * i + 1, 2 * j + 1) = m(i, j);
        }
    }
    return s;
}

}  // namespace

SymplecticOp beam_splitter_map(double reflectivity) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) {
        throw InvalidArgument("beam splitter reflectivity must lie in [0, 1]");
    }
    const double r = std::sqrt(reflectivity);
    const double t = std::sqrt(1.0 - reflectivity);
    Eigen::Matrix2d m;
    m << -r, t,  //
        t, r;
    return SymplecticOp(passive_two_mode(m));
}

SymplecticOp balanced_combiner_map() {
    const double h = 1.0 / std::sqrt(2.0);
    Eigen::Matrix2d m;
    m << h, h,  //
        h, -h;
    return SymplecticOp(passive_two_mode(m));
}

SymplecticOp squeezer_map(double r, Quadrature squeezed) {
    if (!std::isfinite(r)) throw InvalidArgument("squeezing parameter must be finite");
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
    const double shrink = std::exp(-r);
    const double grow = std::exp(r);
    s(0, 0) = squeezed == Quadrature::X ? shrink : grow;
    s(1, 1) = squeezed == Quadrature::X ? grow : shrink;
    return SymplecticOp(s);
}

SymplecticOp phase_rotation_map(double theta) {
    if (!std::isfinite(theta)) throw InvalidArgument("rotation angle must be finite");
    Eigen::MatrixXd s(2, 2);
    const double c = std::cos(theta);
    const double sn = std::sin(theta);
    s << c, sn,  //
        -sn, c;
    return SymplecticOp(s);
}

SymplecticOp phase_flip_map() { return SymplecticOp(-Eigen::MatrixXd::Identity(2, 2)); }

// ---------------------------------------------------------------------------
// QuadratureCombination

QuadratureCombination::QuadratureCombination(std::vector<QuadratureTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw InvalidArgument("quadrature combination needs at least one term");
    std::set<std::pair<ModeLabel, Quadrature>> seen;
    for (const auto& t : terms_) {
        if (!std::isfinite(t.coeff)) throw InvalidArgument("non-finite coefficient in combination");
        if (!seen.emplace(t.mode, t.quad).second) {
            throw InvalidArgument("duplicate term " + std::string(nopa::to_string(t.quad)) + "_" + t.mode);
        }
    }
}

// Compensated sum of squares: product errors via fma, sum errors via TwoSum.
double QuadratureCombination::shot_noise_bound() const {
    double s = 0.0;
    double err = 0.0;
    for (const auto& t : terms_) {
        const double p = t.coeff * t.coeff;
        const double p_err = std::fma(t.coeff, t.coeff, -p);
        const double sum = s + p;
        const double z = sum - s;
        err += p_err + ((s - (sum - z)) + (p - z));
        s = sum;
    }
    return s + err;
}

std::size_t QuadratureCombination::mode_count() const {
    std::set<ModeLabel> modes;
    for (const auto& t : terms_) {
        if (t.coeff != 0.0) modes.insert(t.mode);
    }
    return modes.size();
}

QuadratureCombination QuadratureCombination::scaled(double k) const {
    auto terms = terms_;
    for (auto& t : terms) t.coeff *= k;
    return QuadratureCombination(std::move(terms));
}

std::string QuadratureCombination::to_string() const {
    std::ostringstream os;
    os.precision(4);
    bool first = true;
    for (const auto& t : terms_) {
        const double c = t.coeff;
        if (first) {
            if (c < 0) os << "-";
        } else {
            os << (c < 0 ? " - " : " + ");
        }
        const double a = std::abs(c);
        if (a != 1.0) os << a << "*";
        os << nopa::to_string(t.quad) << "_" << t.mode;
        first = false;
    }
    return os.str();
}

void InputSpec::validate() const {
    if (!std::isfinite(mean_x) || !std::isfinite(mean_p)) throw InvalidArgument("input means must be finite");
    if (!std::isfinite(r)) throw InvalidArgument("input squeezing must be finite");
}

// ---------------------------------------------------------------------------
// GaussianState

GaussianState::GaussianState(std::vector<ModeLabel> modes, Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : modes_(std::move(modes)), mean_(std::move(mean)), cov_(std::move(cov)) {
    const auto n = static_cast<Eigen::Index>(2 * modes_.size());
    if (modes_.empty()) throw InvalidArgument("state needs at least one mode");
    std::set<std::string_view> seen;
    for (const auto& m : modes_) {
        if (m.empty()) throw InvalidArgument("empty mode label");
        if (!seen.insert(m).second) throw InvalidArgument("duplicate mode label '" + m + "'");
    }
    if (mean_.size() != n || cov_.rows() != n || cov_.cols() != n) {
        throw InvalidArgument("mean/cov dimensions do not match mode count");
    }
    if (!mean_.allFinite() || !cov_.allFinite()) throw InvalidArgument("state has non-finite entries");
    const double asym = (cov_ - cov_.transpose()).cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
    if (asym > kSymmetryTolerance * scale) throw InvalidArgument("covariance matrix is not symmetric");
    // Remove rounding asymmetry so downstream code can rely on exact symmetry.
    cov_ = (0.5 * (cov_ + cov_.transpose())).eval();
}

bool GaussianState::has_mode(std::string_view label) const {
    return std::find(modes_.begin(), modes_.end(), label) != modes_.end();
}

std::size_t GaussianState::mode_index(std::string_view label) const {
    auto it = std::find(modes_.begin(), modes_.end(), label);
    if (it == modes_.end()) throw InvalidArgument("unknown mode '" + std::string(label) + "'");
    return static_cast<std::size_t>(it - modes_.begin());
}

std::size_t GaussianState::quadrature_index(std::string_view label, Quadrature q) const {
    return 2 * mode_index(label) + quadrature_offset(q);
}

double GaussianState::quadrature_mean(std::string_view label, Quadrature q) const {
    return mean_(static_cast<Eigen::Index>(quadrature_index(label, q)));
}

GaussianState GaussianState::relabeled(std::string_view from, ModeLabel to) const {
    auto modes = modes_;
    modes[mode_index(from)] = std::move(to);
    return GaussianState(std::move(modes), mean_, cov_);
}

namespace {

std::vector<Eigen::Index> quadrature_rows(const GaussianState& s, std::span<const ModeLabel> labels) {
    std::vector<Eigen::Index> idx;
    idx.reserve(2 * labels.size());
    for (const auto& l : labels) {
        const auto k = static_cast<Eigen::Index>(2 * s.mode_index(l));
        idx.push_back(k);
        idx.push_back(k + 1);
    }
    return idx;
}

}  // namespace

GaussianState GaussianState::reduced(std::span<const ModeLabel> labels) const {
    const auto idx = quadrature_rows(*this, labels);
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::VectorXd m(n);
    Eigen::MatrixXd c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i) = mean_(idx[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < n; ++j) {
            c(i, j) = cov_(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
    }
    return GaussianState({labels.begin(), labels.end()}, std::move(m), std::move(c));
}

Json GaussianState::to_json() const {
    Json doc = Json::object();
    doc["modes"] = modes_;
    Json mean = Json::array();
    for (Eigen::Index i = 0; i < mean_.size(); ++i) mean.push_back(mean_(i));
    doc["mean"] = std::move(mean);
    Json cov = Json::array();
    for (Eigen::Index i = 0; i < cov_.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < cov_.cols(); ++j) row.push_back(cov_(i, j));
        cov.push_back(std::move(row));
    }
    doc["cov"] = std::move(cov);
    return doc;
}

GaussianState GaussianState::from_json(const Json& doc) {
    try {
        const auto modes = doc.at("modes").get<std::vector<ModeLabel>>();
        const auto& mean_j = doc.at("mean");
        const auto& cov_j = doc.at("cov");
        const auto n = static_cast<Eigen::Index>(2 * modes.size());
        if (!mean_j.is_array() || static_cast<Eigen::Index>(mean_j.size()) != n || !cov_j.is_array() ||
            static_cast<Eigen::Index>(cov_j.size()) != n) {
            throw DecodeError("state JSON: mean/cov sizes must be 2 * len(modes)");
        }
        Eigen::VectorXd mean(n);
        Eigen::MatrixXd cov(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            mean(i) = mean_j.at(static_cast<std::size_t>(i)).get<double>();
            const auto& row = cov_j.at(static_cast<std::size_t>(i));
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
                throw DecodeError("state JSON: covariance rows must have length 2 * len(modes)");
            }
            for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = row.at(static_cast<std::size_t>(j)).get<double>();
        }
        return GaussianState(modes, std::move(mean), std::move(cov));
    } catch (const Json::exception& e) {
        throw DecodeError(std::string("state JSON: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DecodeError(std::string("state JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Sources

GaussianState vacuum_state(std::span<const ModeLabel> labels) {
    const auto n = static_cast<Eigen::Index>(2 * labels.size());
    return GaussianState({labels.begin(), labels.end()}, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
}

GaussianState vacuum_state(std::size_t n, std::span<const ModeLabel> labels) {
    if (n < 1) throw InvalidArgument("vacuum_state: need at least one mode");
    if (labels.size() != n) throw InvalidArgument("vacuum_state: label count does not match mode count");
    return vacuum_state(labels);
}

GaussianState coherent_state(ModeLabel label, double mean_x, double mean_p) {
    if (!std::isfinite(mean_x) || !std::isfinite(mean_p)) throw InvalidArgument("coherent amplitude must be finite");
    return GaussianState({std::move(label)}, Eigen::Vector2d(mean_x, mean_p), Eigen::Matrix2d::Identity());
}

GaussianState squeezed_state(ModeLabel label, double r, Quadrature squeezed) {
    if (!std::isfinite(r)) throw InvalidArgument("squeezing parameter must be finite");
    const ModeLabel l[] = {label};
    return apply_symplectic(vacuum_state(l), squeezer_map(r, squeezed), l);
}

GaussianState prepare_input(ModeLabel label, const InputSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case InputSpec::Kind::vacuum:
            return coherent_state(std::move(label), 0.0, 0.0);
        case InputSpec::Kind::coherent:
            return coherent_state(std::move(label), spec.mean_x, spec.mean_p);
        case InputSpec::Kind::squeezed:
            return squeezed_state(std::move(label), spec.r, spec.squeezed_quad);
    }
    throw InvalidArgument("unknown input kind");
}

GaussianState epr_state(double r, ModeLabel first, ModeLabel second) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("EPR squeezing must be finite and non-negative");
    const double ch = std::cosh(2.0 * r);
    const double sh = std::sinh(2.0 * r);
    Eigen::MatrixXd cov(4, 4);
    cov << ch, 0, -sh, 0,  //
        0, ch, 0, sh,      //
        -sh, 0, ch, 0,     //
        0, sh, 0, ch;
    return GaussianState({std::move(first), std::move(second)}, Eigen::VectorXd::Zero(4), std::move(cov));
}

GaussianState tensor_product(const GaussianState& a, const GaussianState& b) {
    auto modes = a.modes();
    modes.insert(modes.end(), b.modes().begin(), b.modes().end());
    const auto na = a.mean().size();
    const auto nb = b.mean().size();
    Eigen::VectorXd mean(na + nb);
    mean << a.mean(), b.mean();
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
    cov.topLeftCorner(na, na) = a.cov();
    cov.bottomRightCorner(nb, nb) = b.cov();
    return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

// ---------------------------------------------------------------------------
// Operations

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op,
                               std::span<const ModeLabel> targets) {
    if (targets.size() != op.arity()) throw InvalidArgument("apply_symplectic: target count does not match op arity");
    const auto idx = quadrature_rows(state, targets);
    {
        std::set<std::string_view> uniq(targets.begin(), targets.end());
        if (uniq.size() != targets.size()) throw InvalidArgument("apply_symplectic: repeated target");
    }
    const auto n = state.mean().size();
    const auto k = static_cast<Eigen::Index>(idx.size());
    // Full-size map: identity outside the targeted rows.
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto ri = idx[static_cast<std::size_t>(i)];
        s(ri, ri) = 0.0;
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) {
            s(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]) = op.matrix()(i, j);
        }
    }
    Eigen::VectorXd mean = s * state.mean();
    Eigen::MatrixXd cov = s * state.cov() * s.transpose();
    return GaussianState(state.modes(), std::move(mean), std::move(cov));
}

GaussianState apply_symplectic(const GaussianState& state, const SymplecticOp& op,
                               std::initializer_list<ModeLabel> targets) {
    return apply_symplectic(state, op, std::span<const ModeLabel>(targets.begin(), targets.size()));
}

GaussianState displace(const GaussianState& state, std::string_view mode, double dx, double dp) {
    if (!std::isfinite(dx) || !std::isfinite(dp)) throw InvalidArgument("displacement must be finite");
    const auto k = static_cast<Eigen::Index>(2 * state.mode_index(mode));
    Eigen::VectorXd mean = state.mean();
    mean(k) += dx;
    mean(k + 1) += dp;
    return GaussianState(state.modes(), std::move(mean), state.cov());
}

GaussianState condition_on_homodyne(const GaussianState& state, std::string_view mode, Quadrature q,
                                    double outcome) {
    if (!std::isfinite(outcome)) throw InvalidArgument("homodyne outcome must be finite");
    const std::size_t m = state.mode_index(mode);
    if (state.mode_count() == 1) {
        throw InvalidArgument("cannot measure the only remaining mode");
    }
    const auto measured = static_cast<Eigen::Index>(2 * m + quadrature_offset(q));
    const double var = state.cov()(measured, measured);
    if (!(var > 0.0)) throw StateError("measured quadrature has non-positive variance");

    // Remaining quadrature rows (all modes except the measured one).
    std::vector<Eigen::Index> keep;
    std::vector<ModeLabel> modes;
    for (std::size_t i = 0; i < state.mode_count(); ++i) {
        if (i == m) continue;
        modes.push_back(state.modes()[i]);
        keep.push_back(static_cast<Eigen::Index>(2 * i));
        keep.push_back(static_cast<Eigen::Index>(2 * i + 1));
    }
    const auto n = static_cast<Eigen::Index>(keep.size());
    Eigen::VectorXd mean(n);
    Eigen::VectorXd cross(n);  // Cov(remaining, measured quadrature)
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ri = keep[static_cast<std::size_t>(i)];
        mean(i) = state.mean()(ri);
        cross(i) = state.cov()(ri, measured);
        for (Eigen::Index j = 0; j < n; ++j) cov(i, j) = state.cov()(ri, keep[static_cast<std::size_t>(j)]);
    }
    // The pseudo-inverse of the projected block diag(var, 0) (or diag(0, var))
    // only has the single entry 1/var.
    const double innovation = outcome - state.mean()(measured);
    mean += cross * (innovation / var);
    cov -= cross * cross.transpose() / var;
    return GaussianState(std::move(modes), std::move(mean), std::move(cov));
}

HomodyneResult homodyne_measure(const GaussianState& state, std::string_view mode, Quadrature q, RngStream& rng) {
    const auto idx = static_cast<Eigen::Index>(state.quadrature_index(mode, q));
    const double var = state.cov()(idx, idx);
    if (!(var > 0.0)) throw StateError("measured quadrature has non-positive variance");
    const double outcome = rng.normal(state.mean()(idx), std::sqrt(var));
    return {outcome, condition_on_homodyne(state, mode, q, outcome)};
}

namespace {

Eigen::VectorXd coefficient_vector(const GaussianState& state, const QuadratureCombination& combo) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(state.mean().size());
    for (const auto& t : combo.terms()) {
        c(static_cast<Eigen::Index>(state.quadrature_index(t.mode, t.quad))) += t.coeff;
    }
    return c;
}

}  // namespace

double combination_variance(const GaussianState& state, const QuadratureCombination& combo) {
    const Eigen::VectorXd c = coefficient_vector(state, combo);
    return c.dot(state.cov() * c);
}

double combination_mean(const GaussianState& state, const QuadratureCombination& combo) {
    return coefficient_vector(state, combo).dot(state.mean());
}

PhysicalityReport check_physicality(const Eigen::MatrixXd& cov) {
    PhysicalityReport report;
    if (cov.rows() == 0 || cov.rows() != cov.cols() || cov.rows() % 2 != 0) {
        return report;
    }
    report.symmetry_residual = (cov - cov.transpose()).cwiseAbs().maxCoeff();
    const auto modes = static_cast<std::size_t>(cov.rows() / 2);
    // Uncertainty principle: cov + i Omega/2 >= 0 (the factor 2 in Omega
    // carries [X, P] = 2i; vacuum saturates with eigenvalue 0).
    const Eigen::MatrixXcd h = cov.cast<std::complex<double>>() +
                               std::complex<double>(0.0, 0.5) * symplectic_form(modes).cast<std::complex<double>>();
    // Hermitian part only; the antisymmetric real part of cov is reported separately.
    const Eigen::MatrixXcd herm = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    report.min_eigenvalue = solver.eigenvalues().minCoeff();
    report.physical = report.symmetry_residual <= kSymmetryTolerance && report.min_eigenvalue >= kPhysicalityFloor;
    return report;
}

PhysicalityReport check_physicality(const GaussianState& state) { return check_physicality(state.cov()); }

namespace {

// Lower-triangular L with L L^dagger = [[a, c + i], [c - i, b]].
Eigen::Matrix2cd block_factor(double a, double b, double c) {
    using cd = std::complex<double>;
    if (!(a > 0.0)) throw InvalidArgument("unphysical covariance block");
    const double det = std::fma(a, b, -(c * c + 1.0));
    if (det < kPhysicalityFloor * a) throw InvalidArgument("unphysical covariance block");
    const double sa = std::sqrt(a);
    Eigen::Matrix2cd l = Eigen::Matrix2cd::Zero();
    l(0, 0) = sa;
    l(1, 0) = cd(c, -1.0) / sa;
    l(1, 1) = std::sqrt(std::max(det, 0.0) / a);
    return l;
}

}  // namespace

Eigen::MatrixXcd uncertainty_factor(const Eigen::MatrixXd& cov) {
    const Eigen::Index n = cov.rows();
    if (n == 0 || n != cov.cols() || n % 2 != 0) throw InvalidArgument("covariance must be square with even size");
    bool block_diagonal = true;
    for (Eigen::Index i = 0; i < n && block_diagonal; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i / 2 != j / 2 && cov(i, j) != 0.0) {
                block_diagonal = false;
                break;
            }
        }
    }
    Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(n, n);
    if (block_diagonal) {
        for (Eigen::Index k = 0; k < n; k += 2) {
            f.block<2, 2>(k, k) = block_factor(cov(k, k), cov(k + 1, k + 1), 0.5 * (cov(k, k + 1) + cov(k + 1, k)));
        }
        return f;
    }
    const Eigen::MatrixXcd h = cov.cast<std::complex<double>>() +
                               std::complex<double>(0.0, 0.5) *
                                   symplectic_form(static_cast<std::size_t>(n / 2)).cast<std::complex<double>>();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (h + h.adjoint()));
    const Eigen::VectorXd lambda = solver.eigenvalues();
    if (lambda.minCoeff() < kPhysicalityFloor) throw InvalidArgument("unphysical covariance");
    return solver.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Eigen::MatrixXcd epr_uncertainty_factor(double r) {
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("EPR squeezing must be finite and non-negative");
    // epr_state = combiner (X-squeezed (x) P-squeezed) combiner^T; the
    // combiner is symplectic, so it carries the factor along.
    const double lo = std::exp(-2.0 * r);
    const double hi = std::exp(2.0 * r);
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
    d.block<2, 2>(0, 0) = block_factor(lo, hi, 0.0);
    d.block<2, 2>(2, 2) = block_factor(hi, lo, 0.0);
    return balanced_combiner_map().matrix().cast<std::complex<double>>() * d;
}

}  // namespace nopa
