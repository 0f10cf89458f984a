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

#include "nopa/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>
#include <utility>

#include "nopa/error.hpp"

namespace nopa {

namespace {

std::string row_key(const ModeLabel& mode, Quadrature q) { return mode + "." + std::string(to_string(q)); }

}  // namespace

BasisSpec BasisSpec::from_state(const GaussianState& state) {
    return {state.modes(), state.mean(), state.cov(), Eigen::MatrixXcd()};
}

HeisenbergLedger::HeisenbergLedger(BasisSpec spec) : basis_(std::move(spec)), live_(basis_.modes) {
    if (basis_.modes.empty()) throw InvalidArgument("ledger basis must contain at least one mode");
    // Reuse the state validator for labels, sizes and symmetry.
    try {
        GaussianState check(basis_.modes, basis_.mean, basis_.cov);
        if (!check_physicality(check).physical) throw InvalidArgument("ledger basis covariance is unphysical");
        basis_.cov = check.cov();
        const auto n = static_cast<Eigen::Index>(2 * basis_.modes.size());
        if (basis_.factor.size() == 0) {
            basis_.factor = uncertainty_factor(basis_.cov);
        } else {
            if (basis_.factor.rows() != n || basis_.factor.cols() != n) {
                throw InvalidArgument("uncertainty factor has the wrong shape");
            }
            const Eigen::MatrixXcd h = basis_.cov.cast<std::complex<double>>() +
                                       std::complex<double>(0.0, 0.5) *
                                           symplectic_form(basis_.modes.size()).cast<std::complex<double>>();
            const double scale = std::max(1.0, basis_.cov.cwiseAbs().maxCoeff());
            if ((basis_.factor * basis_.factor.adjoint() - h).cwiseAbs().maxCoeff() > 1e-12 * scale) {
                throw InvalidArgument("uncertainty factor does not match the covariance");
            }
        }
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(std::string("malformed basis spec: ") + e.what());
    }
    const auto n = static_cast<Eigen::Index>(2 * basis_.modes.size());
    rows_ = Eigen::MatrixXd::Identity(n, n);
    offsets_ = Eigen::VectorXd::Zero(n);
}

bool HeisenbergLedger::is_live(std::string_view mode) const {
    return std::find(live_.begin(), live_.end(), mode) != live_.end();
}

Eigen::Index HeisenbergLedger::row_index(const QuadratureRef& ref) const {
    auto it = std::find(live_.begin(), live_.end(), ref.mode);
    if (it == live_.end()) throw InvalidArgument("ledger row '" + ref.mode + "' is not live");
    return static_cast<Eigen::Index>(2 * (it - live_.begin()) + quadrature_offset(ref.quad));
}

Eigen::Index HeisenbergLedger::basis_index(const QuadratureRef& ref) const {
    auto it = std::find(basis_.modes.begin(), basis_.modes.end(), ref.mode);
    if (it == basis_.modes.end()) throw InvalidArgument("unknown basis mode '" + ref.mode + "'");
    return static_cast<Eigen::Index>(2 * (it - basis_.modes.begin()) + quadrature_offset(ref.quad));
}

Eigen::VectorXd HeisenbergLedger::row(const QuadratureRef& ref) const { return rows_.row(row_index(ref)).transpose(); }

double HeisenbergLedger::offset(const QuadratureRef& ref) const { return offsets_(row_index(ref)); }

double HeisenbergLedger::row_coefficient(const QuadratureRef& row, const QuadratureRef& basis_entry) const {
    return rows_(row_index(row), basis_index(basis_entry));
}

double HeisenbergLedger::symplectic_product(const QuadratureRef& a, const QuadratureRef& b) const {
    const Eigen::MatrixXd omega = symplectic_form(basis_.modes.size());
    return rows_.row(row_index(a)).dot(omega * rows_.row(row_index(b)).transpose());
}

double HeisenbergLedger::commutator_residual() const {
    const Eigen::MatrixXd omega = symplectic_form(basis_.modes.size());
    const Eigen::MatrixXd products = rows_ * omega * rows_.transpose();
    return (products - symplectic_form(live_.size())).cwiseAbs().maxCoeff();
}

HeisenbergLedger HeisenbergLedger::apply(const SymplecticOp& op, std::span<const ModeLabel> targets) const {
    if (targets.size() != op.arity()) throw InvalidArgument("ledger apply: target count does not match op arity");
    std::set<std::string_view> uniq(targets.begin(), targets.end());
    if (uniq.size() != targets.size()) throw InvalidArgument("ledger apply: repeated target");

    std::vector<Eigen::Index> idx;
    for (const auto& t : targets) {
        idx.push_back(row_index({t, Quadrature::X}));
        idx.push_back(row_index({t, Quadrature::P}));
    }
    const auto k = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixXd block(k, rows_.cols());
    Eigen::VectorXd off(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        block.row(i) = rows_.row(idx[static_cast<std::size_t>(i)]);
        off(i) = offsets_(idx[static_cast<std::size_t>(i)]);
    }
    const Eigen::MatrixXd mixed = op.matrix() * block;
    const Eigen::VectorXd mixed_off = op.matrix() * off;

    HeisenbergLedger out = *this;
    for (Eigen::Index i = 0; i < k; ++i) {
        out.rows_.row(idx[static_cast<std::size_t>(i)]) = mixed.row(i);
        out.offsets_(idx[static_cast<std::size_t>(i)]) = mixed_off(i);
    }
    return out;
}

HeisenbergLedger HeisenbergLedger::apply(const SymplecticOp& op, std::initializer_list<ModeLabel> targets) const {
    return apply(op, std::span<const ModeLabel>(targets.begin(), targets.size()));
}

HeisenbergLedger HeisenbergLedger::displace(std::string_view mode, double dx, double dp) const {
    if (!std::isfinite(dx) || !std::isfinite(dp)) throw InvalidArgument("displacement must be finite");
    HeisenbergLedger out = *this;
    const ModeLabel m(mode);
    out.offsets_(row_index({m, Quadrature::X})) += dx;
    out.offsets_(row_index({m, Quadrature::P})) += dp;
    return out;
}

HeisenbergLedger HeisenbergLedger::relabeled(std::string_view from, ModeLabel to) const {
    auto it = std::find(live_.begin(), live_.end(), from);
    if (it == live_.end()) throw InvalidArgument("ledger row '" + std::string(from) + "' is not live");
    if (is_live(to)) throw InvalidArgument("ledger already has live mode '" + to + "'");
    HeisenbergLedger out = *this;
    out.live_[static_cast<std::size_t>(it - live_.begin())] = std::move(to);
    return out;
}

HeisenbergLedger HeisenbergLedger::measure_feedforward(std::span<const QuadratureRef> measured,
                                                       std::span<const QuadratureRef> targets,
                                                       const Eigen::MatrixXd& gains) const {
    if (gains.rows() != static_cast<Eigen::Index>(targets.size()) ||
        gains.cols() != static_cast<Eigen::Index>(measured.size())) {
        throw InvalidArgument("feedforward gain matrix must be targets x measured");
    }
    if (!gains.allFinite()) throw InvalidArgument("feedforward gains must be finite");

    std::set<std::string_view> measured_modes;
    for (const auto& m : measured) {
        (void)row_index(m);  // throws for a dead row
        measured_modes.insert(m.mode);
    }
    for (const auto& t : targets) {
        (void)row_index(t);
        if (measured_modes.contains(t.mode)) {
            throw InvalidArgument("feedforward target '" + t.mode + "' is also measured");
        }
    }
    for (std::size_t i = 0; i < measured.size(); ++i) {
        for (std::size_t j = i + 1; j < measured.size(); ++j) {
            const double product = symplectic_product(measured[i], measured[j]);
            if (std::abs(product) > kCommutatorTolerance) {
                throw InvalidArgument("measured quadratures " + row_key(measured[i].mode, measured[i].quad) + " and " +
                                      row_key(measured[j].mode, measured[j].quad) + " do not commute");
            }
        }
    }

    Eigen::MatrixXd rows = rows_;
    Eigen::VectorXd offsets = offsets_;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto ti = row_index(targets[t]);
        for (std::size_t m = 0; m < measured.size(); ++m) {
            const double g = gains(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(m));
            const auto mi = row_index(measured[m]);
            rows.row(ti) += g * rows_.row(mi);
            offsets(ti) += g * offsets_(mi);
        }
    }

    HeisenbergLedger out = *this;
    out.live_.clear();
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < live_.size(); ++i) {
        if (measured_modes.contains(live_[i])) continue;
        out.live_.push_back(live_[i]);
        keep.push_back(static_cast<Eigen::Index>(2 * i));
        keep.push_back(static_cast<Eigen::Index>(2 * i + 1));
    }
    out.rows_.resize(static_cast<Eigen::Index>(keep.size()), rows_.cols());
    out.offsets_.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.rows_.row(static_cast<Eigen::Index>(i)) = rows.row(keep[i]);
        out.offsets_(static_cast<Eigen::Index>(i)) = offsets(keep[i]);
    }
    return out;
}

Eigen::VectorXd HeisenbergLedger::combination_vector(const QuadratureCombination& combo, double* offset) const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(rows_.cols());
    double off = 0.0;
    for (const auto& t : combo.terms()) {
        const auto i = row_index({t.mode, t.quad});
        c += t.coeff * rows_.row(i).transpose();
        off += t.coeff * offsets_(i);
    }
    if (offset != nullptr) *offset = off;
    return c;
}

double HeisenbergLedger::variance(const QuadratureCombination& combo) const {
    const Eigen::VectorXd c = combination_vector(combo, nullptr);
    return c.dot(basis_.cov * c);
}

double HeisenbergLedger::mean(const QuadratureCombination& combo) const {
    double off = 0.0;
    const Eigen::VectorXd c = combination_vector(combo, &off);
    return c.dot(basis_.mean) + off;
}

PhysicalityReport HeisenbergLedger::physicality(std::span<const ModeLabel> labels) const {
    const auto k = static_cast<Eigen::Index>(2 * labels.size());
    Eigen::MatrixXd c(k, rows_.cols());
    for (Eigen::Index i = 0; i < k; i += 2) {
        const ModeLabel& label = labels[static_cast<std::size_t>(i / 2)];
        c.row(i) = rows_.row(row_index({label, Quadrature::X}));
        c.row(i + 1) = rows_.row(row_index({label, Quadrature::P}));
    }
    PhysicalityReport report;
    if (k == 0) return report;
    const Eigen::MatrixXcd g = c.cast<std::complex<double>>() * basis_.factor;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
    const double sigma_min = svd.singularValues().tail(1)(0);
    const Eigen::MatrixXd defect = c * symplectic_form(basis_.modes.size()) * c.transpose() -
                                   symplectic_form(labels.size());
    report.min_eigenvalue = sigma_min * sigma_min - 0.5 * defect.norm();
    report.physical = report.min_eigenvalue >= kPhysicalityFloor;
    return report;
}

GaussianState HeisenbergLedger::to_state(std::span<const ModeLabel> labels) const {
    const auto n = static_cast<Eigen::Index>(2 * labels.size());
    Eigen::MatrixXd c(n, rows_.cols());
    Eigen::VectorXd off(n);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        for (auto q : {Quadrature::X, Quadrature::P}) {
            const auto dst = static_cast<Eigen::Index>(2 * i + quadrature_offset(q));
            const auto src = row_index({labels[i], q});
            c.row(dst) = rows_.row(src);
            off(dst) = offsets_(src);
        }
    }
    Eigen::MatrixXd cov = c * basis_.cov * c.transpose();
    cov = (0.5 * (cov + cov.transpose())).eval();
    Eigen::VectorXd mean = c * basis_.mean + off;
    return GaussianState({labels.begin(), labels.end()}, std::move(mean), std::move(cov));
}

Json HeisenbergLedger::to_json() const {
    Json doc = Json::object();
    Json basis = Json::array();
    for (const auto& m : basis_.modes) {
        basis.push_back(row_key(m, Quadrature::X));
        basis.push_back(row_key(m, Quadrature::P));
    }
    doc["basis"] = std::move(basis);
    Json rows = Json::object();
    Json offsets = Json::object();
    for (std::size_t i = 0; i < live_.size(); ++i) {
        for (auto q : {Quadrature::X, Quadrature::P}) {
            const auto r = static_cast<Eigen::Index>(2 * i + quadrature_offset(q));
            Json coeffs = Json::array();
            for (Eigen::Index j = 0; j < rows_.cols(); ++j) coeffs.push_back(rows_(r, j));
            rows[row_key(live_[i], q)] = std::move(coeffs);
            offsets[row_key(live_[i], q)] = offsets_(r);
        }
    }
    doc["rows"] = std::move(rows);
    doc["offsets"] = std::move(offsets);
    return doc;
}

}  // namespace nopa
