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

#include "nopa/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "nopa/error.hpp"

namespace nopa {

std::vector<Criterion> nopa_criteria(double reflectivity, const FourModeLabels& m) {
    if (!(reflectivity >= 0.0 && reflectivity <= 1.0)) throw InvalidArgument("reflectivity must lie in [0, 1]");
    const double r = std::sqrt(reflectivity);
    const double t = std::sqrt(1.0 - reflectivity);
    using Q = Quadrature;
    return {
        {"nopa_x1", QuadratureCombination({{m[0], Q::X, 1.0}, {m[1], Q::X, -r}, {m[2], Q::X, t}})},
        {"nopa_x2", QuadratureCombination({{m[1], Q::X, t}, {m[2], Q::X, r}, {m[3], Q::X, 1.0}})},
        {"nopa_p1", QuadratureCombination({{m[0], Q::P, 1.0}, {m[1], Q::P, r}, {m[2], Q::P, -t}})},
        {"nopa_p2", QuadratureCombination({{m[1], Q::P, t}, {m[2], Q::P, r}, {m[3], Q::P, -1.0}})},
    };
}

std::vector<Criterion> cluster_criteria(const FourModeLabels& m) {
    using Q = Quadrature;
    return {
        {"cluster_x123", QuadratureCombination({{m[0], Q::X, 1.0}, {m[1], Q::X, 1.0}, {m[2], Q::X, 1.0}})},
        {"cluster_x34", QuadratureCombination({{m[2], Q::X, 1.0}, {m[3], Q::X, 1.0}})},
        {"cluster_p12", QuadratureCombination({{m[0], Q::P, 1.0}, {m[1], Q::P, -1.0}})},
        {"cluster_p234", QuadratureCombination({{m[1], Q::P, 1.0}, {m[2], Q::P, -1.0}, {m[3], Q::P, 1.0}})},
    };
}

std::vector<Criterion> ghz_criteria(const FourModeLabels& m) {
    using Q = Quadrature;
    std::vector<Criterion> out;
    out.push_back({"ghz_x_total", QuadratureCombination({{m[0], Q::X, 1.0},
                                                         {m[1], Q::X, 1.0},
                                                         {m[2], Q::X, 1.0},
                                                         {m[3], Q::X, 1.0}})});
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            out.push_back({"ghz_p" + std::to_string(i + 1) + std::to_string(j + 1),
                           QuadratureCombination({{m[i], Q::P, 1.0}, {m[j], Q::P, -1.0}})});
        }
    }
    return out;
}

namespace {

template <typename Variance>
CriterionReport evaluate_with(std::span<const Criterion> criteria, Variance&& variance) {
    CriterionReport report;
    report.all_passed = !criteria.empty();
    for (const auto& c : criteria) {
        CriterionResult r;
        r.label = c.label;
        r.expression = c.combo.to_string();
        r.variance = variance(c.combo);
        r.bound = c.bound();
        r.margin = r.bound - r.variance;
        r.passed = r.variance < r.bound - kCriterionSlack;
        report.all_passed = report.all_passed && r.passed;
        report.results.push_back(std::move(r));
    }
    return report;
}

}  // namespace

CriterionReport evaluate(const GaussianState& state, std::span<const Criterion> criteria) {
    return evaluate_with(criteria, [&](const QuadratureCombination& c) { return combination_variance(state, c); });
}

CriterionReport evaluate(const HeisenbergLedger& ledger, std::span<const Criterion> criteria) {
    return evaluate_with(criteria, [&](const QuadratureCombination& c) { return ledger.variance(c); });
}

Json CriterionReport::to_json() const {
    Json doc = Json::object();
    Json rows = Json::array();
    for (const auto& r : results) {
        Json j = Json::object();
        j["label"] = r.label;
        j["expression"] = r.expression;
        j["variance"] = r.variance;
        j["bound"] = r.bound;
        j["margin"] = r.margin;
        j["pass"] = r.passed;
        rows.push_back(std::move(j));
    }
    doc["criteria"] = std::move(rows);
    doc["all_pass"] = all_passed;
    return doc;
}

std::string CriterionReport::to_table() const {
    std::size_t label_w = 9;
    std::size_t expr_w = 10;
    for (const auto& r : results) {
        label_w = std::max(label_w, r.label.size());
        expr_w = std::max(expr_w, r.expression.size());
    }
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-*s  %-*s  %12s  %12s  %12s  %s\n", static_cast<int>(label_w), "criterion",
                  static_cast<int>(expr_w), "expression", "variance", "bound", "margin", "result");
    os << buf;
    for (const auto& r : results) {
        std::snprintf(buf, sizeof buf, "%-*s  %-*s  %12.6g  %12.6g  %12.6g  %s\n", static_cast<int>(label_w),
                      r.label.c_str(), static_cast<int>(expr_w), r.expression.c_str(), r.variance, r.bound, r.margin,
                      r.passed ? "pass" : "FAIL");
        os << buf;
    }
    os << "overall: " << (all_passed ? "pass" : "FAIL") << "\n";
    return os.str();
}

ContrastReport criteria_contrast(double reflectivity) {
    if (!(reflectivity > 0.0 && reflectivity < 1.0)) throw InvalidArgument("contrast needs reflectivity in (0, 1)");
    ContrastReport report;
    auto counts = [](const std::vector<Criterion>& cs) {
        std::vector<std::size_t> out;
        for (const auto& c : cs) out.push_back(c.combo.mode_count());
        return out;
    };
    report.nopa_counts = counts(nopa_criteria(reflectivity));
    report.cluster_counts = counts(cluster_criteria());
    report.ghz_counts = counts(ghz_criteria());
    auto has = [](const std::vector<std::size_t>& v, std::size_t n) { return std::find(v.begin(), v.end(), n) != v.end(); };
    report.nopa_all_three_mode =
        std::all_of(report.nopa_counts.begin(), report.nopa_counts.end(), [](std::size_t n) { return n == 3; });
    report.cluster_has_two_mode = has(report.cluster_counts, 2);
    report.ghz_has_two_mode = has(report.ghz_counts, 2);
    return report;
}

}  // namespace nopa
