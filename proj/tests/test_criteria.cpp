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

#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "nopa/criteria.hpp"
#include "nopa/error.hpp"
#include "nopa/protocol.hpp"

namespace nopa {
namespace {

GaussianState vacuum4() { return vacuum_state(std::vector<ModeLabel>(kNopaModes.begin(), kNopaModes.end())); }

TEST(NopaCriteria, BoundsAreTwo) {
    for (double R : {0.0, 0.1, 0.5, 0.99, 1.0}) {
        const auto set = nopa_criteria(R);
        ASSERT_EQ(set.size(), 4u);
        for (const auto& c : set) EXPECT_NEAR(c.bound(), 2.0, 1e-15) << c.label;
    }
}

TEST(NopaCriteria, BoundsAreExactlyTwoOnTenthGrid) {
    for (int k = 0; k <= 10; ++k) {
        for (const auto& c : nopa_criteria(k / 10.0)) EXPECT_EQ(c.bound(), 2.0) << c.label << " R=" << k / 10.0;
    }
}

TEST(NopaCriteria, ShapeAtZeroReflectivity) {
    const auto set = nopa_criteria(0.0);
    // First combination reduces to X_a1 + X_a3.
    const auto& t = set[0].combo.terms();
    double a1 = 0, a3 = 0, other = 0;
    for (const auto& term : t) {
        if (term.mode == "a1" && term.quad == Quadrature::X) a1 = term.coeff;
        else if (term.mode == "a3" && term.quad == Quadrature::X) a3 = term.coeff;
        else other += std::abs(term.coeff);
    }
    EXPECT_EQ(a1, 1.0);
    EXPECT_EQ(a3, 1.0);
    EXPECT_EQ(other, 0.0);
    int xs = 0, ps = 0;
    for (const auto& c : set) {
        const Quadrature q = c.combo.terms().front().quad;
        for (const auto& term : c.combo.terms()) EXPECT_EQ(term.quad, q);
        (q == Quadrature::X ? xs : ps)++;
    }
    EXPECT_EQ(xs, 2);
    EXPECT_EQ(ps, 2);
    EXPECT_THROW(nopa_criteria(1.5), InvalidArgument);
}

TEST(Evaluate, EntangledResourcePasses) {
    for (double R : {0.0, 0.3, 0.5, 0.9}) {
        const FourModeResources res = build_four_mode_state(1.0, 1.0, R);
        const CriterionReport rep = evaluate(res.state, nopa_criteria(R));
        EXPECT_TRUE(rep.all_passed);
        for (const auto& r : rep.results) {
            EXPECT_NEAR(r.variance, 2 * std::exp(-2.0), 1e-10);
            EXPECT_NEAR(r.margin, 2.0 - r.variance, 1e-15);
        }
    }
}

TEST(Evaluate, UnsqueezedFails) {
    const CriterionReport rep = evaluate(build_four_mode_state(0, 0, 0.4).state, nopa_criteria(0.4));
    EXPECT_FALSE(rep.all_passed);
    for (const auto& r : rep.results) {
        EXPECT_NEAR(r.variance, 2.0, 1e-12);
        EXPECT_FALSE(r.passed);
    }
}

TEST(Evaluate, OnlyAPairSqueezed) {
    const double R = 0.35;
    const CriterionReport rep = evaluate(build_four_mode_state(1.0, 0.0, R).ledger, nopa_criteria(R));
    ASSERT_EQ(rep.results.size(), 4u);
    // Order: x1, x2, p1, p2; criteria 1 and 3 use the a-pair.
    EXPECT_TRUE(rep.results[0].passed);
    EXPECT_FALSE(rep.results[1].passed);
    EXPECT_TRUE(rep.results[2].passed);
    EXPECT_FALSE(rep.results[3].passed);
    EXPECT_NEAR(rep.results[0].variance, 2 * std::exp(-2.0), 1e-12);
    EXPECT_NEAR(rep.results[1].variance, 2.0, 1e-12);
}

TEST(Evaluate, EnginesAgree) {
    for (double R : {0.1, 0.45, 0.8}) {
        const FourModeResources res = build_four_mode_state(0.7, 1.9, R);
        const auto set = nopa_criteria(R);
        const CriterionReport a = evaluate(res.state, set);
        const CriterionReport b = evaluate(res.ledger, set);
        for (std::size_t k = 0; k < set.size(); ++k) {
            EXPECT_NEAR(a.results[k].variance, b.results[k].variance, 1e-10);
        }
    }
}

TEST(Evaluate, ClosedFormAcrossGrid) {
    for (int k = 0; k <= 10; ++k) {
        const double R = k / 10.0;
        for (double r : {0.0, 0.5, 1.0, 2.0}) {
            // R = 1 has no finite gain but the resource state is still defined.
            const FourModeResources res = build_four_mode_state(r, r, R);
            const CriterionReport rep = evaluate(res.ledger, nopa_criteria(R));
            for (const auto& x : rep.results) EXPECT_NEAR(x.variance, 2 * std::exp(-2 * r), 1e-10);
            EXPECT_EQ(rep.all_passed, r > 0.0);
        }
    }
}

TEST(Evaluate, MarginIsContinuousInReflectivity) {
    double prev = evaluate(build_four_mode_state(0.8, 0.8, 0.0).ledger, nopa_criteria(0.0)).results[0].margin;
    for (int k = 1; k <= 100; ++k) {
        const double R = k / 100.0;
        const double m = evaluate(build_four_mode_state(0.8, 0.8, R).ledger, nopa_criteria(R)).results[0].margin;
        EXPECT_NEAR(m, prev, 1e-10);
        prev = m;
    }
}

TEST(Evaluate, UnknownModeIsAnError) {
    const FourModeLabels other = {"w", "x", "y", "z"};
    EXPECT_THROW(evaluate(vacuum4(), nopa_criteria(0.5, other)), InvalidArgument);
}

TEST(ClusterCriteria, BoundsAndVacuum) {
    const auto set = cluster_criteria();
    ASSERT_EQ(set.size(), 4u);
    const double expected[] = {3, 2, 2, 3};
    for (std::size_t k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(set[k].bound(), expected[k]);
    const CriterionReport rep = evaluate(vacuum4(), set);
    EXPECT_FALSE(rep.all_passed);
    for (const auto& r : rep.results) EXPECT_NEAR(r.variance, r.bound, 1e-12);
}

TEST(GhzCriteria, CountAndBounds) {
    const auto set = ghz_criteria();
    ASSERT_EQ(set.size(), 7u);
    EXPECT_DOUBLE_EQ(set[0].bound(), 4.0);
    for (std::size_t k = 1; k < set.size(); ++k) EXPECT_DOUBLE_EQ(set[k].bound(), 2.0);
    const CriterionReport rep = evaluate(vacuum4(), set);
    for (const auto& r : rep.results) {
        EXPECT_NEAR(r.variance, r.bound, 1e-12);
        EXPECT_FALSE(r.passed);
    }
}

TEST(Bounds, InvariantUnderSignFlipsAndRelabeling) {
    for (const auto& c : nopa_criteria(0.3)) {
        std::vector<QuadratureTerm> flipped = c.combo.terms();
        for (auto& t : flipped) t.coeff = -t.coeff;
        EXPECT_DOUBLE_EQ(QuadratureCombination(flipped).shot_noise_bound(), c.bound());
    }
    const FourModeLabels perm = {"a4", "a2", "a1", "a3"};
    const auto a = cluster_criteria();
    const auto b = cluster_criteria(perm);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_DOUBLE_EQ(a[k].bound(), b[k].bound());
}

TEST(Contrast, ModeCounts) {
    const ContrastReport c = criteria_contrast(0.5);
    EXPECT_EQ(c.nopa_counts, (std::vector<std::size_t>{3, 3, 3, 3}));
    EXPECT_TRUE(c.nopa_all_three_mode);
    EXPECT_NE(std::find(c.cluster_counts.begin(), c.cluster_counts.end(), 2u), c.cluster_counts.end());
    EXPECT_TRUE(c.cluster_has_two_mode);
    EXPECT_EQ(c.ghz_counts.size(), 7u);
    EXPECT_EQ(c.ghz_counts.back(), 2u);
    EXPECT_TRUE(c.ghz_has_two_mode);
}

TEST(Report, JsonAndTable) {
    const CriterionReport rep = evaluate(build_four_mode_state(1, 1, 0.5).state, nopa_criteria(0.5));
    const Json j = rep.to_json();
    EXPECT_EQ(j["criteria"].size(), 4u);
    EXPECT_TRUE(j["all_pass"].get<bool>());
    const std::string t = rep.to_table();
    EXPECT_NE(t.find("nopa_x1"), std::string::npos);
    EXPECT_NE(t.find("0.270671"), std::string::npos);
}

}  // namespace
}  // namespace nopa
