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

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nopa/criteria.hpp"
#include "nopa/error.hpp"
#include "nopa/protocol.hpp"
#include "reference_tables.hpp"

namespace nopa {
namespace {

using testing::reference_table;

ProtocolConfig config_for(double R, double r1, double r2) {
    ProtocolConfig c;
    c.reflectivity = R;
    c.r1 = r1;
    c.r2 = r2;
    return c;
}

TEST(NominalGains, Substitution) {
    const FeedforwardGains g0 = nominal_gains(0.0);
    EXPECT_NEAR(g0.x1_a3, std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(g0.x2_a3, 0.0, 1e-15);
    EXPECT_NEAR(g0.x2_a4, std::sqrt(2.0), 1e-15);
    const FeedforwardGains g = nominal_gains(0.5);
    EXPECT_NEAR(g.x1_a3, 2.0, 1e-15);
    EXPECT_NEAR(g.x2_a3, -std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(g.x1_a4, -std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(g.x2_a4, 2.0, 1e-15);
    for (int k = 0; k < 10; ++k) EXPECT_TRUE(nominal_gains(k / 10.0).has_reference_sign_pattern());
    EXPECT_THROW(nominal_gains(1.0), InvalidArgument);
    EXPECT_THROW(nominal_gains(-0.1), InvalidArgument);
}

TEST(DisplacementSignal, ZeroUnitAndLinear) {
    const FeedforwardGains g = nominal_gains(0.5);
    const DisplacementSignal z = displacement_signal({}, g);
    EXPECT_EQ(z.x_a3, 0.0);
    EXPECT_EQ(z.p_a4, 0.0);
    const DisplacementSignal u = displacement_signal({1, 0, 0, 0}, g);
    EXPECT_NEAR(u.x_a3, 2.0, 1e-15);
    EXPECT_NEAR(u.p_a3, 0.0, 1e-15);
    EXPECT_NEAR(u.x_a4, -std::sqrt(2.0), 1e-15);
    const MeasurementRecord rec{0.3, -1.2, 2.5, 0.7};
    const MeasurementRecord scaled{-2.0 * 0.3, -2.0 * -1.2, -2.0 * 2.5, -2.0 * 0.7};
    const DisplacementSignal a = displacement_signal(rec, g);
    const DisplacementSignal b = displacement_signal(scaled, g);
    EXPECT_NEAR(b.x_a3, -2.0 * a.x_a3, 1e-14);
    EXPECT_NEAR(b.p_a3, -2.0 * a.p_a3, 1e-14);
    EXPECT_NEAR(b.x_a4, -2.0 * a.x_a4, 1e-14);
    EXPECT_NEAR(b.p_a4, -2.0 * a.p_a4, 1e-14);
}

TEST(ProtocolConfig, Validation) {
    EXPECT_THROW(config_for(1.0, 1, 1).validate(), InvalidArgument);
    EXPECT_THROW(config_for(1.0 - 1e-10, 1, 1).validate(), InvalidArgument);
    EXPECT_THROW(config_for(-0.1, 1, 1).validate(), InvalidArgument);
    EXPECT_THROW(config_for(0.5, -1, 1).validate(), InvalidArgument);
    EXPECT_THROW(config_for(0.5, 1, NAN).validate(), InvalidArgument);
    EXPECT_NO_THROW(config_for(0.0, 0, 0).validate());
    EXPECT_DOUBLE_EQ(config_for(0.75, 1, 1).gain(), 4.0);
}

TEST(IdealNopa, UnitGainIsIdentity) {
    EXPECT_TRUE(ideal_nopa_map(1.0).matrix().isApprox(Eigen::MatrixXd::Identity(4, 4), 0.0));
    EXPECT_THROW(ideal_nopa_map(0.5), InvalidArgument);
}

TEST(IdealNopa, VacuumVarianceAndCommutators) {
    const GaussianState out = ideal_nopa(2.0, vacuum_state(std::vector<ModeLabel>{"s", "i"}), "s", "i");
    // G * 1 + (G - 1) * 1
    EXPECT_NEAR(out.cov()(0, 0), 3.0, 1e-14);
    EXPECT_NEAR(out.cov()(3, 3), 3.0, 1e-14);
    for (double G : {1.0, 1.5, 4.0, 20.0}) EXPECT_LE(ideal_nopa_map(G).symplectic_residual(), 1e-12);
}

TEST(FourModeState, VacuumWhenUnsqueezed) {
    for (double R : {0.0, 0.3, 0.9}) {
        const FourModeResources res = build_four_mode_state(0.0, 0.0, R);
        EXPECT_LE((res.state.cov() - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(FourModeState, ThreeModeCombinationsCollapse) {
    for (double R : {0.0, 0.25, 0.6, 0.95}) {
        for (double r1 : {0.0, 0.7, 1.5}) {
            const double r2 = 2.0 - r1;
            const FourModeResources res = build_four_mode_state(r1, r2, R);
            const QuadratureCombination c1({{"a1", Quadrature::X, 1.0},
                                            {"a2", Quadrature::X, -std::sqrt(R)},
                                            {"a3", Quadrature::X, std::sqrt(1 - R)}});
            const QuadratureCombination c2({{"a2", Quadrature::X, std::sqrt(1 - R)},
                                            {"a3", Quadrature::X, std::sqrt(R)},
                                            {"a4", Quadrature::X, 1.0}});
            EXPECT_NEAR(res.ledger.variance(c1), 2 * std::exp(-2 * r1), 1e-12);
            EXPECT_NEAR(res.ledger.variance(c2), 2 * std::exp(-2 * r2), 1e-12);
            EXPECT_NEAR(combination_variance(res.state, c1), 2 * std::exp(-2 * r1), 1e-10);
            EXPECT_NEAR(combination_variance(res.state, c2), 2 * std::exp(-2 * r2), 1e-10);
        }
    }
}

TEST(TransferReport, MatchesHandExpandedTable) {
    for (int k = 0; k <= 9; ++k) {
        const double R = k / 10.0;
        const TransferReport rep = transfer_report(config_for(R, 1.0, 1.0));
        const auto table = reference_table(R);
        for (std::size_t o = 0; o < rep.outputs.size(); ++o) {
            for (std::size_t b = 0; b < rep.basis.size(); ++b) {
                const std::string key = rep.outputs[o] + "|" + rep.basis[b];
                const auto it = table.find(key);
                const double expected = it == table.end() ? 0.0 : it->second;
                EXPECT_NEAR(rep.coefficients(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(b)), expected, 1e-12)
                    << key << " R=" << R;
            }
        }
    }
}

TEST(TransferReport, SpotValues) {
    const TransferReport half = transfer_report(config_for(0.5, 1, 1));
    EXPECT_NEAR(half.at("out_s.X", "in_s.X"), std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(half.at("out_i.X", "in_s.X"), 1.0, 1e-12);
    for (double R : {0.0, 0.4, 0.8}) {
        EXPECT_NEAR(transfer_report(config_for(R, 1, 1)).at("out_i.X", "bEPR1.X"), -1.0, 1e-12);
    }
    const TransferReport zero = transfer_report(config_for(0.0, 1, 1));
    EXPECT_NEAR(zero.at("out_s.X", "in_s.X"), 1.0, 1e-12);
    EXPECT_NEAR(zero.at("out_s.X", "in_i.X"), 0.0, 1e-12);
    EXPECT_NEAR(zero.at("out_s.P", "aEPR1.P"), -1.0, 1e-12);
    EXPECT_NEAR(zero.at("out_s.P", "aEPR2.P"), 1.0, 1e-12);
    EXPECT_THROW((void)zero.at("out_s.X", "nope.X"), InvalidArgument);
}

TEST(Outputs, CommutatorsPreservedAtFiniteSqueezing) {
    for (double R : {0.0, 0.3, 0.7}) {
        const RunResult res = run_protocol([&] {
            auto c = config_for(R, 0.4, 1.3);
            c.shots = 2;
            return c;
        }());
        const HeisenbergLedger& l = res.ledger;
        EXPECT_NEAR(l.symplectic_product({"out_s", Quadrature::X}, {"out_s", Quadrature::P}), 2.0, 1e-12);
        EXPECT_NEAR(l.symplectic_product({"out_i", Quadrature::X}, {"out_i", Quadrature::P}), 2.0, 1e-12);
        EXPECT_NEAR(l.symplectic_product({"out_s", Quadrature::X}, {"out_i", Quadrature::P}), 0.0, 1e-12);
        EXPECT_NEAR(l.symplectic_product({"out_s", Quadrature::X}, {"out_i", Quadrature::X}), 0.0, 1e-12);
        EXPECT_LE(l.commutator_residual(), 1e-12);
    }
}

TEST(Outputs, CoherentMeanTransfer) {
    for (double R : {0.0, 0.5, 0.8}) {
        auto c = config_for(R, 0.9, 0.9);
        c.input_s = InputSpec::coherent(1.7, -0.6);
        const GaussianState out = analytic_output(c);
        const double G = 1.0 / (1.0 - R);
        EXPECT_NEAR(out.mean()(0), std::sqrt(G) * 1.7, 1e-12);
        EXPECT_NEAR(out.mean()(1), std::sqrt(G) * -0.6, 1e-12);
        EXPECT_NEAR(out.mean()(2), std::sqrt(G - 1) * 1.7, 1e-12);
        EXPECT_NEAR(out.mean()(3), -std::sqrt(G - 1) * -0.6, 1e-12);
    }
}

TEST(AddedNoise, ClosedFormExamples) {
    const ExcessNoise n = added_noise(1.0, 0.5, 0.5);
    EXPECT_NEAR(n.idler_x, 2 * std::exp(-1.0) + 2 * std::exp(-2.0), 1e-12);
    EXPECT_NEAR(n.idler_x, 1.0064294488161101, 1e-12);
    const ExcessNoise z = added_noise(0.0, 0.0, 0.5);
    EXPECT_NEAR(z.signal_x, 4.0, 1e-15);
    const ExcessNoise inf = added_noise(30.0, 30.0, 0.5);
    EXPECT_LT(inf.signal_x + inf.idler_x, 1e-24);
}

TEST(AddedNoise, LedgerVarianceAtZeroSqueezing) {
    const GaussianState out = analytic_output(config_for(0.5, 0.0, 0.0));
    EXPECT_NEAR(out.cov()(0, 0), 7.0, 1e-12);
}

TEST(AddedNoise, LedgerMinusIdealEqualsClosedForm) {
    for (double R : {0.0, 0.2, 0.5, 0.8}) {
        for (double r1 : {0.0, 1.0, 2.5}) {
            for (double r2 : {0.0, 0.5, 3.0}) {
                const ProtocolConfig c = config_for(R, r1, r2);
                const Eigen::MatrixXd diff = analytic_output(c).cov() - ideal_output(c).cov();
                const ExcessNoise n = added_noise(r1, r2, R);
                EXPECT_NEAR(diff(0, 0), n.signal_x, 1e-10);
                EXPECT_NEAR(diff(1, 1), n.signal_p, 1e-10);
                EXPECT_NEAR(diff(2, 2), n.idler_x, 1e-10);
                EXPECT_NEAR(diff(3, 3), n.idler_p, 1e-10);
                const SweepRow row = sweep_point(c);
                EXPECT_NEAR(row.excess_xs, n.signal_x, 1e-10);
                EXPECT_NEAR(row.excess_xi, n.idler_x, 1e-10);
            }
        }
    }
}

TEST(AddedNoise, DecaysWithSqueezing) {
    for (double R : {0.2, 0.5}) {
        const double G = 1.0 / (1.0 - R);
        for (double r : {1.0, 2.0, 3.0, 4.0}) {
            const ProtocolConfig c = config_for(R, r, r);
            const double gap = (analytic_output(c).cov() - ideal_output(c).cov()).cwiseAbs().maxCoeff();
            EXPECT_LE(gap, 2 * G * std::exp(-2 * r) + 1e-12);
        }
    }
}

TEST(RunProtocol, SameSeedSameShots) {
    auto c = config_for(0.3, 0.8, 1.1);
    c.shots = 25;
    c.seed = 99;
    const RunResult a = run_protocol(c);
    const RunResult b = run_protocol(c);
    ASSERT_EQ(a.shots.size(), 25u);
    for (std::size_t k = 0; k < a.shots.size(); ++k) {
        EXPECT_EQ(a.shots[k].sample, b.shots[k].sample);
        EXPECT_EQ(a.shots[k].measurement.x1, b.shots[k].measurement.x1);
    }
    c.seed = 100;
    EXPECT_NE(run_protocol(c).shots[0].sample, a.shots[0].sample);
}

// Law of total variance: the unconditional (ledger) covariance exceeds the
// per-shot conditional covariance by the scatter of the conditional means.
TEST(RunProtocol, ConditionalCovarianceBoundedByLedger) {
    auto c = config_for(0.4, 0.6, 1.2);
    c.shots = 20000;
    const RunResult r = run_protocol(c);
    const Eigen::Matrix4d gap = r.analytic_output.cov() - r.conditional_cov;
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d>(gap).eigenvalues().minCoeff(), -1e-10);
    MomentAccumulator means;
    for (const auto& s : r.shots) means.add(s.output_mean);
    EXPECT_LE((means.cov() - gap).cwiseAbs().maxCoeff(), 0.1 * gap.cwiseAbs().maxCoeff());
    EXPECT_GE(r.min_physicality_eigenvalue, kPhysicalityFloor);
    EXPECT_GE(r.min_ledger_physicality, kPhysicalityFloor);
}

TEST(RunProtocol, ObserverSeesPhysicalIntermediates) {
    auto c = config_for(0.6, 1.5, 0.5);
    c.shots = 1;
    int seen = 0;
    (void)run_protocol(c, [&](const GaussianState& s) {
        ++seen;
        EXPECT_TRUE(check_physicality(s).physical);
    });
    EXPECT_GE(seen, 4);
}

TEST(RunProtocol, GainOverrideChangesNoise) {
    auto c = config_for(0.5, 2.0, 2.0);
    const double good = analytic_output(c).cov()(0, 0);
    FeedforwardGains g = nominal_gains(0.5);
    g.x1_a3 *= 1.2;
    c.gains = g;
    EXPECT_GT(analytic_output(c).cov()(0, 0), good + 0.1);
}

TEST(MomentComparison, ZScores) {
    SampledMoments s;
    s.samples = 100;
    s.mean = Eigen::Vector4d(0.1, 0, 0, 0);
    s.cov = Eigen::Matrix4d::Identity();
    const GaussianState exact(std::vector<ModeLabel>{"a", "b"}, Eigen::VectorXd::Zero(4), Eigen::MatrixXd::Identity(4, 4));
    const MomentComparison cmp = compare_moments(s, exact);
    // se = sqrt(1/100) = 0.1
    EXPECT_NEAR(cmp.z_mean(0), 1.0, 1e-12);
    EXPECT_NEAR(cmp.max_abs_z, 1.0, 1e-12);
}

TEST(SweepCsv, HeaderAndDigits) {
    EXPECT_EQ(sweep_csv_header(), "R,r1,r2,G,var_Xs,var_Ps,var_Xi,var_Pi,excess_Xs,excess_Xi");
    const std::string row = sweep_csv_row(sweep_point(config_for(0.5, 0.0, 0.0)));
    EXPECT_EQ(row.substr(0, 12), "0.5,0,0,2,7,");
}

TEST(RunResultJson, CarriesConfigAndMoments) {
    auto c = config_for(0.5, 1, 1);
    c.shots = 4;
    const Json j = to_json(run_protocol(c));
    EXPECT_EQ(j["config"]["reflectivity"].get<double>(), 0.5);
    EXPECT_TRUE(j.contains("analytic"));
}

}  // namespace
}  // namespace nopa
