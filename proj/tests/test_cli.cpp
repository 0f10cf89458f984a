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
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nopa/cli.hpp"
#include "nopa/error.hpp"
#include "nopa/json_io.hpp"

namespace nopa::cli {
namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("nopa_cli_test_" + name);
}

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

class EnvGuard {
public:
    explicit EnvGuard(const char* value) {
        if (value) setenv("NOPA_SEED", value, 1);
        else unsetenv("NOPA_SEED");
    }
    ~EnvGuard() { unsetenv("NOPA_SEED"); }
};

TEST(ParseGrid, Inclusive) {
    EXPECT_EQ(parse_grid("0.1:0.9:0.1").size(), 9u);
    EXPECT_EQ(parse_grid("1:4:1"), (std::vector<double>{1, 2, 3, 4}));
    EXPECT_EQ(parse_grid("0.5"), (std::vector<double>{0.5}));
    EXPECT_THROW(parse_grid("1:0:0.1"), InvalidArgument);
    EXPECT_THROW(parse_grid("0:1:0"), InvalidArgument);
    EXPECT_THROW(parse_grid("0:1"), InvalidArgument);
    EXPECT_THROW(parse_grid("a:b:c"), InvalidArgument);
}

TEST(ParseInput, Forms) {
    EXPECT_EQ(parse_input("vacuum").kind, InputSpec::Kind::vacuum);
    const InputSpec c = parse_input("coherent:3,-1");
    EXPECT_EQ(c.kind, InputSpec::Kind::coherent);
    EXPECT_EQ(c.mean_x, 3.0);
    EXPECT_EQ(c.mean_p, -1.0);
    const InputSpec s = parse_input("squeezed:0.5,P");
    EXPECT_EQ(s.squeezed_quad, Quadrature::P);
    EXPECT_THROW(parse_input("squeezed:0.5,Z"), InvalidArgument);
    EXPECT_THROW(parse_input("thermal:1,2"), InvalidArgument);
    EXPECT_THROW(parse_input("coherent:1"), InvalidArgument);
}

TEST(CmdRun, ReportsGain) {
    const Outcome o = invoke({"run", "--reflectivity", "0.5", "--r1", "1", "--r2", "1", "--shots", "10"});
    EXPECT_EQ(o.code, kExitOk) << o.err;
    EXPECT_NE(o.out.find("G=2"), std::string::npos);
}

TEST(CmdRun, UnitReflectivityIsUsageError) {
    EXPECT_EQ(invoke({"run", "--reflectivity", "1.0"}).code, kExitUsage);
    EXPECT_EQ(invoke({"run", "-R", "-0.2"}).code, kExitUsage);
}

TEST(CmdRun, UnsqueezedVarianceIsSeven) {
    const Outcome o = invoke({"run", "--reflectivity", "0.5", "--r1", "0", "--r2", "0", "--shots", "10"});
    ASSERT_EQ(o.code, kExitOk);
    bool found = false;
    for (const auto& line : lines_of(o.out)) {
        if (line.rfind("X_out_s", 0) == 0) {
            std::istringstream ls(line);
            std::string name;
            double mean = 0, var = 0;
            ls >> name >> mean >> var;
            EXPECT_NEAR(var, 7.0, 1e-5);
            found = true;
        }
    }
    EXPECT_TRUE(found);
}

TEST(CmdRun, JsonOutputFile) {
    const auto path = temp_file("run.json");
    const Outcome o = invoke({"run", "--shots", "5", "--seed", "4", "--output", path.string(), "--emit-ledger"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    const Json j = parse_json(ss.str());
    EXPECT_EQ(j["config"]["seed"].get<int>(), 4);
    EXPECT_EQ(j["sampled"]["samples"].get<int>(), 5);
    std::filesystem::remove(path);
}

TEST(CmdRun, UnknownFlagIsUsageError) {
    EXPECT_EQ(invoke({"run", "--bogus"}).code, kExitUsage);
    EXPECT_EQ(invoke({}).code, kExitUsage);
    EXPECT_EQ(invoke({"run", "--format", "xml"}).code, kExitUsage);
    EXPECT_EQ(invoke({"run", "--input-s", "thermal"}).code, kExitUsage);
}

TEST(CmdRun, HelpExitsZero) { EXPECT_EQ(invoke({"--help"}).code, kExitOk); }

TEST(CmdSweep, RowsAndExcessColumn) {
    const Outcome o = invoke({"sweep", "--grid-R", "0.1:0.9:0.1", "--r1", "1", "--r2", "1"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    const auto lines = lines_of(o.out);
    ASSERT_EQ(lines.size(), 10u);
    EXPECT_EQ(lines[0], "R,r1,r2,G,var_Xs,var_Ps,var_Xi,var_Pi,excess_Xs,excess_Xi");
    for (std::size_t k = 1; k < lines.size(); ++k) {
        std::vector<double> cols;
        std::stringstream ss(lines[k]);
        std::string cell;
        while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
        ASSERT_EQ(cols.size(), 10u);
        const double R = cols[0];
        EXPECT_NEAR(R, 0.1 * static_cast<double>(k), 1e-12);
        EXPECT_NEAR(cols[8], 2.0 / (1.0 - R) * std::exp(-2.0), 1e-10);
    }
}

TEST(CmdSweep, DeterministicBytes) {
    const std::vector<std::string> args = {"sweep", "--grid-R", "0:0.5:0.25", "--grid-r1", "0:1:0.5", "--grid-r2", "1:2:1"};
    const Outcome a = invoke(args);
    const Outcome b = invoke(args);
    EXPECT_EQ(a.out, b.out);
    // R outermost, then r1, then r2.
    EXPECT_EQ(lines_of(a.out).size(), 1u + 3 * 3 * 2);
    EXPECT_EQ(lines_of(a.out)[2].substr(0, 6), "0,0,2,");
}

TEST(CmdSweep, BadGrids) {
    EXPECT_EQ(invoke({"sweep", "--grid-R", "0.5:1:0.25"}).code, kExitUsage);
    EXPECT_EQ(invoke({"sweep", "--grid-R", "0:0.5:-1"}).code, kExitUsage);
    EXPECT_EQ(invoke({"sweep", "--grid-r", "0:1:1", "--grid-r1", "0:1:1"}).code, kExitUsage);
}

TEST(CmdCriteria, EntangledAndNot) {
    const Outcome yes = invoke({"criteria", "--r1", "1", "--r2", "1"});
    EXPECT_EQ(yes.code, kExitOk);
    int pass_rows = 0;
    for (const auto& l : lines_of(yes.out)) {
        if (l.rfind("nopa_", 0) == 0 && l.find("pass") != std::string::npos) ++pass_rows;
    }
    EXPECT_EQ(pass_rows, 4);
    EXPECT_NE(yes.out.find("0.270671"), std::string::npos);
    const Outcome no = invoke({"criteria", "--r1", "0", "--r2", "0", "--format", "json"});
    const Json j = parse_json(no.out);
    EXPECT_FALSE(j["all_pass"].get<bool>());
    for (const auto& row : j["criteria"]) EXPECT_FALSE(row["pass"].get<bool>());
}

TEST(CmdCriteria, GhzOnSuppliedVacuum) {
    const auto path = temp_file("vacuum4.json");
    write(path, R"({"modes":["m1","m2","m3","m4"],"mean":[0,0,0,0,0,0,0,0],)"
                R"("cov":[[1,0,0,0,0,0,0,0],[0,1,0,0,0,0,0,0],[0,0,1,0,0,0,0,0],[0,0,0,1,0,0,0,0],)"
                R"([0,0,0,0,1,0,0,0],[0,0,0,0,0,1,0,0],[0,0,0,0,0,0,1,0],[0,0,0,0,0,0,0,1]]})");
    const Outcome o = invoke({"criteria", "--combos", "ghz", "--state", path.string(), "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.err;
    const Json j = parse_json(o.out);
    EXPECT_EQ(j["criteria"].size(), 7u);
    for (const auto& row : j["criteria"]) EXPECT_FALSE(row["pass"].get<bool>());
    std::filesystem::remove(path);
}

TEST(CmdCriteria, UsageErrors) {
    EXPECT_EQ(invoke({"criteria", "--combos", "cluster"}).code, kExitUsage);
    EXPECT_EQ(invoke({"criteria", "--combos", "star"}).code, kExitUsage);
    const auto path = temp_file("bad_state.json");
    write(path, R"({"modes":["a"],"mean":[0,0]})");
    EXPECT_EQ(invoke({"criteria", "--combos", "ghz", "--state", path.string()}).code, kExitUsage);
    EXPECT_EQ(invoke({"criteria", "--combos", "ghz", "--state", "/nonexistent/state.json"}).code, kExitUsage);
    std::filesystem::remove(path);
}

TEST(CmdMontecarlo, TooFewShots) { EXPECT_EQ(invoke({"montecarlo", "--shots", "10"}).code, kExitUsage); }

TEST(CmdMontecarlo, SelfTestPasses) {
    const Outcome o = invoke({"montecarlo", "--shots", "20000", "--seed", "12", "--format", "json"});
    ASSERT_EQ(o.code, kExitOk) << o.out;
    const Json j = parse_json(o.out);
    EXPECT_TRUE(j["self_test"]["pass"].get<bool>());
    EXPECT_LT(j["sampled"]["max_abs_z"].get<double>(), 5.0);
}

TEST(CmdMontecarlo, NetworkEquivalence) {
    const Outcome o = invoke({"montecarlo", "--shots", "500", "--network", "-R", "0.2", "--r1", "0.5", "--r2", "2"});
    EXPECT_EQ(o.code, kExitOk);
    EXPECT_NE(o.out.find("network vs direct max deviation = 0"), std::string::npos);
}

TEST(Seed, Precedence) {
    const auto cfg = temp_file("seed.json");
    write(cfg, R"({"seed": 5, "shots": 3})");
    auto seed_of = [](const Outcome& o) { return parse_json(o.out)["config"]["seed"].get<int>(); };
    {
        EnvGuard env("9");
        EXPECT_EQ(seed_of(invoke({"run", "--format", "json", "--shots", "3"})), 9);
        EXPECT_EQ(seed_of(invoke({"run", "--format", "json", "--config", cfg.string()})), 5);
        EXPECT_EQ(seed_of(invoke({"run", "--format", "json", "--config", cfg.string(), "--seed", "2"})), 2);
    }
    {
        EnvGuard env(nullptr);
        EXPECT_EQ(seed_of(invoke({"run", "--format", "json", "--shots", "3"})), 0);
    }
    {
        EnvGuard env("abc");
        EXPECT_EQ(invoke({"run", "--shots", "3"}).code, kExitUsage);
    }
    std::filesystem::remove(cfg);
}

TEST(Config, UnknownKeyIsUsageError) {
    const auto cfg = temp_file("bad.json");
    write(cfg, R"({"reflectivty": 0.5})");
    EXPECT_EQ(invoke({"run", "--config", cfg.string()}).code, kExitUsage);
    write(cfg, R"({"reflectivity": "half"})");
    EXPECT_EQ(invoke({"run", "--config", cfg.string()}).code, kExitUsage);
    std::filesystem::remove(cfg);
}

TEST(Determinism, IdenticalFlagsIdenticalBytes) {
    const std::vector<std::string> args = {"run", "--shots", "50", "--seed", "77", "--format", "json"};
    EXPECT_EQ(invoke(args).out, invoke(args).out);
}

}  // namespace
}  // namespace nopa::cli
