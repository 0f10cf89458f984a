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

#include "nopa/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nopa/criteria.hpp"
#include "nopa/error.hpp"
#include "nopa/json_io.hpp"
#include "nopa/protocol.hpp"
#include "nopa/station.hpp"

namespace nopa::cli {

namespace {

/// Raised for bad flags or values; mapped to exit code 2.
struct UsageError : Error {
    using Error::Error;
};

struct SelfTestFailure : Error {
    using Error::Error;
};

std::string human(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double parse_number(const std::string& text) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InvalidArgument("not a number: '" + text + "'");
    }
    if (used != text.size() || !std::isfinite(v)) throw InvalidArgument("not a finite number: '" + text + "'");
    return v;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.size() == 1) return {parse_number(parts[0])};
    if (parts.size() != 3) throw InvalidArgument("grid must be start:stop:step");
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0)) throw InvalidArgument("grid step must be positive");
    if (stop < start) throw InvalidArgument("grid is empty (stop < start)");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> values;
    values.reserve(count);
    for (std::size_t k = 0; k < count; ++k) values.push_back(start + static_cast<double>(k) * step);
    return values;
}

InputSpec parse_input(const std::string& spec) {
    if (spec == "vacuum") return InputSpec::vacuum();
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw InvalidArgument("input must be vacuum, coherent:X,P or squeezed:R,X|P");
    const std::string kind = spec.substr(0, colon);
    const std::string rest = spec.substr(colon + 1);
    const auto comma = rest.find(',');
    if (comma == std::string::npos) throw InvalidArgument("input parameters must be two comma-separated values");
    const std::string a = rest.substr(0, comma);
    const std::string b = rest.substr(comma + 1);
    if (kind == "coherent") return InputSpec::coherent(parse_number(a), parse_number(b));
    if (kind == "squeezed") {
        if (b != "X" && b != "P") throw InvalidArgument("squeezed quadrature must be X or P");
        return InputSpec::squeezed(parse_number(a), b == "X" ? Quadrature::X : Quadrature::P);
    }
    throw InvalidArgument("unknown input kind '" + kind + "'");
}

namespace {

struct CliConfig {
    std::string subcommand;
    double reflectivity = 0.5;
    double r1 = 1.0;
    double r2 = 1.0;
    std::size_t shots = 0;  // 0: subcommand default
    std::uint64_t seed = 0;
    std::string input_s = "vacuum";
    std::string input_i = "vacuum";
    std::string output;
    std::string format;  // empty: subcommand default
    std::string grid_R;
    std::string grid_r;
    std::string grid_r1;
    std::string grid_r2;
    bool emit_ledger = false;
    bool network = false;
    std::string combos = "nopa";
    std::string state_path;
    std::string transcript_path;
    std::string config_path;
};

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot read '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Fills fields not given on the command line from a JSON config file.
void merge_config_file(CliConfig& cfg, const CLI::App& sub) {
    const Json doc = parse_json(read_file(cfg.config_path));
    if (!doc.is_object()) throw UsageError("config file must hold a JSON object");
    auto given = [&](const std::string& flag) { return sub.count(flag) > 0; };
    try {
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            const std::string& key = it.key();
            const Json& v = it.value();
            if (key == "reflectivity") {
                if (!given("--reflectivity")) cfg.reflectivity = v.get<double>();
            } else if (key == "r1") {
                if (!given("--r1")) cfg.r1 = v.get<double>();
            } else if (key == "r2") {
                if (!given("--r2")) cfg.r2 = v.get<double>();
            } else if (key == "shots") {
                if (!given("--shots")) cfg.shots = v.get<std::size_t>();
            } else if (key == "seed") {
                if (!given("--seed")) cfg.seed = v.get<std::uint64_t>();
            } else if (key == "input_s") {
                if (!given("--input-s")) cfg.input_s = v.get<std::string>();
            } else if (key == "input_i") {
                if (!given("--input-i")) cfg.input_i = v.get<std::string>();
            } else if (key == "output") {
                if (!given("--output")) cfg.output = v.get<std::string>();
            } else if (key == "format") {
                if (!given("--format")) cfg.format = v.get<std::string>();
            } else if (key == "grid_R") {
                if (!given("--grid-R")) cfg.grid_R = v.get<std::string>();
            } else if (key == "grid_r") {
                if (!given("--grid-r")) cfg.grid_r = v.get<std::string>();
            } else if (key == "grid_r1") {
                if (!given("--grid-r1")) cfg.grid_r1 = v.get<std::string>();
            } else if (key == "grid_r2") {
                if (!given("--grid-r2")) cfg.grid_r2 = v.get<std::string>();
            } else if (key == "emit_ledger") {
                if (!given("--emit-ledger")) cfg.emit_ledger = v.get<bool>();
            } else if (key == "network") {
                if (!given("--network")) cfg.network = v.get<bool>();
            } else if (key == "combos") {
                if (!given("--combos")) cfg.combos = v.get<std::string>();
            } else if (key == "state") {
                if (!given("--state")) cfg.state_path = v.get<std::string>();
            } else {
                throw UsageError("unknown config key '" + key + "'");
            }
        }
    } catch (const Json::exception& e) {
        throw UsageError(std::string("config file: ") + e.what());
    }
}

ProtocolConfig protocol_config(const CliConfig& c) {
    ProtocolConfig p;
    p.reflectivity = c.reflectivity;
    p.r1 = c.r1;
    p.r2 = c.r2;
    p.seed = c.seed;
    p.shots = c.shots;
    try {
        p.input_s = parse_input(c.input_s);
        p.input_i = parse_input(c.input_i);
        p.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return p;
}

void check_format(const std::string& format, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed) {
        if (format == a) return;
    }
    throw UsageError("unsupported --format '" + format + "'");
}

void emit(const CliConfig& c, std::ostream& out, const std::string& text) {
    if (c.output.empty()) {
        out << text;
    } else {
        write_file(c.output, text);
    }
}

// ---------------------------------------------------------------------------

int cmd_run(CliConfig c, std::ostream& out) {
    if (c.format.empty()) c.format = "text";
    check_format(c.format, {"text", "json"});
    if (c.shots == 0) c.shots = 1000;
    const ProtocolConfig cfg = protocol_config(c);
    const RunResult result = run_protocol(cfg);
    const TransferReport transfer = transfer_report(cfg);
    const ExcessNoise noise = added_noise(cfg.r1, cfg.r2, cfg.reflectivity);
    const GaussianState ideal = ideal_output(cfg);

    if (c.format == "json") {
        Json doc = to_json(result);
        if (c.emit_ledger) doc["ledger"] = result.ledger.to_json();
        const std::string text = dump_json(doc, 2) + "\n";
        emit(c, out, text);
        return kExitOk;
    }

    std::ostringstream os;
    os << "nonlocal NOPA  R=" << human(cfg.reflectivity) << "  r1=" << human(cfg.r1) << "  r2=" << human(cfg.r2)
       << "  G=" << human(cfg.gain()) << "\n\n";
    os << "transfer coefficients (output row <- basis quadrature)\n";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-8s", "");
    os << buf;
    for (const auto& b : transfer.basis) {
        std::snprintf(buf, sizeof buf, " %9s", b.c_str());
        os << buf;
    }
    os << "\n";
    for (std::size_t i = 0; i < transfer.outputs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%-8s", transfer.outputs[i].c_str());
        os << buf;
        for (Eigen::Index j = 0; j < transfer.coefficients.cols(); ++j) {
            std::snprintf(buf, sizeof buf, " %9.6g", transfer.coefficients(static_cast<Eigen::Index>(i), j));
            os << buf;
        }
        os << "\n";
    }
    const auto& cov = result.analytic_output.cov();
    const auto& mean = result.analytic_output.mean();
    const char* names[] = {"X_out_s", "P_out_s", "X_out_i", "P_out_i"};
    const double excess[] = {noise.signal_x, noise.signal_p, noise.idler_x, noise.idler_p};
    os << "\n";
    std::snprintf(buf, sizeof buf, "%-9s %12s %12s %12s %12s\n", "quad", "mean", "variance", "ideal var", "excess");
    os << buf;
    for (int i = 0; i < 4; ++i) {
        char line[128];
        std::snprintf(line, sizeof line, "%-9s %12.6g %12.6g %12.6g %12.6g\n", names[i], mean(i), cov(i, i),
                      ideal.cov()(i, i), excess[i]);
        os << line;
    }
    os << "\nmax |cov - cov_ideal| = " << human((cov - ideal.cov()).cwiseAbs().maxCoeff()) << "\n";
    if (result.sampled.samples >= 2) {
        const MomentComparison cmp = compare_moments(result.sampled, result.analytic_output);
        os << "monte carlo: " << result.sampled.samples << " shots, max |z| = " << human(cmp.max_abs_z) << "\n";
    }
    os << "min eigenvalue of cov + i*Omega/2: covariance engine " << human(result.min_physicality_eigenvalue)
       << ", ledger " << human(result.min_ledger_physicality) << "\n";
    if (c.emit_ledger) os << "\nledger " << dump_json(result.ledger.to_json()) << "\n";
    out << os.str();
    if (!c.output.empty()) write_file(c.output, dump_json(to_json(result), 2) + "\n");
    return kExitOk;
}

int cmd_sweep(CliConfig c, std::ostream& out) {
    if (c.format.empty()) c.format = "csv";
    check_format(c.format, {"csv", "json"});
    std::vector<double> rs, r1s, r2s;
    try {
        rs = c.grid_R.empty() ? std::vector<double>{c.reflectivity} : parse_grid(c.grid_R);
        if (!c.grid_r.empty() && (!c.grid_r1.empty() || !c.grid_r2.empty())) {
            throw UsageError("--grid-r cannot be combined with --grid-r1/--grid-r2");
        }
        r1s = !c.grid_r.empty() ? parse_grid(c.grid_r) : !c.grid_r1.empty() ? parse_grid(c.grid_r1) : std::vector{c.r1};
        r2s = !c.grid_r2.empty() ? parse_grid(c.grid_r2) : std::vector{c.r2};
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    for (double R : rs) {
        if (!(R >= 0.0 && R < 1.0 - 1e-9)) throw UsageError("R grid must lie in [0, 1)");
    }
    const bool tied = !c.grid_r.empty();

    std::vector<SweepRow> rows;
    for (double R : rs) {
        for (double r1 : r1s) {
            for (double r2 : tied ? std::vector<double>{r1} : r2s) {
                CliConfig point = c;
                point.reflectivity = R;
                point.r1 = r1;
                point.r2 = r2;
                rows.push_back(sweep_point(protocol_config(point)));
            }
        }
    }

    std::string text;
    if (c.format == "csv") {
        text = sweep_csv_header() + "\n";
        for (const auto& r : rows) text += sweep_csv_row(r) + "\n";
    } else {
        Json arr = Json::array();
        for (const auto& r : rows) {
            arr.push_back(Json{{"R", r.reflectivity},
                               {"r1", r.r1},
                               {"r2", r.r2},
                               {"G", r.gain},
                               {"var_Xs", r.var_xs},
                               {"var_Ps", r.var_ps},
                               {"var_Xi", r.var_xi},
                               {"var_Pi", r.var_pi},
                               {"excess_Xs", r.excess_xs},
                               {"excess_Xi", r.excess_xi}});
        }
        text = dump_json(arr, 2) + "\n";
    }
    emit(c, out, text);
    return kExitOk;
}

int cmd_criteria(CliConfig c, std::ostream& out) {
    if (c.format.empty()) c.format = "text";
    check_format(c.format, {"text", "json"});
    if (c.combos != "nopa" && c.combos != "cluster" && c.combos != "ghz") {
        throw UsageError("--combos must be nopa, cluster or ghz");
    }
    CriterionReport report;
    if (c.state_path.empty()) {
        if (c.combos != "nopa") throw UsageError("--combos " + c.combos + " needs --state <path>");
        const ProtocolConfig cfg = protocol_config(c);
        const FourModeResources res = build_four_mode_state(cfg.r1, cfg.r2, cfg.reflectivity);
        report = evaluate(res.state, nopa_criteria(cfg.reflectivity));
    } else {
        GaussianState state = [&] {
            try {
                return GaussianState::from_json(parse_json(read_file(c.state_path)));
            } catch (const DecodeError& e) {
                throw UsageError(e.what());
            }
        }();
        if (state.mode_count() != 4) throw UsageError("criteria need a four-mode state");
        const FourModeLabels modes = {state.modes()[0], state.modes()[1], state.modes()[2], state.modes()[3]};
        std::vector<Criterion> set;
        if (c.combos == "nopa") {
            if (!(c.reflectivity >= 0.0 && c.reflectivity <= 1.0)) throw UsageError("reflectivity must lie in [0, 1]");
            set = nopa_criteria(c.reflectivity, modes);
        } else if (c.combos == "cluster") {
            set = cluster_criteria(modes);
        } else {
            set = ghz_criteria(modes);
        }
        report = evaluate(state, set);
    }
    emit(c, out, c.format == "json" ? dump_json(report.to_json(), 2) + "\n" : report.to_table());
    return kExitOk;
}

int cmd_montecarlo(CliConfig c, std::ostream& out) {
    if (c.format.empty()) c.format = "text";
    check_format(c.format, {"text", "json"});
    if (c.shots == 0) c.shots = 100000;
    if (c.shots < 100) throw UsageError("montecarlo needs --shots >= 100");
    const ProtocolConfig cfg = protocol_config(c);
    const RunResult result = run_protocol(cfg);
    const MomentComparison cmp = compare_moments(result.sampled, result.analytic_output);
    constexpr double kZLimit = 6.0;
    bool ok = cmp.max_abs_z <= kZLimit && result.min_physicality_eigenvalue >= kPhysicalityFloor &&
              result.min_ledger_physicality >= kPhysicalityFloor;

    std::optional<double> network_deviation;
    if (c.network) {
        FifoTransport transport;
        const NetworkRun net = run_network(cfg, transport);
        network_deviation = max_run_deviation(result, net.result);
        ok = ok && *network_deviation <= 1e-12;
        if (!c.transcript_path.empty()) write_file(c.transcript_path, transcript_text(net.transcript));
    }

    const char* names[] = {"X_out_s", "P_out_s", "X_out_i", "P_out_i"};
    if (c.format == "json") {
        Json doc = to_json(result);
        doc["self_test"] = Json{{"z_limit", kZLimit}, {"pass", ok}};
        if (network_deviation) doc["self_test"]["network_max_deviation"] = *network_deviation;
        emit(c, out, dump_json(doc, 2) + "\n");
    } else {
        std::ostringstream os;
        os << "monte carlo  R=" << human(cfg.reflectivity) << "  r1=" << human(cfg.r1) << "  r2=" << human(cfg.r2)
           << "  shots=" << cfg.shots << "  seed=" << cfg.seed << "\n";
        char line[160];
        std::snprintf(line, sizeof line, "%-22s %12s %12s %9s\n", "moment", "sampled", "ledger", "z");
        os << line;
        const auto& m = result.analytic_output.mean();
        const auto& s = result.analytic_output.cov();
        for (int i = 0; i < 4; ++i) {
            const std::string label = std::string("mean ") + names[i];
            std::snprintf(line, sizeof line, "%-22s %12.6g %12.6g %9.3f\n", label.c_str(), result.sampled.mean(i),
                          m(i), cmp.z_mean(i));
            os << line;
        }
        for (int i = 0; i < 4; ++i) {
            for (int j = i; j < 4; ++j) {
                const std::string label = std::string("cov ") + names[i] + "," + names[j];
                std::snprintf(line, sizeof line, "%-22s %12.6g %12.6g %9.3f\n", label.c_str(),
                              result.sampled.cov(i, j), s(i, j), cmp.z_cov(i, j));
                os << line;
            }
        }
        os << "max |z| = " << human(cmp.max_abs_z) << " (limit " << human(kZLimit) << ")\n";
        if (network_deviation) os << "network vs direct max deviation = " << human(*network_deviation) << "\n";
        os << "self-test: " << (ok ? "pass" : "FAIL") << "\n";
        emit(c, out, os.str());
    }
    return ok ? kExitOk : kExitSelfTest;
}

void add_common(CLI::App* sub, CliConfig& c) {
    sub->add_option("-R,--reflectivity", c.reflectivity, "Beam splitter reflectivity R in [0, 1)");
    sub->add_option("--r1", c.r1, "Squeezing of the a-pair EPR source");
    sub->add_option("--r2", c.r2, "Squeezing of the b-pair EPR source");
    sub->add_option("--seed", c.seed, "RNG seed (falls back to NOPA_SEED)");
    sub->add_option("--output", c.output, "Write machine-readable output to this path");
    sub->add_option("--format", c.format, "Output format");
    sub->add_option("--config", c.config_path, "JSON config file; flags take precedence");
    sub->add_option("--input-s", c.input_s, "Signal input: vacuum | coherent:X,P | squeezed:R,X|P");
    sub->add_option("--input-i", c.input_i, "Idler input: vacuum | coherent:X,P | squeezed:R,X|P");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Nonlocal nondegenerate optical parametric amplifier simulator", "nopa"};
    app.require_subcommand(1);
    CliConfig c;

    auto* run_cmd = app.add_subcommand("run", "Single run: transfer coefficients, variances, excess noise");
    add_common(run_cmd, c);
    run_cmd->add_option("--shots", c.shots, "Monte Carlo shots (default 1000)");
    run_cmd->add_flag("--emit-ledger", c.emit_ledger, "Include the Heisenberg ledger");

    auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep to CSV");
    add_common(sweep_cmd, c);
    sweep_cmd->add_option("--grid-R", c.grid_R, "Reflectivity grid start:stop:step");
    sweep_cmd->add_option("--grid-r", c.grid_r, "Squeezing grid applied to r1 = r2");
    sweep_cmd->add_option("--grid-r1", c.grid_r1, "Squeezing grid for r1");
    sweep_cmd->add_option("--grid-r2", c.grid_r2, "Squeezing grid for r2");

    auto* criteria_cmd = app.add_subcommand("criteria", "Inseparability criteria report");
    add_common(criteria_cmd, c);
    criteria_cmd->add_option("--combos", c.combos, "nopa | cluster | ghz");
    criteria_cmd->add_option("--state", c.state_path, "Four-mode state JSON to evaluate");

    auto* mc_cmd = app.add_subcommand("montecarlo", "Sampled pipeline vs exact moments self-test");
    add_common(mc_cmd, c);
    mc_cmd->add_option("--shots", c.shots, "Monte Carlo shots (default 100000, minimum 100)");
    mc_cmd->add_flag("--network", c.network, "Also run through the station network and compare");
    mc_cmd->add_option("--transcript", c.transcript_path, "Write the network transcript (with --network)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    c.subcommand = sub->get_name();
    try {
        if (!c.config_path.empty()) merge_config_file(c, *sub);
        if (sub->count("--seed") == 0) {
            if (const char* env = std::getenv("NOPA_SEED"); env != nullptr && *env != '\0') {
                bool from_file = false;
                if (!c.config_path.empty()) {
                    from_file = parse_json(read_file(c.config_path)).contains("seed");
                }
                if (!from_file) {
                    try {
                        std::size_t used = 0;
                        c.seed = std::stoull(env, &used);
                        if (used != std::string(env).size()) throw std::invalid_argument("trailing");
                    } catch (const std::exception&) {
                        throw UsageError("NOPA_SEED must be a non-negative integer");
                    }
                }
            }
        }
        if (c.subcommand == "run") return cmd_run(c, out);
        if (c.subcommand == "sweep") return cmd_sweep(c, out);
        if (c.subcommand == "criteria") return cmd_criteria(c, out);
        return cmd_montecarlo(c, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DecodeError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SelfTestFailure& e) {
        err << "self-test failure: " << e.what() << "\n";
        return kExitSelfTest;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace nopa::cli
