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

#include "nopa/station.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "nopa/error.hpp"
#include "nopa/json_io.hpp"

namespace nopa {

std::string_view to_string(StationRole role) {
    switch (role) {
        case StationRole::distributor: return "distributor";
        case StationRole::input_s: return "input_s";
        case StationRole::input_i: return "input_i";
        case StationRole::output_s: return "output_s";
        case StationRole::output_i: return "output_i";
    }
    return "?";
}

StationRole station_role_from_string(std::string_view name) {
    for (auto r : {StationRole::distributor, StationRole::input_s, StationRole::input_i, StationRole::output_s,
                   StationRole::output_i}) {
        if (to_string(r) == name) return r;
    }
    throw DecodeError("unknown station role '" + std::string(name) + "'");
}

std::string_view to_string(StationPhase phase) {
    switch (phase) {
        case StationPhase::AwaitEntanglement: return "AwaitEntanglement";
        case StationPhase::Ready: return "Ready";
        case StationPhase::Sent: return "Sent";
        case StationPhase::AwaitMessages: return "AwaitMessages";
        case StationPhase::Done: return "Done";
    }
    return "?";
}

namespace {

bool is_input(StationRole r) { return r == StationRole::input_s || r == StationRole::input_i; }
bool is_output(StationRole r) { return r == StationRole::output_s || r == StationRole::output_i; }

}  // namespace

// ---------------------------------------------------------------------------
// Wire format

std::string encode_message(const ClassicalMessage& msg) {
    if (!is_input(msg.from)) throw InvalidArgument("only input stations send classical messages");
    if (!std::isfinite(msg.x) || !std::isfinite(msg.p)) throw InvalidArgument("message payload must be finite");
    std::string out = "{\"seq\":";
    out += std::to_string(msg.seq);
    out += ",\"from\":\"";
    out += to_string(msg.from);
    out += "\",\"payload\":{\"x\":";
    out += format_double(msg.x);
    out += ",\"p\":";
    out += format_double(msg.p);
    out += "}}";
    return out;
}

ClassicalMessage decode_message(std::string_view bytes) {
    const Json doc = parse_json(std::string(bytes));
    auto fail = [](const std::string& why) -> DecodeError { return DecodeError("classical message: " + why); };
    if (!doc.is_object() || doc.size() != 3 || !doc.contains("seq") || !doc.contains("from") ||
        !doc.contains("payload")) {
        throw fail("expected exactly the keys seq, from, payload");
    }
    const auto& seq = doc["seq"];
    if (!seq.is_number_unsigned()) throw fail("seq must be a non-negative integer");
    const auto& from = doc["from"];
    if (!from.is_string()) throw fail("from must be a string");
    const auto& payload = doc["payload"];
    if (!payload.is_object() || payload.size() != 2 || !payload.contains("x") || !payload.contains("p")) {
        throw fail("payload must have exactly the keys x, p");
    }
    if (!payload["x"].is_number() || !payload["p"].is_number()) throw fail("payload values must be numbers");
    ClassicalMessage msg;
    msg.seq = seq.get<std::uint64_t>();
    msg.from = station_role_from_string(from.get<std::string>());
    if (!is_input(msg.from)) throw fail("sender must be an input station");
    msg.x = payload["x"].get<double>();
    msg.p = payload["p"].get<double>();
    if (!std::isfinite(msg.x) || !std::isfinite(msg.p)) throw fail("payload must be finite");
    return msg;
}

// ---------------------------------------------------------------------------
// Station state machine

StationState StationState::initial(StationRole role, const FeedforwardGains& gains) {
    StationState s;
    s.role = role;
    s.gains = gains;
    s.phase = role == StationRole::distributor ? StationPhase::Ready : StationPhase::AwaitEntanglement;
    return s;
}

std::vector<StationRole> StationState::pending() const {
    std::vector<StationRole> out;
    if (!is_output(role) || phase == StationPhase::Done || phase == StationPhase::AwaitEntanglement) return out;
    if (!from_input_s) out.push_back(StationRole::input_s);
    if (!from_input_i) out.push_back(StationRole::input_i);
    return out;
}

StationState next_round(const StationState& state) {
    StationState s = StationState::initial(state.role, state.gains);
    s.next_seq = state.next_seq;
    s.last_seq_from_s = state.last_seq_from_s;
    s.last_seq_from_i = state.last_seq_from_i;
    return s;
}

namespace {

[[noreturn]] void violation(const StationState& s, std::string_view what) {
    throw ProtocolViolation(std::string(to_string(s.role)) + " in phase " + std::string(to_string(s.phase)) + ": " +
                            std::string(what));
}

StepResult on_distribute(const StationState& s) {
    if (s.role != StationRole::distributor || s.phase != StationPhase::Ready) violation(s, "unexpected distribute");
    StepResult r{s, {}, {}};
    r.state.phase = StationPhase::Done;
    return r;
}

StepResult on_arrival(const StationState& s) {
    if (s.role == StationRole::distributor || s.phase != StationPhase::AwaitEntanglement) {
        violation(s, "unexpected entanglement arrival");
    }
    StepResult r{s, {}, {}};
    r.state.phase = StationPhase::Ready;
    return r;
}

StepResult on_measurement(const StationState& s, const LocalMeasurement& m) {
    if (!is_input(s.role) || s.phase != StationPhase::Ready) violation(s, "unexpected local measurement");
    StepResult r{s, {}, {}};
    const ClassicalMessage msg{s.next_seq, s.role, m.x, m.p};
    r.outbound.push_back({StationRole::output_s, msg});
    r.outbound.push_back({StationRole::output_i, msg});
    r.state.next_seq = s.next_seq + 1;
    r.state.phase = StationPhase::Sent;
    return r;
}

StepResult on_message(const StationState& s, const ClassicalMessage& msg) {
    if (!is_output(s.role)) violation(s, "only output stations receive messages");
    if (s.phase != StationPhase::Ready && s.phase != StationPhase::AwaitMessages) violation(s, "unexpected message");
    if (!is_input(msg.from)) violation(s, "message from a non-input station");

    StepResult r{s, {}, {}};
    const bool from_s = msg.from == StationRole::input_s;
    auto& last = from_s ? r.state.last_seq_from_s : r.state.last_seq_from_i;
    if (last && msg.seq <= *last) violation(s, "sequence number not increasing (duplicate or reordered message)");
    auto& slot = from_s ? r.state.from_input_s : r.state.from_input_i;
    if (slot) violation(s, "second message from the same sender in one round");
    last = msg.seq;
    slot = msg;

    if (!(r.state.from_input_s && r.state.from_input_i)) {
        r.state.phase = StationPhase::AwaitMessages;
        return r;
    }
    const MeasurementRecord rec{r.state.from_input_s->x, r.state.from_input_s->p, r.state.from_input_i->x,
                                r.state.from_input_i->p};
    const DisplacementSignal sig = displacement_signal(rec, s.gains);
    if (s.role == StationRole::output_s) {
        r.displacement = LocalDisplacement{s.role, sig.x_a3, sig.p_a3};
    } else {
        r.displacement = LocalDisplacement{s.role, sig.x_a4, sig.p_a4};
    }
    r.state.phase = StationPhase::Done;
    return r;
}

}  // namespace

StepResult step_station(const StationState& state, const StationEvent& event) {
    return std::visit(
        [&](const auto& e) -> StepResult {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, Distribute>) {
                return on_distribute(state);
            } else if constexpr (std::is_same_v<E, EntanglementArrival>) {
                return on_arrival(state);
            } else if constexpr (std::is_same_v<E, LocalMeasurement>) {
                return on_measurement(state, e);
            } else {
                return on_message(state, e.msg);
            }
        },
        event);
}

// ---------------------------------------------------------------------------
// Transports

void FifoTransport::send(Envelope envelope) { queue_.push_back(std::move(envelope)); }

std::optional<Envelope> FifoTransport::receive() {
    if (queue_.empty()) return std::nullopt;
    Envelope e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

void InterleavingTransport::send(Envelope envelope) {
    auto it = std::find_if(queues_.begin(), queues_.end(), [&](const auto& q) { return q.first == envelope.from; });
    if (it == queues_.end()) {
        queues_.emplace_back(envelope.from, std::deque<Envelope>{});
        it = std::prev(queues_.end());
    }
    it->second.push_back(std::move(envelope));
}

std::optional<Envelope> InterleavingTransport::receive() {
    std::vector<std::size_t> ready;
    for (std::size_t i = 0; i < queues_.size(); ++i) {
        if (!queues_[i].second.empty()) ready.push_back(i);
    }
    if (ready.empty()) return std::nullopt;
    std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
    auto& q = queues_[ready[pick(rng_)]].second;
    Envelope e = std::move(q.front());
    q.pop_front();
    return e;
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

struct Stations {
    StationState distributor, input_s, input_i, output_s, output_i;

    StationState& at(StationRole r) {
        switch (r) {
            case StationRole::distributor: return distributor;
            case StationRole::input_s: return input_s;
            case StationRole::input_i: return input_i;
            case StationRole::output_s: return output_s;
            case StationRole::output_i: return output_i;
        }
        throw InvalidArgument("unknown station");
    }
};

void dispatch(Transport& transport, StationRole from, const std::vector<Outbound>& outbound) {
    for (const auto& o : outbound) transport.send({from, o.to, encode_message(o.msg)});
}

}  // namespace

NetworkRun run_network(const ProtocolConfig& config, Transport& transport, const StateObserver& observer) {
    config.validate();
    const PreparedProtocol prepared = prepare_protocol(config);
    const FeedforwardGains gains = config.effective_gains();

    double min_eig = check_physicality(prepared.state).min_eigenvalue;
    const StateObserver track = [&](const GaussianState& s) {
        min_eig = std::min(min_eig, check_physicality(s).min_eigenvalue);
        if (observer) observer(s);
    };
    const StateObserver none;

    Stations st{StationState::initial(StationRole::distributor, gains),
                StationState::initial(StationRole::input_s, gains), StationState::initial(StationRole::input_i, gains),
                StationState::initial(StationRole::output_s, gains),
                StationState::initial(StationRole::output_i, gains)};

    NetworkRun run{RunResult{config, gains, prepared.state, prepared.ledger, Eigen::Matrix4d::Zero(), {}, {}, 0.0}, {}};
    std::vector<ShotRecord> shots;
    shots.reserve(config.shots);
    Eigen::Matrix4d conditional_cov = Eigen::Matrix4d::Zero();

    for (std::size_t k = 0; k < config.shots; ++k) {
        const StateObserver& observe = k == 0 ? track : none;
        RngStream rng(config.seed, {static_cast<std::uint64_t>(k)});

        // Distribution of the four-mode resource.
        st.distributor = step_station(st.distributor, Distribute{}).state;
        GaussianState global = prepared.state;
        for (auto r : {StationRole::input_s, StationRole::input_i, StationRole::output_s, StationRole::output_i}) {
            st.at(r) = step_station(st.at(r), EntanglementArrival{}).state;
        }

        // Input stations measure and broadcast.
        StationMeasurement m1 = measure_signal_input(global, rng, observe);
        global = std::move(m1.state);
        auto s1 = step_station(st.input_s, LocalMeasurement{m1.x, m1.p});
        st.input_s = s1.state;
        dispatch(transport, StationRole::input_s, s1.outbound);

        StationMeasurement m2 = measure_idler_input(global, rng, observe);
        global = std::move(m2.state);
        auto s2 = step_station(st.input_i, LocalMeasurement{m2.x, m2.p});
        st.input_i = s2.state;
        dispatch(transport, StationRole::input_i, s2.outbound);

        // Output stations react to deliveries.
        while (auto env = transport.receive()) {
            const ClassicalMessage msg = decode_message(env->bytes);
            if (msg.from != env->from) throw ProtocolViolation("envelope sender does not match message sender");
            run.transcript.push_back(env->bytes);
            auto res = step_station(st.at(env->to), MessageDelivery{msg});
            st.at(env->to) = res.state;
            if (res.displacement) {
                const auto& d = *res.displacement;
                global = d.station == StationRole::output_s ? apply_signal_output(global, d.dx, d.dp)
                                                            : apply_idler_output(global, d.dx, d.dp);
            }
        }
        if (st.output_s.phase != StationPhase::Done || st.output_i.phase != StationPhase::Done) {
            throw ProtocolViolation("transport drained before both output stations completed");
        }

        const MeasurementRecord rec{st.output_s.from_input_s->x, st.output_s.from_input_s->p,
                                    st.output_s.from_input_i->x, st.output_s.from_input_i->p};
        const DisplacementSignal sig = displacement_signal(rec, gains);
        if (k == 0) {
            track(global);
            const ModeLabel order[] = {labels::kOutSignal, labels::kOutIdler};
            conditional_cov = global.reduced(order).cov();
        }
        shots.push_back(finish_shot(rec, sig, global, rng));

        for (auto r : {StationRole::distributor, StationRole::input_s, StationRole::input_i, StationRole::output_s,
                       StationRole::output_i}) {
            st.at(r) = next_round(st.at(r));
        }
    }
    run.result = assemble_result(config, std::move(shots), conditional_cov, min_eig);
    return run;
}

double max_run_deviation(const RunResult& a, const RunResult& b) {
    if (a.shots.size() != b.shots.size()) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    auto upd = [&](double x, double y) { d = std::max(d, std::abs(x - y)); };
    for (std::size_t k = 0; k < a.shots.size(); ++k) {
        const auto& s = a.shots[k];
        const auto& t = b.shots[k];
        upd(s.measurement.x1, t.measurement.x1);
        upd(s.measurement.p1, t.measurement.p1);
        upd(s.measurement.x2, t.measurement.x2);
        upd(s.measurement.p2, t.measurement.p2);
        upd(s.signal.x_a3, t.signal.x_a3);
        upd(s.signal.p_a3, t.signal.p_a3);
        upd(s.signal.x_a4, t.signal.x_a4);
        upd(s.signal.p_a4, t.signal.p_a4);
        d = std::max(d, (s.output_mean - t.output_mean).cwiseAbs().maxCoeff());
        d = std::max(d, (s.sample - t.sample).cwiseAbs().maxCoeff());
    }
    d = std::max(d, (a.conditional_cov - b.conditional_cov).cwiseAbs().maxCoeff());
    d = std::max(d, (a.analytic_output.mean() - b.analytic_output.mean()).cwiseAbs().maxCoeff());
    d = std::max(d, (a.analytic_output.cov() - b.analytic_output.cov()).cwiseAbs().maxCoeff());
    d = std::max(d, (a.sampled.mean - b.sampled.mean).cwiseAbs().maxCoeff());
    d = std::max(d, (a.sampled.cov - b.sampled.cov).cwiseAbs().maxCoeff());
    return d;
}

std::string transcript_text(const std::vector<std::string>& transcript) {
    std::string out;
    for (const auto& line : transcript) {
        out += line;
        out.push_back('\n');
    }
    return out;
}

std::vector<std::string> split_transcript(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        const std::size_t end = text.find('\n', start);
        const std::size_t stop = end == std::string::npos ? text.size() : end;
        if (stop == start) throw DecodeError("empty line in transcript");
        lines.push_back(text.substr(start, stop - start));
        start = stop + 1;
    }
    return lines;
}

}  // namespace nopa
