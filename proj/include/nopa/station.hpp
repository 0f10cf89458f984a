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

// Message-passing realization of the protocol. The quantum state is
// simulated globally; everything that crosses between stations is a
// canonical JSON message on a Transport.

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nopa/protocol.hpp"

namespace nopa {

enum class StationRole { distributor, input_s, input_i, output_s, output_i };

std::string_view to_string(StationRole role);
/// Throws DecodeError for an unknown name.
StationRole station_role_from_string(std::string_view name);

enum class StationPhase { AwaitEntanglement, Ready, Sent, AwaitMessages, Done };

std::string_view to_string(StationPhase phase);

struct ClassicalMessage {
    std::uint64_t seq = 0;
    StationRole from = StationRole::input_s;
    double x = 0.0;
    double p = 0.0;

    friend bool operator==(const ClassicalMessage&, const ClassicalMessage&) = default;
};

/// {"seq":n,"from":"input_s","payload":{"x":...,"p":...}}, no whitespace,
/// numbers with 17 significant digits. Only input stations may send.
std::string encode_message(const ClassicalMessage& msg);

/// Inverse of encode_message. Throws DecodeError on malformed JSON, missing
/// or extra fields, unknown or non-sending roles, and non-numeric or
/// non-finite payloads.
ClassicalMessage decode_message(std::string_view bytes);

// ---------------------------------------------------------------------------

struct Distribute {};
struct EntanglementArrival {};
struct LocalMeasurement {
    double x = 0.0;
    double p = 0.0;
};
struct MessageDelivery {
    ClassicalMessage msg;
};

using StationEvent = std::variant<Distribute, EntanglementArrival, LocalMeasurement, MessageDelivery>;

struct Outbound {
    StationRole to;
    ClassicalMessage msg;
};

/// Displacement an output station applies to its own mode.
struct LocalDisplacement {
    StationRole station;
    double dx = 0.0;
    double dp = 0.0;
};

struct StationState {
    StationRole role = StationRole::distributor;
    StationPhase phase = StationPhase::AwaitEntanglement;
    FeedforwardGains gains;  ///< pre-shared; used by output stations
    std::uint64_t next_seq = 0;
    std::optional<std::uint64_t> last_seq_from_s;
    std::optional<std::uint64_t> last_seq_from_i;
    std::optional<ClassicalMessage> from_input_s;
    std::optional<ClassicalMessage> from_input_i;

    static StationState initial(StationRole role, const FeedforwardGains& gains);

    /// Senders an output station is still waiting for this round.
    [[nodiscard]] std::vector<StationRole> pending() const;
};

/// Resets per-round fields; sequence bookkeeping carries over.
StationState next_round(const StationState& state);

struct StepResult {
    StationState state;
    std::vector<Outbound> outbound;
    std::optional<LocalDisplacement> displacement;
};

/// Pure transition function. Throws ProtocolViolation for an event the
/// current phase does not accept, a message from an unexpected sender, or
/// a sequence number that is not strictly increasing per sender.
StepResult step_station(const StationState& state, const StationEvent& event);

// ---------------------------------------------------------------------------

struct Envelope {
    StationRole from;
    StationRole to;
    std::string bytes;
};

/// Reliable classical channel: no loss, no duplication, FIFO per sender.
/// The relative order of different senders is up to the implementation.
class Transport {
public:
    virtual ~Transport() = default;
    virtual void send(Envelope envelope) = 0;
    virtual std::optional<Envelope> receive() = 0;
};

/// Delivers in global send order.
class FifoTransport final : public Transport {
public:
    void send(Envelope envelope) override;
    std::optional<Envelope> receive() override;

private:
    std::deque<Envelope> queue_;
};

/// Per-sender FIFO queues; each delivery picks a non-empty sender queue at
/// random from a seeded generator.
class InterleavingTransport final : public Transport {
public:
    explicit InterleavingTransport(std::uint64_t seed) : rng_(seed) {}
    void send(Envelope envelope) override;
    std::optional<Envelope> receive() override;

private:
    std::vector<std::pair<StationRole, std::deque<Envelope>>> queues_;
    std::mt19937_64 rng_;
};

struct NetworkRun {
    RunResult result;
    std::vector<std::string> transcript;  ///< every delivered message, in delivery order
};

/// Runs config.shots rounds through the five station actors over
/// `transport`. Uses the same per-shot streams and station-local quantum
/// steps as run_protocol, so the results coincide for equal seeds.
NetworkRun run_network(const ProtocolConfig& config, Transport& transport, const StateObserver& observer = {});

/// Largest absolute difference between two runs over per-shot records,
/// conditional covariances, analytic moments and sampled moments. Returns
/// +inf if the runs have different shot counts.
double max_run_deviation(const RunResult& a, const RunResult& b);

/// Newline-delimited transcript text (one message per line, trailing newline).
std::string transcript_text(const std::vector<std::string>& transcript);

/// Splits transcript text into lines, rejecting empty lines.
std::vector<std::string> split_transcript(const std::string& text);

}  // namespace nopa
