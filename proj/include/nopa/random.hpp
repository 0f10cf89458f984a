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

#include <cstdint>
#include <initializer_list>
#include <random>

namespace nopa {

/// Seeded normal-variate stream.
///
/// Streams are derived from a root seed plus a path of integers (for
/// example a shot index), so that independent parts of a run never share
/// state and any part can be replayed in isolation.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : RngStream(seed, {}) {}

    RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    /// Child stream keyed by `index`; does not advance this stream.
    [[nodiscard]] RngStream split(std::uint64_t index) const;

    double standard_normal() { return normal_(engine_); }

    double normal(double mean, double stddev) { return mean + stddev * standard_normal(); }

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::uint64_t path_hash_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nopa
