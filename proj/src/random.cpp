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

#include "nopa/random.hpp"

#include <vector>

namespace nopa {

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    // splitmix64 finalizer over the running hash
    std::uint64_t z = h ^ (v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2));
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t path_hash, std::size_t depth) {
    std::vector<std::uint32_t> words{
        static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(path_hash), static_cast<std::uint32_t>(path_hash >> 32),
        static_cast<std::uint32_t>(depth)};
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    : seed_(seed), path_hash_(0) {
    std::size_t depth = 0;
    for (auto p : path) {
        path_hash_ = mix(path_hash_, p);
        ++depth;
    }
    engine_ = make_engine(seed_, path_hash_, depth);
}

RngStream RngStream::split(std::uint64_t index) const {
    RngStream child(seed_);
    child.path_hash_ = mix(path_hash_ ^ 0xA5A5A5A5A5A5A5A5ULL, index);
    child.engine_ = make_engine(seed_, child.path_hash_, 1);
    return child;
}

}  // namespace nopa
