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

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nopa/gaussian.hpp"

namespace nopa::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitSelfTest = 3;

/// Inclusive start:stop:step grid; a bare number is a one-point grid.
/// Throws InvalidArgument for step <= 0, stop < start or unparsable text.
std::vector<double> parse_grid(const std::string& spec);

/// vacuum | coherent:X,P | squeezed:R,X|P
InputSpec parse_input(const std::string& spec);

/// Runs the command line; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nopa::cli
