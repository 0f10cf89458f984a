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

#include <string>

#include <json.hpp>

namespace nopa {

using Json = nlohmann::ordered_json;

/// Renders a finite double with 17 significant digits (`%.17g`), which
/// round-trips every IEEE-754 binary64 value. Throws InvalidArgument on
/// NaN or infinity since JSON has no spelling for them.
std::string format_double(double value);

/// Serializes `value` with object keys in insertion order and every
/// floating-point number rendered through format_double. `indent < 0`
/// gives the compact form with no whitespace.
std::string dump_json(const Json& value, int indent = -1);

/// Parses JSON text, converting parser failures to DecodeError.
Json parse_json(const std::string& text);

}  // namespace nopa
