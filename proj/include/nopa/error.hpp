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

#include <stdexcept>
#include <string>

namespace nopa {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad parameter, unknown label, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A state or ledger is internally inconsistent (e.g. non-positive marginal variance).
class StateError : public Error {
public:
    using Error::Error;
};

/// Malformed serialized input.
class DecodeError : public Error {
public:
    using Error::Error;
};

/// An event arrived in a station phase that does not accept it, or the
/// transport broke its delivery contract.
class ProtocolViolation : public Error {
public:
    using Error::Error;
};

}  // namespace nopa
