// Copyright 2026 The tokplan Authors
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

namespace tokplan {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed, missing or out-of-contract input data (CLI exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant does not hold, e.g. a codebook whose tokens are
/// closer than its disk radius (CLI exit code 3).
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace tokplan
