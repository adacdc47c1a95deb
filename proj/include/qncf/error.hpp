// Copyright 2026 The qncf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace qncf {

/// Input violates a structural assumption (symmetry, rank, separation, ...).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A newly selected column lies (numerically) in the span of earlier ones.
class DependenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear system too ill-conditioned to solve at the requested accuracy.
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Post-selection outcome has (numerically) zero probability.
class DegenerateRoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Anchor-index sanity gate failed; the target-state source looks corrupted.
class AnchorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qncf
