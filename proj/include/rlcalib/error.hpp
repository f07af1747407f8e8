// Copyright 2026 The rlcalib Authors
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

namespace rlcalib
{

enum class ErrorKind
{
  InvalidArgument,
  DegeneratePoint,
  PoisonedValue,
  Divergence,
  Config,
  Schema,
  EmptyDataset,
  NonUnitDirection,
  EnergyOutOfRange,
  DanglingTarget,
  Io,
};

const char * to_string(ErrorKind kind);

/// Base exception for every failure raised by the library. `kind()` is what
/// callers (the CLI in particular) switch on to pick an exit code.
class Error : public std::runtime_error
{
public:
  Error(ErrorKind kind, const std::string & what)
  : std::runtime_error(what), kind_(kind)
  {
  }

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

}  // namespace rlcalib
