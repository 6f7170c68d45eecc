// Copyright 2026 The tpcost Authors.
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tpcost {

/// Base of every error thrown by the library. CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad syntax, bad files, values outside a documented domain.
class InputError : public Error {
 public:
  using Error::Error;
};

class SyntaxError : public InputError {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& msg)
      : InputError(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

#define TPCOST_DEFINE_ERROR(Name, Base) \
  class Name : public Base {            \
   public:                              \
    using Base::Base;                   \
  };

TPCOST_DEFINE_ERROR(ValidationError, InputError)
TPCOST_DEFINE_ERROR(LeafCountExceeded, InputError)
TPCOST_DEFINE_ERROR(OverflowError, InputError)
TPCOST_DEFINE_ERROR(DegenerateLabels, InputError)
TPCOST_DEFINE_ERROR(DomainError, InputError)
TPCOST_DEFINE_ERROR(EmptyDataset, InputError)
TPCOST_DEFINE_ERROR(MissingPeakFlops, InputError)
TPCOST_DEFINE_ERROR(EmptyBatch, InputError)
TPCOST_DEFINE_ERROR(EmptySet, InputError)
TPCOST_DEFINE_ERROR(EmptySelection, InputError)
TPCOST_DEFINE_ERROR(TooFewPoints, InputError)
TPCOST_DEFINE_ERROR(TooFewTasks, InputError)
TPCOST_DEFINE_ERROR(DimensionMismatch, InputError)
TPCOST_DEFINE_ERROR(CycleDetected, InputError)
TPCOST_DEFINE_ERROR(InvalidDevice, InputError)
TPCOST_DEFINE_ERROR(ConfigError, InputError)
TPCOST_DEFINE_ERROR(NotFitted, Error)
TPCOST_DEFINE_ERROR(NonFiniteLoss, Error)
TPCOST_DEFINE_ERROR(ChecksumMismatch, InputError)

#undef TPCOST_DEFINE_ERROR

/// Training produced a non-finite loss.
class DivergenceError : public NonFiniteLoss {
 public:
  DivergenceError(int epoch, const std::string& msg)
      : NonFiniteLoss("diverged at epoch " + std::to_string(epoch) + ": " + msg), epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace tpcost
