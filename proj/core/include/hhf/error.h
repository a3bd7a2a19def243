// Copyright 2026 The HHF Toolkit Authors.
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

namespace hhf {

// Base class for all errors raised by the toolkit. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Operand shapes (matrix dims, code lengths) do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A scalar argument is outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Malformed input file or text. Messages carry the location.
class ParseError : public Error {
 public:
  using Error::Error;
};

// I/O failure (cannot open, short read, short write).
class IoError : public Error {
 public:
  using Error::Error;
};

// A numeric quantity left its admissible range: zero-norm rows, code
// parameters with no valid code, oracle requests outside the feasible range.
class DomainError : public Error {
 public:
  using Error::Error;
};

// A split protocol asks for more samples than a class holds.
class SplitError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, long step)
      : Error(what), epoch_(epoch), step_(step) {}

  int epoch() const { return epoch_; }
  long step() const { return step_; }

 private:
  int epoch_;
  long step_;
};

}  // namespace hhf
