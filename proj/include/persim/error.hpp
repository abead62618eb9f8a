// Copyright 2026 The Persim Authors.
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

namespace persim {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A line of an event log that could not be parsed. `line_no` is 1-based.
class MalformedLine : public Error {
 public:
  MalformedLine(std::size_t line_no, const std::string& reason)
      : Error("line " + std::to_string(line_no) + ": " + reason),
        line_no_(line_no) {}

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class ConfigInvalid : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class TooFewItems : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class NoNegativesAvailable : public Error {
 public:
  using Error::Error;
};

class NoTrainableUsers : public Error {
 public:
  using Error::Error;
};

class UnknownQueryItem : public Error {
 public:
  using Error::Error;
};

class EmptyTruth : public Error {
 public:
  using Error::Error;
};

class NoQueries : public Error {
 public:
  using Error::Error;
};

/// Artifact or input file that is missing or unreadable.
class InputError : public Error {
 public:
  using Error::Error;
};

}  // namespace persim
