// Copyright 2026 The fairmle Authors.
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

#ifndef FAIRMLE_ERROR_HPP_
#define FAIRMLE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace fairmle {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or a malformed file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Caller passed arguments outside an operation's domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Iterative procedure failed to reach its tolerance. `trace` carries
// whatever diagnostics the solver collected.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::string trace = {})
      : Error(what), trace_(std::move(trace)) {}
  const std::string& trace() const noexcept { return trace_; }

 private:
  std::string trace_;
};

// Logistic MLE does not exist (perfect prediction of the response).
class SeparationError : public Error {
 public:
  using Error::Error;
};

// Information or design matrix is rank deficient.
class SingularError : public Error {
 public:
  using Error::Error;
};

// Estimated propensity below the positivity floor.
class PositivityError : public Error {
 public:
  using Error::Error;
};

// The moment constraint cannot be met by any probability vector.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

}  // namespace fairmle

#endif  // FAIRMLE_ERROR_HPP_
