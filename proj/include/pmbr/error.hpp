/*
 * Copyright 2026 The pruning-mbr Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace pmbr {

// Every error raised by the library derives from Error. The CLI maps the
// subclasses onto process exit codes (see cli.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or configuration (exit code 1).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed corpus / matrix line. Carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// File system failures (exit code 2).
class IoError : public Error {
 public:
  using Error::Error;
};

// Utility backend failures, including remote transport (exit code 3).
class BackendError : public Error {
 public:
  using Error::Error;
};

// The remote peer answered with something that does not follow the
// scoring protocol.
class ProtocolError : public BackendError {
 public:
  using BackendError::BackendError;
};

// Broken internal invariant, e.g. a bootstrap resample touching an
// unscored pair. Always a bug.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace pmbr
