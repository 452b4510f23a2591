// Copyright 2026 The allpairs Authors.
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

#ifndef ALLPAIRS_ERRORS_HPP
#define ALLPAIRS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace allpairs {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised by application callbacks; aborts the run.
class AppError : public Error {
 public:
  using Error::Error;
};

class MalformedInput : public AppError {
 public:
  using AppError::AppError;
};

class SlotOverflow : public AppError {
 public:
  using AppError::AppError;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class ConnectFailure : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class FrameError : public Error {
 public:
  using Error::Error;
};

/// The run cannot make progress: no pending events (or no completions for
/// the stall window) while pairs remain outstanding.
class DeadlockError : public Error {
 public:
  using Error::Error;
};

/// A pair was reported complete twice.
class LedgerError : public Error {
 public:
  using Error::Error;
};

}  // namespace allpairs

#endif  // ALLPAIRS_ERRORS_HPP
