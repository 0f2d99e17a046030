// Copyright 2026 corpus-forge authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
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

namespace corpus_forge {

/// Base class for all toolkit errors. CLI maps these to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structured-text file could not be parsed. Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& what)
      : Error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// An id occurred more than once where uniqueness is required.
class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate id \"" + id + "\""), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

/// Audio inputs disagree on sample rate, channel count or sample width.
class FormatMismatchError : public Error {
 public:
  using Error::Error;
};

/// A file is not RIFF/WAVE PCM or its header is damaged.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

/// The reference transcript normalizes to zero tokens; WER is undefined.
class EmptyReferenceError : public Error {
 public:
  using Error::Error;
};

/// A normalizer config file violates the config invariants.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Filesystem-level failure (unreadable root, unwritable output).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace corpus_forge
