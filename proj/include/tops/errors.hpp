/*
 * Copyright 2026 the tops authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TOPS_ERRORS_HPP
#define TOPS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tops {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data: CSV problems, schema mismatches, malformed model files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration (experiment config, schema file, CLI values).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A learner could not produce a usable predictor.
class TrainError : public Error {
 public:
  using Error::Error;
};

/// Fewer rows than the configured minimum for fitting.
class InsufficientDataError : public TrainError {
 public:
  using TrainError::TrainError;
};

/// AUC requested on a single-class label set.
class AucUndefinedError : public Error {
 public:
  using Error::Error;
};

/// Model file cannot be decoded (version, schema, checksum).
class ModelFormatError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace tops

#endif  // TOPS_ERRORS_HPP
