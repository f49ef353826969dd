// Copyright 2026-present the csk project
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

namespace csk {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor rank or extent does not match what an operation requires.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// An index (class neuron, layer tap, ...) is out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration values; maps to CLI exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data is missing or unusable; maps to CLI exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

/// CAV training cannot proceed because no other concept exists.
class NoNegativesError : public DataError {
public:
    explicit NoNegativesError(const std::string& concept_id)
        : DataError("no negatives: concept '" + concept_id + "' is the only concept in the dataset") {}
};

/// Cosine similarity requested on a zero-norm vector.
class UndefinedCosineError : public Error {
public:
    using Error::Error;
};

}  // namespace csk
