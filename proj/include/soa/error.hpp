// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The soa-pipeline Authors

#pragma once

#include <stdexcept>
#include <string>

namespace soa {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kData = 3,
    kDegenerate = 4,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad configuration or a violated precondition on caller-supplied arguments.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ExitCode::kValidation, what) {}
};

/// Unreadable or malformed input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

/// Training cannot proceed, e.g. a single-class label vector.
class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ExitCode::kDegenerate, what) {}
};

}  // namespace soa
