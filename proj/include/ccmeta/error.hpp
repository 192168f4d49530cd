// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <stdexcept>
#include <string>

namespace ccmeta
{

/// Input or configuration that violates a documented precondition.
class ValidationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Failure to read or write a file.
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace ccmeta
