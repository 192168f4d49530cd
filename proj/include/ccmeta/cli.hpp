// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ostream>

namespace ccmeta
{

/// Entry point of the `ccmeta` command. Returns the process exit code:
/// 0 success, 1 validation error, 2 I/O error.
int run_cli( int argc, const char *const *argv, std::ostream &out, std::ostream &err );

} // namespace ccmeta
