// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <string>

namespace ccmeta
{

/// Whole-file text I/O; failures throw IoError naming the path.
std::string read_text_file( const std::string &path );
void        write_text_file( const std::string &path, const std::string &text );

} // namespace ccmeta
