// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/textio.hpp>

#include <fmt/format.h>

#include <fstream>
#include <sstream>

namespace ccmeta
{

std::string read_text_file( const std::string &path )
{
    std::ifstream f( path, std::ios::binary );
    if ( !f )
        throw IoError( fmt::format( "cannot open '{}' for reading", path ) );
    std::ostringstream ss;
    ss << f.rdbuf();
    if ( f.bad() )
        throw IoError( fmt::format( "read failed for '{}'", path ) );
    return ss.str();
}

void write_text_file( const std::string &path, const std::string &text )
{
    std::ofstream f( path, std::ios::binary | std::ios::trunc );
    if ( !f )
        throw IoError( fmt::format( "cannot open '{}' for writing", path ) );
    f.write( text.data(), static_cast<std::streamsize>( text.size() ) );
    f.close();
    if ( !f )
        throw IoError( fmt::format( "write failed for '{}'", path ) );
}

} // namespace ccmeta
