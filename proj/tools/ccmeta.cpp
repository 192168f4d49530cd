// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/cli.hpp>

#include <iostream>

int main( int argc, char **argv )
{
    return ccmeta::run_cli( argc, argv, std::cout, std::cerr );
}
