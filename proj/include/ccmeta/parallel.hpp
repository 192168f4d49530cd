// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ccmeta
{

/// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; results must be written to per-index slots by the caller.
/// The first exception thrown by any call is rethrown.
template <class Fn>
void parallel_for( std::size_t n, int workers, Fn &&fn )
{
    const auto threads = static_cast<std::size_t>( std::max( 1, workers ) );
    if ( threads == 1 || n <= 1 )
    {
        for ( std::size_t i = 0; i < n; ++i )
            fn( i );
        return;
    }

    std::atomic<std::size_t> next{ 0 };
    std::exception_ptr       error;
    std::mutex               error_mutex;
    auto                     body = [&] {
        for ( std::size_t i = next++; i < n; i = next++ )
        {
            try
            {
                fn( i );
            }
            catch ( ... )
            {
                std::lock_guard lock( error_mutex );
                if ( !error )
                    error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for ( std::size_t t = 1; t < std::min( threads, n ); ++t )
        pool.emplace_back( body );
    body();
    for ( auto &t : pool )
        t.join();
    if ( error )
        std::rethrow_exception( error );
}

} // namespace ccmeta
