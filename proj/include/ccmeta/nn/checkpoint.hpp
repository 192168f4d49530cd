// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/nn/network.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ccmeta::nn
{

inline constexpr char          kCheckpointMagic[8] = { 'C', 'C', 'M', 'L', 'C', 'K', 'P', 'T' };
inline constexpr std::uint32_t kCheckpointVersion  = 1;

/// Binary layout, all integers and floats little-endian:
///   magic[8] "CCMLCKPT", u32 version,
///   spec: i32 height, i32 width, i32 channels, u32 layer_count, {u8 kind, i32 out} * layer_count,
///   u64 iterations, u32 len + bytes variant,
///   u64 count + f32 * count theta,
///   alpha: u8 kind, i32 rows, i32 cols, f32 * rows*cols,
///   u32 len + bytes config echo (`key = value` lines).
struct Checkpoint
{
    NetworkSpec        spec;
    std::vector<float> theta;
    AlphaState         alpha;
    std::string        variant;
    std::string        config_echo;
    std::uint64_t      iterations = 0;

    bool operator==( const Checkpoint & ) const = default;
};

std::vector<std::uint8_t> serialize_checkpoint( const Checkpoint &ckpt );
/// Throws IoError on truncation or a bad header, ValidationError on an
/// inconsistent payload.
Checkpoint parse_checkpoint( const std::vector<std::uint8_t> &bytes );

void       write_checkpoint( const std::filesystem::path &path, const Checkpoint &ckpt );
Checkpoint read_checkpoint( const std::filesystem::path &path );

} // namespace ccmeta::nn
