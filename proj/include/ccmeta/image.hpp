// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ccmeta
{

/// Interleaved H x W x 3 float image, row-major.
struct RgbImage
{
    int                width  = 0;
    int                height = 0;
    std::vector<float> data;

    RgbImage() = default;
    RgbImage( int w, int h, float fill = 0.0f )
        : width( w ), height( h ), data( static_cast<std::size_t>( w ) * h * 3, fill )
    {}

    float &at( int x, int y, int k ) { return data[( static_cast<std::size_t>( y ) * width + x ) * 3 + k]; }
    float  at( int x, int y, int k ) const
    {
        return data[( static_cast<std::size_t>( y ) * width + x ) * 3 + k];
    }
    std::size_t pixels() const { return static_cast<std::size_t>( width ) * height; }
};

/// Integer samples as decoded from a PNG: interleaved RGB, 8 or 16 bit.
struct DecodedImage
{
    int                   width     = 0;
    int                   height    = 0;
    int                   bit_depth = 8;
    std::vector<uint16_t> samples;
};

/// Reads an 8- or 16-bit PNG, expanding gray/palette and dropping alpha.
DecodedImage read_png( const std::string &path );

/// Writes an RGB PNG at `bit_depth` 8 or 16. Throws IoError.
void write_png( const std::string &path, const DecodedImage &img );

} // namespace ccmeta
