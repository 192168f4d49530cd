// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/image.hpp>

#include <png.h>

#include <cstdio>
#include <memory>

namespace ccmeta
{

namespace
{

struct FileCloser
{
    void operator()( std::FILE *f ) const { std::fclose( f ); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

DecodedImage read_png( const std::string &path )
{
    FilePtr fp( std::fopen( path.c_str(), "rb" ) );
    if ( !fp )
        throw IoError( "cannot open " + path );

    png_structp png = png_create_read_struct( PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr );
    png_infop   info = png ? png_create_info_struct( png ) : nullptr;
    if ( !png || !info )
    {
        png_destroy_read_struct( &png, &info, nullptr );
        throw IoError( "libpng initialisation failed" );
    }

    DecodedImage          out;
    std::vector<png_byte> buffer;
    if ( setjmp( png_jmpbuf( png ) ) )
    {
        png_destroy_read_struct( &png, &info, nullptr );
        throw IoError( "failed to decode PNG " + path );
    }

    png_init_io( png, fp.get() );
    png_read_info( png, info );
    const auto color = png_get_color_type( png, info );
    const int  depth = png_get_bit_depth( png, info );

    if ( color == PNG_COLOR_TYPE_PALETTE )
        png_set_palette_to_rgb( png );
    if ( color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA )
    {
        if ( depth < 8 )
            png_set_expand_gray_1_2_4_to_8( png );
        png_set_gray_to_rgb( png );
    }
    if ( color & PNG_COLOR_MASK_ALPHA )
        png_set_strip_alpha( png );
    if ( depth == 16 )
        png_set_swap( png );
    png_read_update_info( png, info );

    out.width     = static_cast<int>( png_get_image_width( png, info ) );
    out.height    = static_cast<int>( png_get_image_height( png, info ) );
    out.bit_depth = depth == 16 ? 16 : 8;

    const std::size_t rowbytes = png_get_rowbytes( png, info );
    buffer.resize( rowbytes * static_cast<std::size_t>( out.height ) );
    std::vector<png_bytep> rows( static_cast<std::size_t>( out.height ) );
    for ( int y = 0; y < out.height; ++y )
        rows[y] = buffer.data() + rowbytes * static_cast<std::size_t>( y );
    png_read_image( png, rows.data() );
    png_read_end( png, nullptr );
    png_destroy_read_struct( &png, &info, nullptr );

    const std::size_t n = static_cast<std::size_t>( out.width ) * out.height * 3;
    out.samples.resize( n );
    if ( out.bit_depth == 16 )
    {
        for ( std::size_t i = 0; i < n; ++i )
            out.samples[i] = static_cast<uint16_t>( buffer[2 * i] | ( buffer[2 * i + 1] << 8 ) );
    }
    else
    {
        for ( std::size_t i = 0; i < n; ++i )
            out.samples[i] = buffer[i];
    }
    return out;
}

void write_png( const std::string &path, const DecodedImage &img )
{
    if ( img.bit_depth != 8 && img.bit_depth != 16 )
        throw ValidationError( "write_png: bit depth must be 8 or 16" );
    const std::size_t n = static_cast<std::size_t>( img.width ) * img.height * 3;
    if ( img.samples.size() != n )
        throw ValidationError( "write_png: sample count does not match dimensions" );

    FilePtr fp( std::fopen( path.c_str(), "wb" ) );
    if ( !fp )
        throw IoError( "cannot write " + path );

    png_structp png = png_create_write_struct( PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr );
    png_infop   info = png ? png_create_info_struct( png ) : nullptr;
    if ( !png || !info )
    {
        png_destroy_write_struct( &png, &info );
        throw IoError( "libpng initialisation failed" );
    }

    const int             bpp = img.bit_depth / 8;
    std::vector<png_byte> buffer( n * bpp );
    for ( std::size_t i = 0; i < n; ++i )
    {
        if ( bpp == 2 )
        {
            // PNG stores 16-bit samples big-endian.
            buffer[2 * i]     = static_cast<png_byte>( img.samples[i] >> 8 );
            buffer[2 * i + 1] = static_cast<png_byte>( img.samples[i] & 0xff );
        }
        else
        {
            buffer[i] = static_cast<png_byte>( img.samples[i] );
        }
    }
    std::vector<png_bytep> rows( static_cast<std::size_t>( img.height ) );
    for ( int y = 0; y < img.height; ++y )
        rows[y] = buffer.data() + static_cast<std::size_t>( y ) * img.width * 3 * bpp;

    if ( setjmp( png_jmpbuf( png ) ) )
    {
        png_destroy_write_struct( &png, &info );
        throw IoError( "failed to encode PNG " + path );
    }
    png_init_io( png, fp.get() );
    png_set_IHDR( png, info, static_cast<png_uint_32>( img.width ),
                  static_cast<png_uint_32>( img.height ), img.bit_depth, PNG_COLOR_TYPE_RGB,
                  PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT );
    png_write_info( png, info );
    png_write_image( png, rows.data() );
    png_write_end( png, nullptr );
    png_destroy_write_struct( &png, &info );
}

} // namespace ccmeta
