// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/dataio.hpp>
#include <ccmeta/error.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ccmeta
{

namespace
{

std::vector<std::string> split_csv_line( std::string line )
{
    if ( !line.empty() && line.back() == '\r' )
        line.pop_back();
    std::vector<std::string> cells;
    std::string              cell;
    std::istringstream       in( line );
    while ( std::getline( in, cell, ',' ) )
        cells.push_back( cell );
    if ( !line.empty() && line.back() == ',' )
        cells.emplace_back();
    return cells;
}

double parse_double( const std::string &text, const std::string &column, std::size_t row )
{
    double      v   = 0.0;
    const char *end = text.data() + text.size();
    auto [ptr, ec]  = std::from_chars( text.data(), end, v );
    if ( ec != std::errc() || ptr != end || !std::isfinite( v ) )
        throw ValidationError( "manifest row " + std::to_string( row ) + ": column '" + column +
                               "' is not a number: '" + text + "'" );
    return v;
}

int parse_int( const std::string &text, const std::string &column, std::size_t row )
{
    const double v = parse_double( text, column, row );
    if ( v != std::floor( v ) )
        throw ValidationError( "manifest row " + std::to_string( row ) + ": column '" + column +
                               "' must be an integer" );
    return static_cast<int>( v );
}

} // namespace

std::vector<std::string> DatasetManifest::camera_ids() const
{
    std::set<std::string> ids;
    for ( const auto &r : records )
        ids.insert( r.camera_id );
    return { ids.begin(), ids.end() };
}

DatasetManifest parse_manifest( const std::string &text, const std::string &directory,
                                bool check_files )
{
    std::istringstream in( text );
    std::string        line;
    if ( !std::getline( in, line ) )
        throw ValidationError( "manifest is empty" );

    const auto                 header = split_csv_line( line );
    std::map<std::string, int> col;
    for ( std::size_t i = 0; i < header.size(); ++i )
        col[header[i]] = static_cast<int>( i );
    for ( const char *required : { "path", "camera_id", "gt_r", "gt_g", "gt_b" } )
        if ( !col.count( required ) )
            throw ValidationError( std::string( "manifest is missing required column '" ) +
                                   required + "'" );
    const char *mask_cols[4] = { "mask_x0", "mask_y0", "mask_x1", "mask_y1" };
    int         mask_present = 0;
    for ( const char *m : mask_cols )
        mask_present += col.count( m ) ? 1 : 0;
    if ( mask_present != 0 && mask_present != 4 )
        throw ValidationError( "manifest mask columns must appear together (mask_x0, mask_y0, mask_x1, mask_y1)" );

    DatasetManifest manifest;
    manifest.directory = directory;
    std::size_t row    = 0;
    while ( std::getline( in, line ) )
    {
        ++row;
        if ( line.empty() || line == "\r" )
            continue;
        const auto cells = split_csv_line( line );
        if ( cells.size() != header.size() )
            throw ValidationError( "manifest row " + std::to_string( row ) + ": expected " +
                                   std::to_string( header.size() ) + " cells, got " +
                                   std::to_string( cells.size() ) );
        auto cell = [&]( const char *name ) -> const std::string & { return cells[col.at( name )]; };

        const std::string &camera = cell( "camera_id" );
        if ( camera.empty() )
            throw ValidationError( "manifest row " + std::to_string( row ) + ": empty camera_id" );

        std::array<double, 3> gt{ parse_double( cell( "gt_r" ), "gt_r", row ),
                                  parse_double( cell( "gt_g" ), "gt_g", row ),
                                  parse_double( cell( "gt_b" ), "gt_b", row ) };
        const auto gt_rgb = [&] {
            try
            {
                return IlluminantRGB( gt );
            }
            catch ( const ValidationError &e )
            {
                throw ValidationError( "manifest row " + std::to_string( row ) + ": " + e.what() );
            }
        }();
        ManifestRecord rec{ "", camera, gt_rgb, {}, 0.0, std::nullopt };

        std::filesystem::path p( cell( "path" ) );
        if ( p.is_relative() )
            p = std::filesystem::path( directory ) / p;
        rec.path = p.string();
        if ( check_files && !std::filesystem::exists( p ) )
            throw IoError( "manifest row " + std::to_string( row ) + ": missing image " + rec.path );

        if ( col.count( "nominal_cct" ) && !cell( "nominal_cct" ).empty() )
            rec.nominal_cct = parse_double( cell( "nominal_cct" ), "nominal_cct", row );
        if ( col.count( "black_level" ) && !cell( "black_level" ).empty() )
        {
            rec.black_level = parse_double( cell( "black_level" ), "black_level", row );
            if ( rec.black_level < 0.0 )
                throw ValidationError( "manifest row " + std::to_string( row ) + ": negative black_level" );
        }
        if ( mask_present == 4 )
        {
            int empty = 0;
            for ( const char *m : mask_cols )
                empty += cell( m ).empty() ? 1 : 0;
            if ( empty != 0 && empty != 4 )
                throw ValidationError( "manifest row " + std::to_string( row ) + ": partial mask rectangle" );
            if ( empty == 0 )
            {
                MaskRect r{ parse_int( cell( "mask_x0" ), "mask_x0", row ),
                            parse_int( cell( "mask_y0" ), "mask_y0", row ),
                            parse_int( cell( "mask_x1" ), "mask_x1", row ),
                            parse_int( cell( "mask_y1" ), "mask_y1", row ) };
                if ( r.x1 <= r.x0 || r.y1 <= r.y0 )
                    throw ValidationError( "manifest row " + std::to_string( row ) + ": empty mask rectangle" );
                rec.masks.push_back( r );
            }
        }
        manifest.records.push_back( std::move( rec ) );
    }
    return manifest;
}

DatasetManifest load_manifest( const std::string &path, bool check_files )
{
    std::ifstream f( path, std::ios::binary );
    if ( !f )
        throw IoError( "cannot open manifest " + path );
    std::ostringstream ss;
    ss << f.rdbuf();
    const auto dir = std::filesystem::path( path ).parent_path().string();
    return parse_manifest( ss.str(), dir.empty() ? "." : dir, check_files );
}

double gamma_encode( double linear ) { return std::pow( linear, 1.0 / kGamma ); }

double gamma_decode( double encoded ) { return std::pow( encoded, kGamma ); }

std::size_t ProcessedImage::valid_count() const
{
    return static_cast<std::size_t>( std::count( valid.begin(), valid.end(), uint8_t{ 1 } ) );
}

ProcessedImage preprocess( const DecodedImage &raw, const ManifestRecord &record,
                           const PreprocessOptions &opts )
{
    if ( raw.bit_depth != 8 && raw.bit_depth != 16 )
        throw ValidationError( "preprocess: expected 8- or 16-bit input" );
    const std::size_t n = static_cast<std::size_t>( raw.width ) * raw.height;
    if ( raw.samples.size() != n * 3 )
        throw ValidationError( "preprocess: sample count does not match dimensions" );
    for ( const auto &m : record.masks )
        if ( m.x0 < 0 || m.y0 < 0 || m.x1 > raw.width || m.y1 > raw.height || m.x0 >= m.x1 ||
             m.y0 >= m.y1 )
            throw ValidationError( "preprocess: mask rectangle outside the image bounds" );

    const double full  = raw.bit_depth == 16 ? 65535.0 : 255.0;
    const double black = record.black_level;
    if ( !( black >= 0.0 && black < full ) )
        throw ValidationError( "preprocess: black level must lie in [0, full scale)" );
    const double range = full - black;

    ProcessedImage out{ RgbImage( raw.width, raw.height ), std::vector<uint8_t>( n, 1 ),
                        record.camera_id, record.gt_illuminant, std::nullopt };
    for ( std::size_t i = 0; i < raw.samples.size(); ++i )
    {
        double v = std::max( static_cast<double>( raw.samples[i] ) - black, 0.0 );
        if ( raw.bit_depth == 16 )
            v = std::min( std::round( v * 255.0 / range ), 255.0 ) / 255.0;
        else
            v = std::min( v / range, 1.0 );
        if ( opts.apply_gamma )
            v = gamma_encode( v );
        out.image.data[i] = static_cast<float>( v );
    }
    for ( const auto &m : record.masks )
        for ( int y = m.y0; y < m.y1; ++y )
            for ( int x = m.x0; x < m.x1; ++x )
            {
                const auto p = static_cast<std::size_t>( y ) * raw.width + x;
                out.valid[p] = 0;
                for ( int k = 0; k < 3; ++k )
                    out.image.data[p * 3 + k] = 0.0f;
            }
    return out;
}

std::vector<float> crop_resize_at( const RgbImage &img, int x0, int y0, int side, int out_size )
{
    if ( out_size < 1 || side < 1 || x0 < 0 || y0 < 0 || x0 + side > img.width ||
         y0 + side > img.height )
        throw ValidationError( "crop_resize: crop outside the image" );

    std::vector<float> out( static_cast<std::size_t>( out_size ) * out_size * 3 );
    const double       scale = static_cast<double>( side ) / out_size;
    auto               src   = [&]( int i, int &lo, int &hi, double &frac ) {
        double s = ( i + 0.5 ) * scale - 0.5;
        s        = std::clamp( s, 0.0, static_cast<double>( side - 1 ) );
        lo       = static_cast<int>( std::floor( s ) );
        hi       = std::min( lo + 1, side - 1 );
        frac     = s - lo;
    };
    for ( int oy = 0; oy < out_size; ++oy )
    {
        int    ya, yb;
        double fy;
        src( oy, ya, yb, fy );
        for ( int ox = 0; ox < out_size; ++ox )
        {
            int    xa, xb;
            double fx;
            src( ox, xa, xb, fx );
            for ( int k = 0; k < 3; ++k )
            {
                const double v00 = img.at( x0 + xa, y0 + ya, k );
                const double v10 = img.at( x0 + xb, y0 + ya, k );
                const double v01 = img.at( x0 + xa, y0 + yb, k );
                const double v11 = img.at( x0 + xb, y0 + yb, k );
                const double top = v00 + fx * ( v10 - v00 );
                const double bot = v01 + fx * ( v11 - v01 );
                out[( static_cast<std::size_t>( oy ) * out_size + ox ) * 3 + k] =
                    static_cast<float>( top + fy * ( bot - top ) );
            }
        }
    }
    return out;
}

std::vector<float> crop_resize( const ProcessedImage &img, int out_size, std::mt19937_64 &rng )
{
    const int max_side = std::min( img.image.width, img.image.height );
    if ( out_size < 1 || max_side < out_size )
        throw ValidationError( "crop_resize: image smaller than the output size" );
    std::uniform_int_distribution<int> side_dist( out_size, max_side );
    const int                          side = side_dist( rng );
    std::uniform_int_distribution<int> px( 0, img.image.width - side );
    std::uniform_int_distribution<int> py( 0, img.image.height - side );
    const int                          x0 = px( rng );
    const int                          y0 = py( rng );
    return crop_resize_at( img.image, x0, y0, side, out_size );
}

std::vector<float> full_resize( const ProcessedImage &img, int out_size )
{
    const int side = std::min( img.image.width, img.image.height );
    if ( out_size < 1 || side < out_size )
        throw ValidationError( "full_resize: image smaller than the output size" );
    return crop_resize_at( img.image, ( img.image.width - side ) / 2,
                           ( img.image.height - side ) / 2, side, out_size );
}

} // namespace ccmeta

#include <ccmeta/parallel.hpp>

namespace ccmeta
{

LoadedDataset load_dataset( DatasetManifest manifest, int workers )
{
    LoadedDataset ds;
    ds.images.resize( manifest.records.size(),
                      ProcessedImage{ {}, {}, {}, IlluminantRGB( 1, 1, 1 ), std::nullopt } );
    parallel_for( manifest.records.size(), workers, [&]( std::size_t i ) {
        ds.images[i] = preprocess( read_png( manifest.records[i].path ), manifest.records[i] );
    } );
    ds.manifest = std::move( manifest );
    return ds;
}

LoadedDataset load_dataset( const std::string &manifest_path, int workers )
{
    return load_dataset( load_manifest( manifest_path ), workers );
}

} // namespace ccmeta
