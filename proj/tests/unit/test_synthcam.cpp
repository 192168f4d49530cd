// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/dataio.hpp>
#include <ccmeta/error.hpp>
#include <ccmeta/synthcam.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace ccmeta;
namespace fs = std::filesystem;

namespace
{

const SpectralGrid kGrid = SpectralGrid::visible( 5.0 );

std::string slurp( const fs::path &p )
{
    std::ifstream      f( p, std::ios::binary );
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path temp_dir( const std::string &name )
{
    auto d = fs::temp_directory_path() / ( "ccmeta_synth_" + name );
    fs::remove_all( d );
    return d;
}

int argmax( const std::vector<double> &v )
{
    return static_cast<int>( std::max_element( v.begin(), v.end() ) - v.begin() );
}

} // namespace

TEST( Css, ZeroJitterIsCanonical )
{
    const auto a = make_css( 1, 0.0 );
    const auto b = make_css( 999, 0.0 );
    EXPECT_EQ( a.curves, b.curves );
    EXPECT_EQ( a.params.peak_nm[0], 615.0 );
    EXPECT_EQ( a.params.peak_nm[1], 535.0 );
    EXPECT_EQ( a.params.peak_nm[2], 450.0 );
}

TEST( Css, DeterministicAndOrdered )
{
    EXPECT_EQ( make_css( 42, 0.2 ).curves, make_css( 42, 0.2 ).curves );
    const auto a = make_css( 1, 0.2 );
    const auto b = make_css( 2, 0.2 );
    double     shift = 0.0;
    for ( int k = 0; k < 3; ++k )
        shift = std::max( shift, std::abs( a.params.peak_nm[k] - b.params.peak_nm[k] ) );
    EXPECT_GT( shift, 1.0 );
    for ( std::uint64_t seed = 0; seed < 50; ++seed )
    {
        const auto c = make_css( seed, 0.3 );
        EXPECT_LT( c.params.peak_nm[2], c.params.peak_nm[1] );
        EXPECT_LT( c.params.peak_nm[1], c.params.peak_nm[0] );
        for ( int k = 0; k < 3; ++k )
        {
            EXPECT_GT( *std::max_element( c.curves[k].begin(), c.curves[k].end() ), 0.0 );
            for ( double v : c.curves[k] )
                EXPECT_GE( v, 0.0 );
        }
        EXPECT_LT( argmax( c.curves[2] ), argmax( c.curves[1] ) );
        EXPECT_LT( argmax( c.curves[1] ), argmax( c.curves[0] ) );
    }
    EXPECT_THROW( make_css( 1, 0.5 ), ValidationError );
}

TEST( Spd, MatchesPlanckianChromaticity )
{
    const auto spd = planckian_spd( 5000.0 );
    // chromaticity from the SPD against the same CMFs
    const auto &t = cie1931_cmf();
    double      xyz[3];
    for ( int k = 0; k < 3; ++k )
    {
        std::vector<double> f( kGrid.count );
        for ( std::size_t i = 0; i < kGrid.count; ++i )
            f[i] = spd.values[i] * t.cmf[k][i];
        xyz[k] = trapezoid( f, 5.0 );
    }
    const double s = xyz[0] + xyz[1] + xyz[2];
    const auto   c = planckian_chromaticity( Kelvin( 5000.0 ) );
    EXPECT_NEAR( xyz[0] / s, c.x(), 1e-6 );
    EXPECT_NEAR( xyz[1] / s, c.y(), 1e-6 );
    EXPECT_NEAR( xyz[1], 1.0, 1e-12 );
    for ( double v : spd.values )
        EXPECT_GE( v, 0.0 );
    EXPECT_THROW( planckian_spd( 1000.0 ), ValidationError );
    EXPECT_THROW( planckian_spd( 13000.0 ), ValidationError );
}

TEST( Spd, JitterMovesOffLocusAndKeepsNormalisation )
{
    const auto a = planckian_spd( 5000.0, 7 );
    const auto b = planckian_spd( 5000.0, 7 );
    EXPECT_EQ( a.values, b.values );
    EXPECT_EQ( a.family, SpdFamily::planckian_jittered );
    EXPECT_NE( a.values, planckian_spd( 5000.0 ).values );
}

TEST( IlluminantRgb, WarmIsRedder )
{
    const auto css  = make_css( 0, 0.0 );
    const auto warm = illuminant_rgb( css, planckian_spd( 2800.0 ) );
    const auto cold = illuminant_rgb( css, planckian_spd( 8000.0 ) );
    EXPECT_GT( warm.r() / warm.b(), cold.r() / cold.b() );
}

TEST( IlluminantRgb, Linearity )
{
    const auto css = make_css( 3, 0.1 );
    auto       spd = planckian_spd( 4500.0 );
    const auto base = illuminant_rgb( css, spd );
    for ( double s : { 0.5, 2.0, 4.0 } )
    {
        auto scaled = spd;
        for ( auto &v : scaled.values )
            v *= s;
        const auto r = illuminant_rgb( css, scaled );
        for ( int k = 0; k < 3; ++k )
            EXPECT_NEAR( r[k], s * base[k], 1e-14 * s * base[k] );
    }
    for ( int ch = 0; ch < 3; ++ch )
    {
        auto c2 = css;
        for ( auto &v : c2.curves[ch] )
            v *= 3.0;
        const auto r = illuminant_rgb( c2, spd );
        for ( int k = 0; k < 3; ++k )
            EXPECT_NEAR( r[k], ( k == ch ? 3.0 : 1.0 ) * base[k], 1e-14 * 3.0 * base[k] );
    }
}

TEST( IlluminantRgb, NarrowBandSeparatesChannels )
{
    const auto    css = make_css( 0, 0.0 );
    IlluminantSPD spd{ kGrid, std::vector<double>( kGrid.count, 0.0 ), 0.0, SpdFamily::planckian };
    // 700 nm: the green and blue tails are negligible
    spd.values[( 700 - 380 ) / 5] = 1.0;
    const auto rgb = illuminant_rgb( css, spd );
    EXPECT_GT( rgb.r(), 0.0 );
    EXPECT_LT( rgb.g(), 1e-4 * rgb.r() );
    EXPECT_LT( rgb.b(), 1e-4 * rgb.r() );
}

TEST( IlluminantRgb, FineGridAgreement )
{
    const auto css  = make_css( 0, 0.0 );
    const auto fine = SpectralGrid::visible( 1.0 );
    const auto a    = illuminant_rgb( css, planckian_spd( 6500.0 ) );
    const auto b    = illuminant_rgb( css.resampled( fine ), planckian_spd( 6500.0, std::nullopt, fine ) );
    for ( int k = 0; k < 3; ++k )
        EXPECT_NEAR( a[k], b[k], 1e-3 * b[k] );
    // calibration: 6504 K renders to G = 0.3
    EXPECT_NEAR( illuminant_rgb( css, planckian_spd( 6504.0 ) ).g(), 0.3, 1e-9 );
    EXPECT_THROW( illuminant_rgb( css.resampled( fine ), planckian_spd( 6500.0 ) ), ValidationError );
}

TEST( Render, FlatReflectanceEqualsIlluminant )
{
    const auto css = make_css( 5, 0.15 );
    for ( double t : { 2500.0, 4000.0, 6500.0, 9000.0 } )
    {
        const auto spd   = planckian_spd( t, 3 );
        const auto scene = render_scene( css, spd, ReflectancePatchSet::uniform( kGrid, 8, 6, 1.0 ) );
        EXPECT_EQ( scene.image.width, 8 );
        EXPECT_EQ( scene.image.height, 6 );
        for ( std::size_t p = 0; p < scene.image.pixels(); ++p )
            for ( int k = 0; k < 3; ++k )
                EXPECT_EQ( scene.image.data[p * 3 + k], static_cast<float>( scene.gt_illuminant[k] ) );
    }
}

TEST( Render, ZeroReflectanceIsBlack )
{
    const auto scene = render_scene( make_css( 0, 0.0 ), planckian_spd( 5000.0 ),
                                     ReflectancePatchSet::uniform( kGrid, 4, 4, 0.0 ) );
    for ( float v : scene.image.data )
        EXPECT_EQ( v, 0.0f );
    EXPECT_GT( scene.gt_illuminant.g(), 0.0 );
}

TEST( Render, CameraRatiosFollowIlluminants )
{
    const auto spd = planckian_spd( 4200.0 );
    const auto p   = ReflectancePatchSet::uniform( kGrid, 4, 4, 0.6 );
    const auto a   = render_scene( make_css( 1, 0.2 ), spd, p );
    const auto b   = render_scene( make_css( 2, 0.2 ), spd, p );
    for ( int k = 0; k < 3; ++k )
        EXPECT_NEAR( a.image.data[k] / b.image.data[k], a.gt_illuminant[k] / b.gt_illuminant[k], 1e-5 );
}

TEST( Render, Validation )
{
    const auto css = make_css( 0, 0.0 );
    EXPECT_THROW( render_scene( css, planckian_spd( 5000.0 ), ReflectancePatchSet::uniform( kGrid, 3, 8, 1.0 ) ),
                  ValidationError );
    EXPECT_THROW( render_scene( css, planckian_spd( 5000.0 ),
                                ReflectancePatchSet::uniform( SpectralGrid::visible( 10.0 ), 8, 8, 1.0 ) ),
                  ValidationError );
}

TEST( Render, NoiseIsSeededAndClamped )
{
    const auto css = make_css( 0, 0.0 );
    const auto p   = ReflectancePatchSet::uniform( kGrid, 8, 8, 0.5 );
    const auto a   = render_scene( css, planckian_spd( 5000.0 ), p, SensorNoise{ 0.05, 9 } );
    const auto b   = render_scene( css, planckian_spd( 5000.0 ), p, SensorNoise{ 0.05, 9 } );
    EXPECT_EQ( a.image.data, b.image.data );
    for ( float v : a.image.data )
    {
        EXPECT_GE( v, 0.0f );
        EXPECT_LE( v, 1.0f );
    }
}

TEST( Patchwork, ReflectancesInRange )
{
    std::mt19937_64 rng( 4 );
    const auto      bank = make_reflectance_bank( 32, rng, kGrid );
    ASSERT_EQ( bank.size(), 32u );
    for ( const auto &c : bank )
        for ( double v : c )
        {
            EXPECT_GE( v, 0.0 );
            EXPECT_LE( v, 1.0 );
        }
    const auto p = make_patchwork( bank, 16, 12, 3, 10, rng, kGrid );
    EXPECT_EQ( p.patch_index.size(), 16u * 12u );
    for ( auto i : p.patch_index )
        EXPECT_LT( i, p.curves.size() );
}

TEST( DeriveSeed, DistinctStreams )
{
    EXPECT_EQ( derive_seed( 1, 2, 3 ), derive_seed( 1, 2, 3 ) );
    EXPECT_NE( derive_seed( 1, 2, 3 ), derive_seed( 1, 3, 2 ) );
    EXPECT_NE( derive_seed( 1, 2 ), derive_seed( 2, 2 ) );
}

TEST( Dataset, ConfigValidation )
{
    SynthConfig c;
    c.cameras = 2;
    EXPECT_THROW( c.validate(), ValidationError );
    c           = {};
    c.scenes_per_camera = 10;
    EXPECT_THROW( c.validate(), ValidationError );
    c         = {};
    c.cct_min = 5000;
    EXPECT_THROW( c.validate(), ValidationError );
    EXPECT_NO_THROW( SynthConfig{}.validate() );
}

TEST( Dataset, GeneratesDeterministicManifest )
{
    SynthConfig c;
    c.cameras           = 3;
    c.scenes_per_camera = 40;
    c.image_size        = 16;
    c.seed              = 17;
    const auto d1 = temp_dir( "a" ), d2 = temp_dir( "b" );
    const auto recs = generate_dataset( c, d1.string() );
    generate_dataset( c, d2.string() );
    ASSERT_EQ( recs.size(), 120u );
    const auto m1 = slurp( d1 / "manifest.csv" );
    EXPECT_EQ( m1, slurp( d2 / "manifest.csv" ) );
    EXPECT_EQ( m1.substr( 0, m1.find( '\n' ) ), "path,camera_id,gt_r,gt_g,gt_b,nominal_cct" );
    EXPECT_EQ( slurp( d1 / recs[7].path ), slurp( d2 / recs[7].path ) );

    double lo = 1e9, hi = 0;
    for ( const auto &r : recs )
    {
        for ( int k = 0; k < 3; ++k )
            EXPECT_GT( r.gt_illuminant[k], 0.0 );
        lo = std::min( lo, r.gt_illuminant.r() / r.gt_illuminant.b() );
        hi = std::max( hi, r.gt_illuminant.r() / r.gt_illuminant.b() );
    }
    EXPECT_GE( hi / lo, 2.0 );

    const auto manifest = load_manifest( ( d1 / "manifest.csv" ).string() );
    ASSERT_EQ( manifest.records.size(), 120u );
    for ( const auto &r : manifest.records )
        EXPECT_TRUE( r.masks.empty() );
    const auto img = read_png( manifest.records[0].path );
    EXPECT_EQ( img.bit_depth, 16 );
    EXPECT_EQ( img.width, 16 );

    // per-camera centroids separate under CSS jitter
    std::map<std::string, std::array<double, 3>> centroid;
    for ( const auto &r : recs )
        for ( int k = 0; k < 3; ++k )
            centroid[r.camera_id][k] += r.gt_illuminant[k] / r.gt_illuminant.g();
    std::vector<IlluminantRGB> cs;
    for ( const auto &[id, v] : centroid )
        cs.emplace_back( v );
    for ( std::size_t i = 0; i < cs.size(); ++i )
        for ( std::size_t j = i + 1; j < cs.size(); ++j )
            EXPECT_GT( angular_error( cs[i], cs[j] ), 0.5 );
    fs::remove_all( d1 );
    fs::remove_all( d2 );
}

TEST( Dataset, UnwritablePathIsIoError )
{
    SynthConfig c;
    c.cameras           = 3;
    c.scenes_per_camera = 40;
    try
    {
        generate_dataset( c, "/proc/ccmeta_no_such_dir/out" );
        FAIL() << "expected IoError";
    }
    catch ( const IoError &e )
    {
        EXPECT_NE( std::string( e.what() ).find( "/proc/ccmeta_no_such_dir/out" ), std::string::npos );
    }
}
