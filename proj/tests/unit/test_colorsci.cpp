// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/colorsci.hpp>
#include <ccmeta/error.hpp>
#include <ccmeta/spectral.hpp>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace ccmeta;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace
{

double big_angle( std::array<double, 3> a, std::array<double, 3> b )
{
    Big dot = 0, na = 0, nb = 0;
    for ( int k = 0; k < 3; ++k )
    {
        dot += Big( a[k] ) * Big( b[k] );
        na += Big( a[k] ) * Big( a[k] );
        nb += Big( b[k] ) * Big( b[k] );
    }
    Big c = dot / sqrt( na * nb );
    if ( c > 1 )
        c = 1;
    return static_cast<double>( acos( c ) * 180 / boost::math::constants::pi<Big>() );
}

// Planck chromaticity at 1 nm with the CMFs linearly interpolated, Simpson rule.
std::array<double, 2> fine_planck_xy( double t )
{
    const auto &tab = cie1931_cmf();
    double      X = 0, Y = 0, Z = 0;
    for ( int i = 0; i <= 400; ++i )
    {
        const double nm = 380.0 + i;
        const double w  = ( i == 0 || i == 400 ) ? 1.0 : ( i % 2 ? 4.0 : 2.0 );
        const double e  = planck_radiance( nm, t );
        X += w * e * tab.at( 0, nm );
        Y += w * e * tab.at( 1, nm );
        Z += w * e * tab.at( 2, nm );
    }
    return { X / ( X + Y + Z ), Y / ( X + Y + Z ) };
}

double dist( const ChromaticityXY &c, double x, double y )
{
    return std::hypot( c.x() - x, c.y() - y );
}

} // namespace

TEST( Spectral, BundledTableShape )
{
    const auto &t = cie1931_cmf();
    EXPECT_EQ( t.grid.start_nm, 380.0 );
    EXPECT_EQ( t.grid.step_nm, 5.0 );
    EXPECT_EQ( t.grid.count, 81u );
    for ( const auto &c : t.cmf )
        for ( double v : c )
            EXPECT_GE( v, 0.0 );
    // ybar peaks at 555 nm with value 1
    EXPECT_NEAR( t.at( 1, 555.0 ), 1.0, 1e-3 );
    EXPECT_NEAR( t.at( 1, 557.5 ), 0.5 * ( t.cmf[1][35] + t.cmf[1][36] ), 1e-15 );
    EXPECT_EQ( t.at( 0, 300.0 ), 0.0 );
}

TEST( Spectral, ParseRejectsBadTables )
{
    EXPECT_THROW( parse_cmf_csv( "" ), ValidationError );
    EXPECT_THROW( parse_cmf_csv( "nm,a,b,c\n380,0,0,0\n385,0,0,0\n" ), ValidationError );
    EXPECT_THROW( parse_cmf_csv( "wavelength_nm,xbar,ybar,zbar\n380,0,0,0\n385,0,0,0\n395,0,0,0\n" ),
                  ValidationError );
    EXPECT_THROW( parse_cmf_csv( "wavelength_nm,xbar,ybar,zbar\n380,0,-1,0\n385,0,0,0\n" ), ValidationError );
    const auto t = parse_cmf_csv( "wavelength_nm,xbar,ybar,zbar\n400,1,2,3\n410,4,5,6\n" );
    EXPECT_EQ( t.grid.count, 2u );
    EXPECT_EQ( t.grid.step_nm, 10.0 );
    EXPECT_DOUBLE_EQ( t.at( 2, 405.0 ), 4.5 );
    EXPECT_THROW( load_cmf_csv( "/nonexistent/cmf.csv" ), IoError );
}

TEST( Spectral, TrapezoidExactOnLines )
{
    const std::vector<double> f{ 0, 1, 2, 3 };
    EXPECT_DOUBLE_EQ( trapezoid( f, 2.0 ), 9.0 );
}

TEST( ColorTypes, Validation )
{
    EXPECT_THROW( IlluminantRGB( 0, 0, 0 ), ValidationError );
    EXPECT_THROW( IlluminantRGB( -1, 1, 1 ), ValidationError );
    EXPECT_THROW( IlluminantRGB( NAN, 1, 1 ), ValidationError );
    EXPECT_NO_THROW( IlluminantRGB( 0, 1, 0 ) );
    EXPECT_THROW( ChromaticityXY( 0.6, 0.5 ), ValidationError );
    EXPECT_THROW( ChromaticityXY( 0.0, 0.5 ), ValidationError );
    EXPECT_THROW( Kelvin( 1000 ), ValidationError );
    EXPECT_THROW( Kelvin( 30000 ), ValidationError );
}

TEST( AngularError, Examples )
{
    EXPECT_NEAR( angular_error( { 1, 1, 1 }, { 2, 2, 2 } ), 0.0, 1e-6 );
    EXPECT_NEAR( angular_error( { 1, 0, 0 }, { 0, 1, 0 } ), 90.0, 1e-12 );
    EXPECT_NEAR( angular_error( { 0.6, 0.7, 0.4 }, { 0.5, 0.8, 0.4 } ),
                 big_angle( { 0.6, 0.7, 0.4 }, { 0.5, 0.8, 0.4 } ), 1e-9 );
}

TEST( AngularError, RandomAgainstExtendedPrecision )
{
    std::mt19937_64                        rng( 7 );
    std::uniform_real_distribution<double> u( 0.01, 1.0 );
    for ( int i = 0; i < 500; ++i )
    {
        std::array<double, 3> a{ u( rng ), u( rng ), u( rng ) }, b{ u( rng ), u( rng ), u( rng ) };
        EXPECT_NEAR( angular_error( IlluminantRGB( a ), IlluminantRGB( b ) ), big_angle( a, b ), 1e-9 );
    }
}

TEST( AngularError, Properties )
{
    std::mt19937_64                        rng( 11 );
    std::uniform_real_distribution<double> u( 0.0, 1.0 ), s( 0.01, 100.0 );
    for ( int i = 0; i < 300; ++i )
    {
        IlluminantRGB a( u( rng ) + 1e-3, u( rng ), u( rng ) );
        IlluminantRGB b( u( rng ), u( rng ) + 1e-3, u( rng ) );
        IlluminantRGB c( u( rng ), u( rng ), u( rng ) + 1e-3 );
        EXPECT_EQ( angular_error( a, b ), angular_error( b, a ) );
        const double k = s( rng );
        EXPECT_NEAR( angular_error( a, IlluminantRGB( k * a.r(), k * a.g(), k * a.b() ) ), 0.0, 1e-5 );
        EXPECT_LE( angular_error( a, c ), angular_error( a, b ) + angular_error( b, c ) + 1e-9 );
        const double e = angular_error( a, b );
        EXPECT_GE( e, 0.0 );
        EXPECT_LE( e, 180.0 );
    }
}

TEST( RgbToXy, PublishedPoints )
{
    const auto w = rgb_to_xy( IlluminantRGB( 1, 1, 1 ) );
    EXPECT_NEAR( w.x(), 0.3127, 1e-3 );
    EXPECT_NEAR( w.y(), 0.3290, 1e-3 );
    const auto r = rgb_to_xy( IlluminantRGB( 1, 0, 0 ) );
    EXPECT_NEAR( r.x(), 0.64, 1e-3 );
    EXPECT_NEAR( r.y(), 0.33, 1e-3 );
    const auto g = rgb_to_xy( IlluminantRGB( 0, 1, 0 ) );
    EXPECT_NEAR( g.x(), 0.30, 1e-3 );
    EXPECT_NEAR( g.y(), 0.60, 1e-3 );
    EXPECT_THROW( rgb_to_xy( std::array<double, 3>{ 0, 0, 0 } ), ValidationError );
}

TEST( RgbToXy, ScaleInvariant )
{
    std::mt19937_64                        rng( 3 );
    std::uniform_real_distribution<double> u( 0.01, 1.0 ), s( 0.1, 10.0 );
    for ( int i = 0; i < 200; ++i )
    {
        std::array<double, 3> v{ u( rng ), u( rng ), u( rng ) };
        const double          k = s( rng );
        const auto            a = rgb_to_xy( v );
        const auto            b = rgb_to_xy( std::array<double, 3>{ k * v[0], k * v[1], k * v[2] } );
        EXPECT_NEAR( a.x(), b.x(), 1e-14 );
        EXPECT_NEAR( a.y(), b.y(), 1e-14 );
    }
}

TEST( Planckian, PublishedIlluminants )
{
    EXPECT_LT( dist( planckian_chromaticity( Kelvin( 2856 ) ), 0.4476, 0.4074 ), 0.005 );
    EXPECT_LT( dist( planckian_chromaticity( Kelvin( 6500 ) ), 0.3127, 0.3290 ), 0.01 );
}

TEST( Planckian, MatchesFineIntegration )
{
    for ( double t : { 2000.0, 3000.0, 5000.0, 6500.0, 10000.0, 20000.0 } )
    {
        const auto c = planckian_chromaticity( Kelvin( t ) );
        const auto f = fine_planck_xy( t );
        EXPECT_LT( dist( c, f[0], f[1] ), 5e-4 ) << t;
    }
}

TEST( Planckian, XDecreasesWithTemperature )
{
    double prev = 1.0;
    for ( double t = 2000; t <= 10000; t += 50 )
    {
        const double x = planckian_chromaticity( Kelvin( t ) ).x();
        EXPECT_LT( x, prev ) << t;
        prev = x;
    }
}

TEST( Cct, Examples )
{
    const ChromaticityXY d65( 0.3127, 0.3290 );
    const double         fit    = cct_from_xy( d65 ).value();
    const double         oracle = cct_oracle( d65 ).value();
    EXPECT_NEAR( fit, 6504.0, 150.0 );
    EXPECT_NEAR( fit, oracle, 150.0 );
    EXPECT_NEAR( oracle, 6500.0, 100.0 );
    EXPECT_NEAR( cct_from_xy( planckian_chromaticity( Kelvin( 5000 ) ) ).value(), 5000.0, 50.0 );
    EXPECT_NEAR( cct_oracle( planckian_chromaticity( Kelvin( 4000 ) ) ).value(), 4000.0, 1.0 );
    EXPECT_THROW( cct_from_xy( ChromaticityXY( 0.9, 0.05 ) ), ValidationError );

    // 0.1 off the locus along the normal direction at 5000 K
    const auto a = planckian_chromaticity( Kelvin( 4990 ) );
    const auto b = planckian_chromaticity( Kelvin( 5010 ) );
    const auto c = planckian_chromaticity( Kelvin( 5000 ) );
    double     tx = b.x() - a.x(), ty = b.y() - a.y();
    const double tn = std::hypot( tx, ty );
    const ChromaticityXY off( c.x() - 0.1 * ty / tn, c.y() + 0.1 * tx / tn );
    EXPECT_THROW( cct_oracle( off ), ValidationError );
    EXPECT_THROW( cct_from_xy( off ), ValidationError );
    EXPECT_NEAR( locus_distance( off ), 0.1, 1e-3 );
}

TEST( Cct, FitAgreesWithOracleOnLocus )
{
    for ( int i = 0; i < 200; ++i )
    {
        const double t = 3000.0 + 12000.0 * i / 199.0;
        const auto   c = planckian_chromaticity( Kelvin( t ) );
        EXPECT_NEAR( cct_from_xy( c ).value(), cct_oracle( c ).value(), 100.0 ) << t;
    }
}

TEST( Cct, FitAgreesWithOracleOffLocus )
{
    std::mt19937_64                        rng( 5 );
    std::uniform_real_distribution<double> tt( 3000.0, 15000.0 ), d( -0.008, 0.008 );
    for ( int i = 0; i < 100; ++i )
    {
        const auto           c = planckian_chromaticity( Kelvin( tt( rng ) ) );
        const ChromaticityXY p( c.x() + d( rng ), c.y() + d( rng ) );
        EXPECT_NEAR( cct_from_xy( p ).value(), cct_oracle( p ).value(), 200.0 );
    }
}

TEST( Cct, OracleRoundTrip )
{
    for ( double t = 2000; t <= 20000; t += 100 )
        EXPECT_NEAR( cct_oracle( planckian_chromaticity( Kelvin( t ) ) ).value(), t, 1.0 ) << t;
}

TEST( WhiteBalance, Examples )
{
    const std::vector<float> px{ 0.4f, 0.5f, 0.2f };
    EXPECT_EQ( apply_white_balance( px, IlluminantRGB( 1, 1, 1 ) ), px );
    const auto out = apply_white_balance( px, IlluminantRGB( 0.8, 1.0, 0.4 ) );
    for ( float v : out )
        EXPECT_NEAR( v, 0.5f, 1e-6f );
    EXPECT_THROW( apply_white_balance( px, IlluminantRGB( 0.5, 1.0, 0.0 ) ), ValidationError );
    EXPECT_THROW( apply_white_balance( std::vector<float>{ 1.0f, 2.0f }, IlluminantRGB( 1, 1, 1 ) ),
                  ValidationError );
}
