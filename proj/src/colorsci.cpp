// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/colorsci.hpp>
#include <ccmeta/error.hpp>
#include <ccmeta/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace ccmeta
{

namespace
{

// IEC 61966-2-1 linear sRGB -> XYZ (D65).
constexpr double kSrgbToXyz[3][3] = { { 0.4124, 0.3576, 0.1805 },
                                      { 0.2126, 0.7152, 0.0722 },
                                      { 0.0193, 0.1192, 0.9505 } };

std::array<double, 2> blackbody_xy( double kelvin )
{
    const auto         &t = cie1931_cmf();
    std::vector<double> fx( t.grid.count ), fy( t.grid.count ), fz( t.grid.count );
    for ( std::size_t i = 0; i < t.grid.count; ++i )
    {
        const double p = planck_radiance( t.grid.wavelength( i ), kelvin );
        fx[i]          = p * t.cmf[0][i];
        fy[i]          = p * t.cmf[1][i];
        fz[i]          = p * t.cmf[2][i];
    }
    const double X = trapezoid( fx, t.grid.step_nm );
    const double Y = trapezoid( fy, t.grid.step_nm );
    const double Z = trapezoid( fz, t.grid.step_nm );
    const double s = X + Y + Z;
    return { X / s, Y / s };
}

// CIE 1960 UCS.
std::array<double, 2> xy_to_uv( double x, double y )
{
    const double d = -2.0 * x + 12.0 * y + 3.0;
    return { 4.0 * x / d, 6.0 * y / d };
}

// Locus sampled at every integer kelvin in [kMin, kMax].
struct LocusTable
{
    int                                first;
    std::vector<std::array<double, 2>> xy;
    std::vector<std::array<double, 2>> uv;

    LocusTable()
        : first( static_cast<int>( Kelvin::kMin ) )
    {
        const int last = static_cast<int>( Kelvin::kMax );
        xy.reserve( static_cast<std::size_t>( last - first + 1 ) );
        for ( int t = first; t <= last; ++t )
        {
            xy.push_back( blackbody_xy( t ) );
            uv.push_back( xy_to_uv( xy.back()[0], xy.back()[1] ) );
        }
    }

    // Index of the nearest sample in `pts` and its squared distance.
    static std::pair<std::size_t, double> nearest( const std::vector<std::array<double, 2>> &pts, double a,
                                                   double b )
    {
        std::size_t best   = 0;
        double      best_d = std::numeric_limits<double>::infinity();
        for ( std::size_t i = 0; i < pts.size(); ++i )
        {
            const double dx = pts[i][0] - a;
            const double dy = pts[i][1] - b;
            const double d  = dx * dx + dy * dy;
            if ( d < best_d )
            {
                best_d = d;
                best   = i;
            }
        }
        return { best, best_d };
    }
};

const LocusTable &locus()
{
    static const LocusTable table;
    return table;
}

void check_locus_distance( const ChromaticityXY &c, const CctOptions &opts )
{
    const double d = locus_distance( c );
    if ( d > opts.max_locus_distance )
        throw ValidationError( "chromaticity (" + std::to_string( c.x() ) + ", " +
                               std::to_string( c.y() ) + ") is " + std::to_string( d ) +
                               " from the Planckian locus; CCT is undefined" );
}

} // namespace

IlluminantRGB::IlluminantRGB( double r, double g, double b )
    : v_{ r, g, b }
{
    bool any_positive = false;
    for ( double c : v_ )
    {
        if ( !std::isfinite( c ) || c < 0.0 )
            throw ValidationError( "illuminant components must be finite and >= 0" );
        any_positive = any_positive || c > 0.0;
    }
    if ( !any_positive )
        throw ValidationError( "illuminant must have a positive component" );
}

ChromaticityXY::ChromaticityXY( double x, double y )
    : x_( x ), y_( y )
{
    if ( !( x > 0.0 && y > 0.0 && x + y < 1.0 ) )
        throw ValidationError( "chromaticity (" + std::to_string( x ) + ", " +
                               std::to_string( y ) + ") outside the xy triangle" );
}

Kelvin::Kelvin( double value )
    : value_( value )
{
    if ( !( value >= kMin && value <= kMax ) )
        throw ValidationError( "temperature " + std::to_string( value ) +
                               " K outside [1667, 25000] K" );
}

double angular_error( const IlluminantRGB &a, const IlluminantRGB &b )
{
    double dot = 0.0, na = 0.0, nb = 0.0;
    for ( int k = 0; k < 3; ++k )
    {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    const double c = std::clamp( dot / ( std::sqrt( na ) * std::sqrt( nb ) ), -1.0, 1.0 );
    return std::acos( c ) * 180.0 / std::numbers::pi;
}

ChromaticityXY rgb_to_xy( const std::array<double, 3> &rgb )
{
    double xyz[3] = { 0.0, 0.0, 0.0 };
    for ( int i = 0; i < 3; ++i )
        for ( int k = 0; k < 3; ++k )
            xyz[i] += kSrgbToXyz[i][k] * rgb[k];
    const double s = xyz[0] + xyz[1] + xyz[2];
    if ( !( s > 0.0 ) || !std::isfinite( s ) )
        throw ValidationError( "rgb_to_xy: X + Y + Z must be positive" );
    return ChromaticityXY( xyz[0] / s, xyz[1] / s );
}

ChromaticityXY rgb_to_xy( const IlluminantRGB &rgb )
{
    return rgb_to_xy( rgb.values() );
}

Kelvin cct_from_xy( const ChromaticityXY &c, const CctOptions &opts )
{
    constexpr double xe = 0.3366, ye = 0.1735;
    if ( c.y() == ye )
        throw ValidationError( "cct_from_xy: y equals the epicenter ordinate" );
    check_locus_distance( c, opts );

    double n   = ( c.x() - xe ) / ( c.y() - ye );
    double cct = -949.86315 + 6253.80338 * std::exp( -n / 0.92159 ) +
                 28.70599 * std::exp( -n / 0.20039 ) + 0.00004 * std::exp( -n / 0.07125 );
    if ( cct > 50000.0 )
    {
        n   = ( c.x() - 0.3356 ) / ( c.y() - 0.1691 );
        cct = 36284.48953 + 0.00228 * std::exp( -n / 0.07861 ) +
              5.4535e-36 * std::exp( -n / 0.01543 );
    }
    if ( std::isnan( cct ) )
        throw ValidationError( "cct_from_xy: formula undefined for this chromaticity" );
    return Kelvin( std::clamp( cct, Kelvin::kMin, Kelvin::kMax ) );
}

ChromaticityXY planckian_chromaticity( Kelvin t )
{
    const auto xy = blackbody_xy( t.value() );
    return ChromaticityXY( xy[0], xy[1] );
}

Kelvin cct_oracle( const ChromaticityXY &c, const CctOptions &opts )
{
    check_locus_distance( c, opts );
    const auto &table = locus();
    const auto  uv    = xy_to_uv( c.x(), c.y() );
    const auto  best  = LocusTable::nearest( table.uv, uv[0], uv[1] ).first;
    return Kelvin( static_cast<double>( table.first ) + static_cast<double>( best ) );
}

double locus_distance( const ChromaticityXY &c )
{
    return std::sqrt( LocusTable::nearest( locus().xy, c.x(), c.y() ).second );
}

std::vector<float> apply_white_balance( std::span<const float> rgb, const IlluminantRGB &illum )
{
    if ( !( illum.r() > 0.0 && illum.g() > 0.0 && illum.b() > 0.0 ) )
        throw ValidationError( "white balance needs every illuminant channel > 0" );
    if ( rgb.size() % 3 != 0 )
        throw ValidationError( "white balance expects interleaved RGB" );
    const double ratio[3] = { illum.r() / illum.g(), 1.0, illum.b() / illum.g() };
    std::vector<float> out( rgb.size() );
    for ( std::size_t i = 0; i < rgb.size(); ++i )
        out[i] = static_cast<float>( static_cast<double>( rgb[i] ) / ratio[i % 3] );
    return out;
}

} // namespace ccmeta
