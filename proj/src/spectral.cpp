// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/spectral.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace ccmeta
{

extern const char kCie1931Csv[];

SpectralGrid SpectralGrid::visible( double step_nm )
{
    const auto n = static_cast<std::size_t>( std::lround( 400.0 / step_nm ) );
    return SpectralGrid{ 380.0, step_nm, n + 1 };
}

double SpectralTable::at( int k, double nm ) const
{
    const double u = ( nm - grid.start_nm ) / grid.step_nm;
    if ( u < 0.0 || u > static_cast<double>( grid.count - 1 ) )
        return 0.0;
    const auto   i0 = static_cast<std::size_t>( std::floor( u ) );
    const double f  = u - static_cast<double>( i0 );
    if ( i0 + 1 >= grid.count )
        return cmf[k][i0];
    return cmf[k][i0] * ( 1.0 - f ) + cmf[k][i0 + 1] * f;
}

SpectralTable parse_cmf_csv( std::string_view text )
{
    std::istringstream in{ std::string( text ) };
    std::string        line;
    if ( !std::getline( in, line ) )
        throw ValidationError( "cmf csv: empty input" );
    if ( line.rfind( "wavelength_nm,xbar,ybar,zbar", 0 ) != 0 )
        throw ValidationError( "cmf csv: unexpected header '" + line + "'" );

    std::vector<double>                wl;
    std::array<std::vector<double>, 3> cmf;
    while ( std::getline( in, line ) )
    {
        if ( line.empty() || line == "\r" )
            continue;
        std::istringstream row( line );
        std::string        cell;
        double             v[4];
        for ( int i = 0; i < 4; ++i )
        {
            if ( !std::getline( row, cell, ',' ) )
                throw ValidationError( "cmf csv: short row '" + line + "'" );
            try
            {
                v[i] = std::stod( cell );
            }
            catch ( const std::exception & )
            {
                throw ValidationError( "cmf csv: bad number '" + cell + "'" );
            }
        }
        wl.push_back( v[0] );
        for ( int k = 0; k < 3; ++k )
        {
            if ( !( v[k + 1] >= 0.0 ) )
                throw ValidationError( "cmf csv: negative value in '" + line + "'" );
            cmf[k].push_back( v[k + 1] );
        }
    }
    if ( wl.size() < 2 )
        throw ValidationError( "cmf csv: need at least two rows" );

    const double step = wl[1] - wl[0];
    if ( !( step > 0.0 ) )
        throw ValidationError( "cmf csv: wavelengths must increase" );
    for ( std::size_t i = 1; i < wl.size(); ++i )
        if ( std::abs( ( wl[i] - wl[i - 1] ) - step ) > 1e-9 * step )
            throw ValidationError( "cmf csv: wavelength grid is not uniform" );

    SpectralTable t;
    t.grid = SpectralGrid{ wl.front(), step, wl.size() };
    t.cmf  = std::move( cmf );
    return t;
}

SpectralTable load_cmf_csv( const std::string &path )
{
    std::ifstream f( path, std::ios::binary );
    if ( !f )
        throw IoError( "cannot open " + path );
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_cmf_csv( ss.str() );
}

const SpectralTable &cie1931_cmf()
{
    static const SpectralTable table = parse_cmf_csv( kCie1931Csv );
    return table;
}

double trapezoid( std::span<const double> f, double step )
{
    if ( f.size() < 2 )
        return 0.0;
    double s = 0.5 * ( f.front() + f.back() );
    for ( std::size_t i = 1; i + 1 < f.size(); ++i )
        s += f[i];
    return s * step;
}

double planck_radiance( double nm, double kelvin )
{
    constexpr double h = 6.62607015e-34;
    constexpr double c = 299792458.0;
    constexpr double k = 1.380649e-23;
    const double     l = nm * 1e-9;
    return 2.0 * h * c * c / ( std::pow( l, 5 ) * std::expm1( h * c / ( l * k * kelvin ) ) );
}

} // namespace ccmeta
