// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccmeta
{

/// Uniform wavelength grid in nanometres.
struct SpectralGrid
{
    double      start_nm = 380.0;
    double      step_nm  = 5.0;
    std::size_t count    = 81;

    double wavelength( std::size_t i ) const
    {
        return start_nm + step_nm * static_cast<double>( i );
    }
    double end_nm() const { return wavelength( count - 1 ); }

    bool operator==( const SpectralGrid & ) const = default;

    /// 380-780 nm at the given step.
    static SpectralGrid visible( double step_nm );
};

/// The CIE 1931 2-degree colour matching functions sampled on a uniform grid.
struct SpectralTable
{
    SpectralGrid                       grid;
    std::array<std::vector<double>, 3> cmf; // xbar, ybar, zbar

    /// Linear interpolation of curve `k` at `nm`; zero outside the grid.
    double at( int k, double nm ) const;
};

/// Parses CSV text with header `wavelength_nm,xbar,ybar,zbar`.
/// Throws ValidationError on a non-uniform grid or negative values.
SpectralTable parse_cmf_csv( std::string_view text );
SpectralTable load_cmf_csv( const std::string &path );

/// The bundled 5 nm table (parsed once, immutable afterwards).
const SpectralTable &cie1931_cmf();

/// Trapezoid rule on a uniform grid.
double trapezoid( std::span<const double> f, double step );

/// Planck spectral radiance at `nm` for temperature `kelvin` (W sr^-1 m^-3).
double planck_radiance( double nm, double kelvin );

} // namespace ccmeta
