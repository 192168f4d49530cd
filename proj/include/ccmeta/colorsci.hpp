// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <array>
#include <span>
#include <vector>

namespace ccmeta
{

/// Linear-RGB illuminant gains. Magnitude carries no meaning.
class IlluminantRGB
{
public:
    /// Throws ValidationError unless every component is finite and >= 0 and
    /// at least one is > 0.
    IlluminantRGB( double r, double g, double b );
    explicit IlluminantRGB( const std::array<double, 3> &v )
        : IlluminantRGB( v[0], v[1], v[2] )
    {}

    double r() const { return v_[0]; }
    double g() const { return v_[1]; }
    double b() const { return v_[2]; }
    double operator[]( int k ) const { return v_[k]; }
    const std::array<double, 3> &values() const { return v_; }

    bool operator==( const IlluminantRGB & ) const = default;

private:
    std::array<double, 3> v_;
};

/// CIE 1931 (x, y), strictly inside the triangle x > 0, y > 0, x + y < 1.
class ChromaticityXY
{
public:
    ChromaticityXY( double x, double y );

    double x() const { return x_; }
    double y() const { return y_; }

private:
    double x_;
    double y_;
};

/// Colour temperature, restricted to [kMin, kMax].
class Kelvin
{
public:
    static constexpr double kMin = 1667.0;
    static constexpr double kMax = 25000.0;

    explicit Kelvin( double value );

    double value() const { return value_; }

private:
    double value_;
};

/// Angle between two illuminants in degrees, in [0, 180].
double angular_error( const IlluminantRGB &a, const IlluminantRGB &b );

/// Linear sRGB (D65) -> XYZ -> xy.
ChromaticityXY rgb_to_xy( const IlluminantRGB &rgb );
ChromaticityXY rgb_to_xy( const std::array<double, 3> &rgb );

struct CctOptions
{
    /// Maximum (x, y) distance from the Planckian locus.
    double max_locus_distance = 0.05;
};

/// Exponential-sum CCT fit (Hernandez-Andres et al.) with its two constant
/// sets, clamped to [Kelvin::kMin, Kelvin::kMax].
Kelvin cct_from_xy( const ChromaticityXY &c, const CctOptions &opts = {} );

/// Chromaticity of a blackbody at `t`, by trapezoid integration of Planck's
/// law against the bundled colour matching functions.
ChromaticityXY planckian_chromaticity( Kelvin t );

/// Brute-force nearest point on the locus over a 1 K grid, distances taken in
/// the CIE 1960 (u, v) plane; the independent reference for cct_from_xy.
Kelvin cct_oracle( const ChromaticityXY &c, const CctOptions &opts = {} );

/// Shortest (x, y) distance from `c` to the sampled locus.
double locus_distance( const ChromaticityXY &c );

/// Divides each channel k of an interleaved RGB buffer by illum_k / illum_g.
std::vector<float> apply_white_balance( std::span<const float> rgb,
                                        const IlluminantRGB &illum );

} // namespace ccmeta
