// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <cmath>

namespace ccmeta::nn
{

/// Forward-mode dual number v + d*eps, eps^2 = 0.
template <class T>
struct Dual
{
    T v{};
    T d{};

    constexpr Dual() = default;
    constexpr Dual( T value, T tangent = T( 0 ) )
        : v( value ), d( tangent )
    {}
    template <class U>
    explicit constexpr Dual( const Dual<U> &o )
        : v( static_cast<T>( o.v ) ), d( static_cast<T>( o.d ) )
    {}

    Dual &operator+=( const Dual &o )
    {
        v += o.v;
        d += o.d;
        return *this;
    }
    Dual &operator-=( const Dual &o )
    {
        v -= o.v;
        d -= o.d;
        return *this;
    }
    Dual &operator*=( const Dual &o )
    {
        d = d * o.v + v * o.d;
        v *= o.v;
        return *this;
    }
};

template <class T> Dual<T> operator+( Dual<T> a, const Dual<T> &b ) { return a += b; }
template <class T> Dual<T> operator-( Dual<T> a, const Dual<T> &b ) { return a -= b; }
template <class T> Dual<T> operator-( const Dual<T> &a ) { return { -a.v, -a.d }; }
template <class T> Dual<T> operator*( Dual<T> a, const Dual<T> &b ) { return a *= b; }
template <class T> Dual<T> operator*( const Dual<T> &a, T s ) { return { a.v * s, a.d * s }; }
template <class T> Dual<T> operator*( T s, const Dual<T> &a ) { return { a.v * s, a.d * s }; }
template <class T> Dual<T> operator/( const Dual<T> &a, const Dual<T> &b )
{
    return { a.v / b.v, ( a.d * b.v - a.v * b.d ) / ( b.v * b.v ) };
}
template <class T> Dual<T> operator/( const Dual<T> &a, T s ) { return { a.v / s, a.d / s }; }

template <class T> Dual<T> sqrt( const Dual<T> &a )
{
    const T s = std::sqrt( a.v );
    return { s, a.d / ( T( 2 ) * s ) };
}
template <class T> Dual<T> acos( const Dual<T> &a )
{
    return { std::acos( a.v ), -a.d / std::sqrt( T( 1 ) - a.v * a.v ) };
}

template <class T> T value_of( const Dual<T> &a ) { return a.v; }
inline float  value_of( float a ) { return a; }
inline double value_of( double a ) { return a; }

/// Wider accumulator type: float -> double, Dual<float> -> Dual<double>.
template <class S> struct Widen { using type = double; };
template <class T> struct Widen<Dual<T>> { using type = Dual<double>; };
template <class S> using Wide = typename Widen<S>::type;

} // namespace ccmeta::nn
