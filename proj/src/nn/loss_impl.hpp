// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/error.hpp>
#include <ccmeta/nn/dual.hpp>
#include <ccmeta/nn/network.hpp>

#include <array>
#include <cmath>
#include <numbers>

namespace ccmeta::nn::detail
{

template <class S>
struct LossEval
{
    double           loss = 0.0;
    std::array<S, 3> grad{};
    bool             degenerate = false;
};

/// S is double or Dual<double>; with duals the gradient tangent is the
/// prediction Hessian applied to the prediction tangent.
template <class S>
LossEval<S> eval_loss( const std::array<S, 3> &p, const std::array<double, 3> &gt, LossKind kind )
{
    using std::sqrt;
    LossEval<S> out;
    if ( kind == LossKind::squared )
    {
        for ( int k = 0; k < 3; ++k )
        {
            const S d   = p[k] - S( gt[k] );
            out.grad[k] = d;
            out.loss += 0.5 * value_of( d ) * value_of( d );
        }
        return out;
    }

    const S np = sqrt( p[0] * p[0] + p[1] * p[1] + p[2] * p[2] );
    if ( !( value_of( np ) > kDegenerateNorm ) )
    {
        out.loss       = std::numbers::pi / 2.0;
        out.degenerate = true;
        return out;
    }
    const double ng = std::sqrt( gt[0] * gt[0] + gt[1] * gt[1] + gt[2] * gt[2] );
    if ( !( ng > 0.0 ) )
        throw ValidationError( "ground-truth illuminant has zero norm" );

    std::array<S, 3> ph{}, w{};
    S                c( 0.0 );
    for ( int k = 0; k < 3; ++k )
    {
        ph[k] = p[k] / np;
        c += ph[k] * S( gt[k] / ng );
    }
    S wp( 0.0 );
    for ( int k = 0; k < 3; ++k )
    {
        w[k] = S( gt[k] / ng ) - c * ph[k];
        wp += w[k] * ph[k];
    }
    // second projection pass keeps w orthogonal to p at rounding level
    S wn2( 0.0 );
    for ( int k = 0; k < 3; ++k )
    {
        w[k] -= wp * ph[k];
        wn2 += w[k] * w[k];
    }
    const double wn_v = std::sqrt( value_of( wn2 ) );
    out.loss          = std::atan2( wn_v, value_of( c ) );
    if ( wn_v > 1e-12 )
    {
        const S scale = sqrt( wn2 ) * np;
        for ( int k = 0; k < 3; ++k )
            out.grad[k] = -w[k] / scale;
    }
    return out;
}

} // namespace ccmeta::nn::detail
