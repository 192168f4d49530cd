// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/nn/dual.hpp>
#include <ccmeta/nn/network.hpp>

#include "loss_impl.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include <cmath>

namespace ccmeta::nn
{

namespace
{

template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using CMap = Eigen::Map<const Mat<T>>;
template <class T>
using MMap = Eigen::Map<Mat<T>>;
template <class T>
using CRow = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <class T>
using MRow = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

constexpr double kLnEps = 1e-5;

// in: [n*h*w, c] -> col: [n*h*w, 9*c], column = tap*c + ci, tap = ky*3 + kx
template <class T>
void im2col( const Mat<T> &in, std::size_t n, int h, int w, int c, Mat<T> &col )
{
    col.resize( static_cast<Eigen::Index>( n ) * h * w, 9 * c );
    for ( std::size_t s = 0; s < n; ++s )
        for ( int y = 0; y < h; ++y )
            for ( int x = 0; x < w; ++x )
            {
                const Eigen::Index row = ( static_cast<Eigen::Index>( s ) * h + y ) * w + x;
                T                 *dst = col.data() + row * 9 * c;
                for ( int ky = 0; ky < 3; ++ky )
                {
                    const int sy = y + ky - 1;
                    for ( int kx = 0; kx < 3; ++kx, dst += c )
                    {
                        const int sx = x + kx - 1;
                        if ( sy < 0 || sy >= h || sx < 0 || sx >= w )
                        {
                            std::fill_n( dst, c, T( 0 ) );
                            continue;
                        }
                        const T *src =
                            in.data() + ( ( static_cast<Eigen::Index>( s ) * h + sy ) * w + sx ) * c;
                        std::copy_n( src, c, dst );
                    }
                }
            }
}

template <class T>
void col2im( const Mat<T> &col, std::size_t n, int h, int w, int c, Mat<T> &out )
{
    out.setZero( static_cast<Eigen::Index>( n ) * h * w, c );
    for ( std::size_t s = 0; s < n; ++s )
        for ( int y = 0; y < h; ++y )
            for ( int x = 0; x < w; ++x )
            {
                const Eigen::Index row = ( static_cast<Eigen::Index>( s ) * h + y ) * w + x;
                const T           *src = col.data() + row * 9 * c;
                for ( int ky = 0; ky < 3; ++ky )
                {
                    const int sy = y + ky - 1;
                    for ( int kx = 0; kx < 3; ++kx, src += c )
                    {
                        const int sx = x + kx - 1;
                        if ( sy < 0 || sy >= h || sx < 0 || sx >= w )
                            continue;
                        T *dst = out.data() + ( ( static_cast<Eigen::Index>( s ) * h + sy ) * w + sx ) * c;
                        for ( int k = 0; k < c; ++k )
                            dst[k] += src[k];
                    }
                }
            }
}

// Layernorm over one sample of `count` pixels x c channels.
template <class S>
void ln_forward( const S *x, const S *gamma, const S *beta, std::size_t count, int c, S *y )
{
    using std::sqrt;
    using W             = Wide<S>;
    const std::size_t n = count * static_cast<std::size_t>( c );
    W                 sum( 0.0 );
    for ( std::size_t i = 0; i < n; ++i )
        sum += W( x[i] );
    const W mu = sum / static_cast<double>( n );
    W       var( 0.0 );
    for ( std::size_t i = 0; i < n; ++i )
    {
        const W d = W( x[i] ) - mu;
        var += d * d;
    }
    const W r = W( 1.0 ) / sqrt( var / static_cast<double>( n ) + W( kLnEps ) );
    for ( std::size_t p = 0; p < count; ++p )
        for ( int k = 0; k < c; ++k )
        {
            const std::size_t i = p * c + k;
            y[i]                = S( ( W( x[i] ) - mu ) * r * W( gamma[k] ) + W( beta[k] ) );
        }
}

template <class S>
void ln_backward( const S *x, const S *gamma, const S *gy, std::size_t count, int c, S *gx, S *ggamma,
                  S *gbeta )
{
    using std::sqrt;
    using W             = Wide<S>;
    const std::size_t n = count * static_cast<std::size_t>( c );
    W                 sum( 0.0 );
    for ( std::size_t i = 0; i < n; ++i )
        sum += W( x[i] );
    const W mu = sum / static_cast<double>( n );
    W       var( 0.0 );
    for ( std::size_t i = 0; i < n; ++i )
    {
        const W d = W( x[i] ) - mu;
        var += d * d;
    }
    const W r = W( 1.0 ) / sqrt( var / static_cast<double>( n ) + W( kLnEps ) );

    std::vector<W> acc_gamma( static_cast<std::size_t>( c ), W( 0.0 ) );
    std::vector<W> acc_beta( static_cast<std::size_t>( c ), W( 0.0 ) );
    W              sum_g( 0.0 ), sum_gx( 0.0 );
    for ( std::size_t p = 0; p < count; ++p )
        for ( int k = 0; k < c; ++k )
        {
            const std::size_t i   = p * c + k;
            const W           xh  = ( W( x[i] ) - mu ) * r;
            const W           g   = W( gy[i] );
            const W           gxh = g * W( gamma[k] );
            acc_gamma[k] += g * xh;
            acc_beta[k] += g;
            sum_g += gxh;
            sum_gx += gxh * xh;
        }
    const W mean_g  = sum_g / static_cast<double>( n );
    const W mean_gx = sum_gx / static_cast<double>( n );
    for ( std::size_t p = 0; p < count; ++p )
        for ( int k = 0; k < c; ++k )
        {
            const std::size_t i  = p * c + k;
            const W           xh = ( W( x[i] ) - mu ) * r;
            gx[i]                = S( r * ( W( gy[i] ) * W( gamma[k] ) - mean_g - xh * mean_gx ) );
        }
    for ( int k = 0; k < c; ++k )
    {
        ggamma[k] += S( acc_gamma[k] );
        gbeta[k] += S( acc_beta[k] );
    }
}

} // namespace

template <class T>
struct Engine<T>::Impl
{
    const NetworkLayout  layout;
    std::size_t          n = 0;
    bool                 tangent = false;
    int                  first_param = -1;

    std::vector<Mat<T>> act, col, dact, dcol;
    Mat<T>              g, gnext, dg, dgnext, gcol, dgcol;
    std::vector<Dual<T>> dx, dy, dgy, dgx, dgamma, dbeta, dggamma, dgbeta;
    // Eigen-aligned copies, so kernel paths never depend on caller alignment.
    Eigen::Matrix<T, Eigen::Dynamic, 1> th, vv, gr, hvb;

    explicit Impl( const NetworkLayout &l )
        : layout( l )
    {
        const auto &plans = layout.plans();
        act.resize( plans.size() + 1 );
        col.resize( plans.size() );
        dact.resize( plans.size() + 1 );
        dcol.resize( plans.size() );
        for ( std::size_t i = 0; i < plans.size(); ++i )
            if ( plans[i].param_layer >= 0 )
            {
                first_param = static_cast<int>( i );
                break;
            }
    }

    // Input tangent of layer l is identically zero.
    bool tangent_zero( std::size_t l ) const { return static_cast<int>( l ) <= first_param; }

    void forward( const T *theta, const T *input, std::size_t batch, const T *v );
    void backward( T *grad_out, T *hv_out );
};

template <class T>
void Engine<T>::Impl::forward( const T *theta, const T *input, std::size_t batch, const T *v )
{
    n       = batch;
    tangent = v != nullptr;
    th      = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>( theta, static_cast<Eigen::Index>( layout.param_count() ) );
    theta   = th.data();
    if ( tangent )
    {
        vv = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>>( v, static_cast<Eigen::Index>( layout.param_count() ) );
        v  = vv.data();
    }
    const auto &plans = layout.plans();
    const auto  in0   = plans.front().in;
    act[0]            = CMap<T>( input, static_cast<Eigen::Index>( n ) * in0.h * in0.w, in0.c );
    if ( tangent )
        dact[0].setZero( act[0].rows(), act[0].cols() );

    for ( std::size_t l = 0; l < plans.size(); ++l )
    {
        const LayerPlan   &p    = plans[l];
        const Eigen::Index rows = static_cast<Eigen::Index>( n ) * p.out.h * p.out.w;
        Mat<T>            &x    = act[l];
        Mat<T>            &y    = act[l + 1];
        switch ( p.spec.kind )
        {
            case LayerKind::conv3x3:
            case LayerKind::dense:
            {
                const bool   conv = p.spec.kind == LayerKind::conv3x3;
                const int    fan  = static_cast<int>( p.weight_size / p.spec.out );
                const CMap<T> Wm( theta + p.weight_offset, fan, p.spec.out );
                const CRow<T> b( theta + p.bias_offset, p.spec.out );
                if ( conv )
                    im2col( x, n, p.in.h, p.in.w, p.in.c, col[l] );
                const CMap<T> X( conv ? col[l].data() : x.data(), rows, fan );
                y.noalias() = X * Wm;
                y.rowwise() += b;
                if ( tangent )
                {
                    const CMap<T> V( v + p.weight_offset, fan, p.spec.out );
                    const CRow<T> vb( v + p.bias_offset, p.spec.out );
                    Mat<T>       &dy_ = dact[l + 1];
                    dy_.noalias()     = X * V;
                    dy_.rowwise() += vb;
                    if ( !tangent_zero( l ) )
                    {
                        if ( conv )
                            im2col( dact[l], n, p.in.h, p.in.w, p.in.c, dcol[l] );
                        const CMap<T> dX( conv ? dcol[l].data() : dact[l].data(), rows, fan );
                        dy_.noalias() += dX * Wm;
                    }
                }
                break;
            }
            case LayerKind::layernorm:
            {
                const std::size_t count = static_cast<std::size_t>( p.in.h ) * p.in.w;
                const std::size_t per   = count * static_cast<std::size_t>( p.in.c );
                y.resize( rows, p.out.c );
                if ( !tangent )
                {
                    for ( std::size_t s = 0; s < n; ++s )
                        ln_forward<T>( x.data() + s * per, theta + p.weight_offset, theta + p.bias_offset,
                                       count, p.in.c, y.data() + s * per );
                    break;
                }
                dact[l + 1].resize( rows, p.out.c );
                dgamma.resize( p.weight_size );
                dbeta.resize( p.bias_size );
                for ( std::size_t k = 0; k < p.weight_size; ++k )
                {
                    dgamma[k] = { theta[p.weight_offset + k], v[p.weight_offset + k] };
                    dbeta[k]  = { theta[p.bias_offset + k], v[p.bias_offset + k] };
                }
                dx.resize( per );
                dy.resize( per );
                for ( std::size_t s = 0; s < n; ++s )
                {
                    const T *xv = x.data() + s * per;
                    const T *xd = dact[l].data() + s * per;
                    for ( std::size_t i = 0; i < per; ++i )
                        dx[i] = { xv[i], xd[i] };
                    ln_forward<Dual<T>>( dx.data(), dgamma.data(), dbeta.data(), count, p.in.c, dy.data() );
                    T *yv = y.data() + s * per;
                    T *yd = dact[l + 1].data() + s * per;
                    for ( std::size_t i = 0; i < per; ++i )
                    {
                        yv[i] = dy[i].v;
                        yd[i] = dy[i].d;
                    }
                }
                break;
            }
            case LayerKind::relu:
                y = x.cwiseMax( T( 0 ) );
                if ( tangent )
                    dact[l + 1] = ( x.array() > T( 0 ) ).select( dact[l].array(), T( 0 ) ).matrix();
                break;
            case LayerKind::avgpool_global:
            {
                const Eigen::Index count = static_cast<Eigen::Index>( p.in.h ) * p.in.w;
                const T            inv   = T( 1 ) / static_cast<T>( count );
                y.resize( static_cast<Eigen::Index>( n ), p.in.c );
                if ( tangent )
                    dact[l + 1].resize( static_cast<Eigen::Index>( n ), p.in.c );
                for ( std::size_t s = 0; s < n; ++s )
                {
                    const auto idx = static_cast<Eigen::Index>( s );
                    y.row( idx )   = x.middleRows( idx * count, count ).colwise().sum() * inv;
                    if ( tangent )
                        dact[l + 1].row( idx ) = dact[l].middleRows( idx * count, count ).colwise().sum() * inv;
                }
                break;
            }
        }
    }
}

// Reads the output gradient from g (and dg), writes parameter gradients.
template <class T>
void Engine<T>::Impl::backward( T *grad_out, T *hv_out )
{
    const auto &plans = layout.plans();
    const T    *theta = th.data();
    const T    *v     = tangent ? vv.data() : nullptr;
    gr.setZero( th.size() );
    T *grad = gr.data();
    T *hv   = nullptr;
    if ( tangent )
    {
        hvb.setZero( th.size() );
        hv = hvb.data();
    }
    for ( std::size_t li = plans.size(); li-- > 0; )
    {
        const LayerPlan   &p       = plans[li];
        const bool         need_gx = li > 0;
        const Eigen::Index rows    = static_cast<Eigen::Index>( n ) * p.out.h * p.out.w;
        const Eigen::Index rows_in = static_cast<Eigen::Index>( n ) * p.in.h * p.in.w;
        switch ( p.spec.kind )
        {
            case LayerKind::conv3x3:
            case LayerKind::dense:
            {
                const bool    conv = p.spec.kind == LayerKind::conv3x3;
                const int     fan  = static_cast<int>( p.weight_size / p.spec.out );
                const CMap<T> Wm( theta + p.weight_offset, fan, p.spec.out );
                const CMap<T> X( conv ? col[li].data() : act[li].data(), rows, fan );
                MMap<T>       GW( grad + p.weight_offset, fan, p.spec.out );
                MRow<T>       gb( grad + p.bias_offset, p.spec.out );
                GW.noalias() += X.transpose() * g;
                gb += g.colwise().sum();
                if ( tangent )
                {
                    MMap<T> HW( hv + p.weight_offset, fan, p.spec.out );
                    MRow<T> hb( hv + p.bias_offset, p.spec.out );
                    HW.noalias() += X.transpose() * dg;
                    if ( !tangent_zero( li ) )
                    {
                        const CMap<T> dX( conv ? dcol[li].data() : dact[li].data(), rows, fan );
                        HW.noalias() += dX.transpose() * g;
                    }
                    hb += dg.colwise().sum();
                }
                if ( !need_gx )
                    break;
                if ( conv )
                {
                    gcol.noalias() = g * Wm.transpose();
                    col2im( gcol, n, p.in.h, p.in.w, p.in.c, gnext );
                }
                else
                {
                    gcol.noalias() = g * Wm.transpose();
                    gnext          = CMap<T>( gcol.data(), rows_in, p.in.c );
                }
                if ( tangent )
                {
                    const CMap<T> V( v + p.weight_offset, fan, p.spec.out );
                    if ( conv )
                    {
                        dgcol.noalias() = dg * Wm.transpose();
                        dgcol.noalias() += g * V.transpose();
                        col2im( dgcol, n, p.in.h, p.in.w, p.in.c, dgnext );
                    }
                    else
                    {
                        dgcol.noalias() = dg * Wm.transpose();
                        dgcol.noalias() += g * V.transpose();
                        dgnext = CMap<T>( dgcol.data(), rows_in, p.in.c );
                    }
                }
                break;
            }
            case LayerKind::layernorm:
            {
                const std::size_t count = static_cast<std::size_t>( p.in.h ) * p.in.w;
                const std::size_t per   = count * static_cast<std::size_t>( p.in.c );
                gnext.resize( rows_in, p.in.c );
                if ( !tangent )
                {
                    for ( std::size_t s = 0; s < n; ++s )
                        ln_backward<T>( act[li].data() + s * per, theta + p.weight_offset,
                                        g.data() + s * per, count, p.in.c, gnext.data() + s * per,
                                        grad + p.weight_offset, grad + p.bias_offset );
                    break;
                }
                dgnext.resize( rows_in, p.in.c );
                dgamma.resize( p.weight_size );
                dggamma.assign( p.weight_size, Dual<T>() );
                dgbeta.assign( p.bias_size, Dual<T>() );
                for ( std::size_t k = 0; k < p.weight_size; ++k )
                    dgamma[k] = { theta[p.weight_offset + k], v[p.weight_offset + k] };
                dx.resize( per );
                dgy.resize( per );
                dgx.resize( per );
                for ( std::size_t s = 0; s < n; ++s )
                {
                    const T *xv = act[li].data() + s * per;
                    const T *xd = dact[li].data() + s * per;
                    const T *gv = g.data() + s * per;
                    const T *gd = dg.data() + s * per;
                    for ( std::size_t i = 0; i < per; ++i )
                    {
                        dx[i]  = { xv[i], xd[i] };
                        dgy[i] = { gv[i], gd[i] };
                    }
                    ln_backward<Dual<T>>( dx.data(), dgamma.data(), dgy.data(), count, p.in.c, dgx.data(),
                                          dggamma.data(), dgbeta.data() );
                    T *ov = gnext.data() + s * per;
                    T *od = dgnext.data() + s * per;
                    for ( std::size_t i = 0; i < per; ++i )
                    {
                        ov[i] = dgx[i].v;
                        od[i] = dgx[i].d;
                    }
                }
                for ( std::size_t k = 0; k < p.weight_size; ++k )
                {
                    grad[p.weight_offset + k] += dggamma[k].v;
                    hv[p.weight_offset + k] += dggamma[k].d;
                    grad[p.bias_offset + k] += dgbeta[k].v;
                    hv[p.bias_offset + k] += dgbeta[k].d;
                }
                break;
            }
            case LayerKind::relu:
                if ( !need_gx )
                    break;
                gnext = ( act[li].array() > T( 0 ) ).select( g.array(), T( 0 ) ).matrix();
                if ( tangent )
                    dgnext = ( act[li].array() > T( 0 ) ).select( dg.array(), T( 0 ) ).matrix();
                break;
            case LayerKind::avgpool_global:
            {
                if ( !need_gx )
                    break;
                const Eigen::Index count = static_cast<Eigen::Index>( p.in.h ) * p.in.w;
                const T            inv   = T( 1 ) / static_cast<T>( count );
                gnext.resize( rows_in, p.in.c );
                if ( tangent )
                    dgnext.resize( rows_in, p.in.c );
                for ( std::size_t s = 0; s < n; ++s )
                {
                    const auto idx = static_cast<Eigen::Index>( s );
                    gnext.middleRows( idx * count, count ).rowwise() = g.row( idx ) * inv;
                    if ( tangent )
                        dgnext.middleRows( idx * count, count ).rowwise() = dg.row( idx ) * inv;
                }
                break;
            }
        }
        if ( need_gx )
        {
            g.swap( gnext );
            if ( tangent )
                dg.swap( dgnext );
        }
    }
    std::copy_n( gr.data(), gr.size(), grad_out );
    if ( tangent )
        std::copy_n( hvb.data(), hvb.size(), hv_out );
}

template <class T>
Engine<T>::Engine( const NetworkLayout &layout )
    : impl_( std::make_unique<Impl>( layout ) )
{
    layout_ = &impl_->layout;
}

template <class T>
Engine<T>::~Engine() = default;

template <class T>
Engine<T>::Engine( Engine && ) noexcept = default;

namespace
{

template <class T>
void check_inputs( const NetworkLayout &layout, std::span<const T> theta, const Batch<T> &batch )
{
    if ( theta.size() != layout.param_count() )
        throw ValidationError( fmt::format( "parameter vector has {} values, network needs {}", theta.size(),
                                            layout.param_count() ) );
    if ( batch.size() == 0 )
        throw ValidationError( "empty batch" );
    if ( batch.inputs.size() != batch.size() * layout.input_size() )
        throw ValidationError( fmt::format( "batch input has {} values, expected {} x {}", batch.inputs.size(),
                                            batch.size(), layout.input_size() ) );
}

} // namespace

template <class T>
std::vector<std::array<T, 3>> Engine<T>::forward( std::span<const T> theta, const Batch<T> &batch )
{
    check_inputs( *layout_, theta, batch );
    impl_->forward( theta.data(), batch.inputs.data(), batch.size(), nullptr );
    const Mat<T>                 &y = impl_->act.back();
    std::vector<std::array<T, 3>> out( batch.size() );
    for ( std::size_t s = 0; s < out.size(); ++s )
        for ( int k = 0; k < 3; ++k )
            out[s][k] = y( static_cast<Eigen::Index>( s ), k );
    return out;
}

template <class T>
LossGrad<T> Engine<T>::loss_and_grad( std::span<const T> theta, const Batch<T> &batch, LossKind loss )
{
    check_inputs( *layout_, theta, batch );
    Impl &im = *impl_;
    im.forward( theta.data(), batch.inputs.data(), batch.size(), nullptr );
    const Mat<T>      &y = im.act.back();
    const std::size_t  n = batch.size();
    LossGrad<T>        out;
    im.g.resize( static_cast<Eigen::Index>( n ), 3 );
    double total = 0.0;
    for ( std::size_t s = 0; s < n; ++s )
    {
        const auto                  idx = static_cast<Eigen::Index>( s );
        const std::array<double, 3> p{ double( y( idx, 0 ) ), double( y( idx, 1 ) ), double( y( idx, 2 ) ) };
        const auto                  e = detail::eval_loss<double>( p, batch.targets[s], loss );
        total += e.loss;
        out.degenerate += e.degenerate ? 1 : 0;
        for ( int k = 0; k < 3; ++k )
            im.g( idx, k ) = static_cast<T>( e.grad[k] / static_cast<double>( n ) );
    }
    out.loss = total / static_cast<double>( n );
    out.grad.assign( layout_->param_count(), T( 0 ) );
    im.backward( out.grad.data(), nullptr );
    return out;
}

template <class T>
HvpResult<T> Engine<T>::hvp( std::span<const T> theta, const Batch<T> &batch, std::span<const T> v,
                             LossKind loss )
{
    check_inputs( *layout_, theta, batch );
    if ( v.size() != theta.size() )
        throw ValidationError( "direction vector length does not match the parameters" );
    Impl &im = *impl_;
    im.forward( theta.data(), batch.inputs.data(), batch.size(), v.data() );
    const Mat<T>     &y  = im.act.back();
    const Mat<T>     &yd = im.dact.back();
    const std::size_t n  = batch.size();
    HvpResult<T>      out;
    im.g.resize( static_cast<Eigen::Index>( n ), 3 );
    im.dg.resize( static_cast<Eigen::Index>( n ), 3 );
    double total = 0.0;
    for ( std::size_t s = 0; s < n; ++s )
    {
        const auto                    idx = static_cast<Eigen::Index>( s );
        std::array<Dual<double>, 3>   p;
        for ( int k = 0; k < 3; ++k )
            p[k] = { double( y( idx, k ) ), double( yd( idx, k ) ) };
        const auto e = detail::eval_loss<Dual<double>>( p, batch.targets[s], loss );
        total += e.loss;
        for ( int k = 0; k < 3; ++k )
        {
            im.g( idx, k )  = static_cast<T>( e.grad[k].v / static_cast<double>( n ) );
            im.dg( idx, k ) = static_cast<T>( e.grad[k].d / static_cast<double>( n ) );
        }
    }
    out.loss = total / static_cast<double>( n );
    out.grad.assign( layout_->param_count(), T( 0 ) );
    out.hv.assign( layout_->param_count(), T( 0 ) );
    im.backward( out.grad.data(), out.hv.data() );
    return out;
}

template <class T>
std::vector<T> Engine<T>::inner_adapt( std::span<const T> theta, const AlphaState &alpha, const Batch<T> &support,
                                       int steps, LossKind loss, const StepObserver<T> &observer )
{
    if ( steps < 0 )
        throw ValidationError( "inner step count must be non-negative" );
    alpha.validate( *layout_ );
    std::vector<T> cur( theta.begin(), theta.end() );
    std::vector<T> a( cur.size() );
    for ( int i = 0; i < steps; ++i )
    {
        const LossGrad<T> lg = loss_and_grad( cur, support, loss );
        alpha.expand<T>( *layout_, i, a );
        for ( std::size_t j = 0; j < cur.size(); ++j )
            cur[j] -= a[j] * lg.grad[j];
        if ( observer )
            observer( i, a );
    }
    return cur;
}

template <class T>
MetaGrad<T> Engine<T>::meta_backward( std::span<const T> theta, const AlphaState &alpha, const Batch<T> &support,
                                      const Batch<T> &query, int steps, MetaGradMode mode, LossKind loss )
{
    if ( steps < 1 )
        throw ValidationError( "meta gradient needs at least one inner step" );
    alpha.validate( *layout_ );
    const std::size_t P = layout_->param_count();

    std::vector<std::vector<T>> thetas;
    std::vector<std::vector<T>> grads;
    std::vector<T>              cur( theta.begin(), theta.end() );
    std::vector<T>              a( P );
    for ( int i = 0; i < steps; ++i )
    {
        LossGrad<T> lg = loss_and_grad( cur, support, loss );
        if ( mode == MetaGradMode::exact )
            thetas.push_back( cur );
        alpha.expand<T>( *layout_, i, a );
        for ( std::size_t j = 0; j < P; ++j )
            cur[j] -= a[j] * lg.grad[j];
        if ( mode == MetaGradMode::exact )
            grads.push_back( std::move( lg.grad ) );
    }

    MetaGrad<T> out;
    LossGrad<T> q  = loss_and_grad( cur, query, loss );
    out.outer_loss = q.loss;
    out.grad_alpha.assign( alpha.values.size(), 0.0 );
    std::vector<T> vec = std::move( q.grad );
    if ( mode == MetaGradMode::first_order )
    {
        out.grad_theta = std::move( vec );
        return out;
    }

    const auto    &owner = layout_->param_layer_of();
    std::vector<T> av( P );
    for ( int i = steps - 1; i >= 0; --i )
    {
        const auto &gi = grads[static_cast<std::size_t>( i )];
        alpha.expand<T>( *layout_, i, a );
        switch ( alpha.kind )
        {
            case AlphaKind::scalar:
            {
                double acc = 0.0;
                for ( std::size_t j = 0; j < P; ++j )
                    acc -= double( gi[j] ) * double( vec[j] );
                out.grad_alpha[0] += acc;
                break;
            }
            case AlphaKind::per_layer_per_step:
            {
                double *row = out.grad_alpha.data() + static_cast<std::size_t>( alpha.row_for_step( i ) ) * alpha.cols;
                for ( std::size_t j = 0; j < P; ++j )
                    row[owner[j]] -= double( gi[j] ) * double( vec[j] );
                break;
            }
            case AlphaKind::per_parameter:
                for ( std::size_t j = 0; j < P; ++j )
                    out.grad_alpha[j] -= double( gi[j] ) * double( vec[j] );
                break;
        }
        for ( std::size_t j = 0; j < P; ++j )
            av[j] = a[j] * vec[j];
        const HvpResult<T> h = hvp( thetas[static_cast<std::size_t>( i )], support, av, loss );
        for ( std::size_t j = 0; j < P; ++j )
            vec[j] -= h.hv[j];
    }
    out.grad_theta = std::move( vec );
    return out;
}

template class Engine<float>;
template class Engine<double>;

} // namespace ccmeta::nn
