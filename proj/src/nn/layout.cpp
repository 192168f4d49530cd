// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/nn/network.hpp>

#include "loss_impl.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

namespace ccmeta::nn
{

NetworkSpec NetworkSpec::desk( int input_size )
{
    NetworkSpec s;
    s.height = s.width = input_size;
    s.channels         = 3;
    s.layers           = { { LayerKind::conv3x3, 16 }, { LayerKind::layernorm },
                           { LayerKind::relu },         { LayerKind::conv3x3, 16 },
                           { LayerKind::layernorm },    { LayerKind::relu },
                           { LayerKind::avgpool_global }, { LayerKind::dense, 16 },
                           { LayerKind::relu },         { LayerKind::dense, 3 } };
    return s;
}

NetworkSpec NetworkSpec::paper( int input_size )
{
    NetworkSpec s;
    s.height = s.width = input_size;
    s.channels         = 3;
    for ( int i = 0; i < 4; ++i )
    {
        s.layers.push_back( { LayerKind::conv3x3, 64 } );
        s.layers.push_back( { LayerKind::layernorm } );
        s.layers.push_back( { LayerKind::relu } );
    }
    s.layers.push_back( { LayerKind::avgpool_global } );
    s.layers.push_back( { LayerKind::dense, 64 } );
    s.layers.push_back( { LayerKind::relu } );
    s.layers.push_back( { LayerKind::dense, 3 } );
    return s;
}

std::string NetworkSpec::describe() const
{
    std::string out = fmt::format( "{}x{}x{}", height, width, channels );
    for ( const auto &l: layers )
    {
        switch ( l.kind )
        {
            case LayerKind::conv3x3: out += fmt::format( " conv{}", l.out ); break;
            case LayerKind::layernorm: out += " ln"; break;
            case LayerKind::relu: out += " relu"; break;
            case LayerKind::avgpool_global: out += " avgpool"; break;
            case LayerKind::dense: out += fmt::format( " dense{}", l.out ); break;
        }
    }
    return out;
}

NetworkLayout::NetworkLayout( NetworkSpec spec )
    : spec_( std::move( spec ) )
{
    if ( spec_.height <= 0 || spec_.width <= 0 || spec_.channels <= 0 )
        throw ValidationError( "network input shape must be positive" );
    if ( spec_.layers.empty() )
        throw ValidationError( "network has no layers" );

    Shape       cur{ spec_.height, spec_.width, spec_.channels };
    std::size_t offset = 0;
    for ( std::size_t i = 0; i < spec_.layers.size(); ++i )
    {
        const LayerSpec &ls = spec_.layers[i];
        LayerPlan        p;
        p.spec = ls;
        p.in   = cur;
        switch ( ls.kind )
        {
            case LayerKind::conv3x3:
                if ( ls.out <= 0 )
                    throw ValidationError( fmt::format( "layer {}: conv needs out > 0", i ) );
                p.out         = { cur.h, cur.w, ls.out };
                p.weight_size = 9u * static_cast<std::size_t>( cur.c ) * ls.out;
                p.bias_size   = static_cast<std::size_t>( ls.out );
                break;
            case LayerKind::layernorm:
                p.out         = cur;
                p.weight_size = static_cast<std::size_t>( cur.c );
                p.bias_size   = static_cast<std::size_t>( cur.c );
                break;
            case LayerKind::relu: p.out = cur; break;
            case LayerKind::avgpool_global: p.out = { 1, 1, cur.c }; break;
            case LayerKind::dense:
                if ( ls.out <= 0 )
                    throw ValidationError( fmt::format( "layer {}: dense needs out > 0", i ) );
                p.out         = { 1, 1, ls.out };
                p.weight_size = cur.size() * static_cast<std::size_t>( ls.out );
                p.bias_size   = static_cast<std::size_t>( ls.out );
                break;
            default: throw ValidationError( fmt::format( "layer {}: unknown kind", i ) );
        }
        if ( p.weight_size > 0 )
        {
            p.param_layer   = param_layers_++;
            p.weight_offset = offset;
            offset += p.weight_size;
            p.bias_offset = offset;
            offset += p.bias_size;
            param_layer_of_.insert( param_layer_of_.end(), p.weight_size + p.bias_size, p.param_layer );
        }
        plans_.push_back( p );
        cur = p.out;
    }
    if ( cur.h != 1 || cur.w != 1 || cur.c != 3 )
        throw ValidationError(
            fmt::format( "network output must be 1x1x3, got {}x{}x{}", cur.h, cur.w, cur.c ) );
    param_count_ = offset;
}

std::vector<LayerTensors> unflatten( const NetworkLayout &layout, std::span<const float> theta )
{
    if ( theta.size() != layout.param_count() )
        throw ValidationError( fmt::format( "parameter vector has {} values, layout needs {}",
                                            theta.size(), layout.param_count() ) );
    std::vector<LayerTensors> out;
    for ( const auto &p: layout.plans() )
    {
        if ( p.param_layer < 0 )
            continue;
        LayerTensors t;
        t.weight.assign( theta.begin() + p.weight_offset,
                         theta.begin() + p.weight_offset + p.weight_size );
        t.bias.assign( theta.begin() + p.bias_offset, theta.begin() + p.bias_offset + p.bias_size );
        out.push_back( std::move( t ) );
    }
    return out;
}

std::vector<float> flatten( const NetworkLayout &layout, const std::vector<LayerTensors> &layers )
{
    if ( layers.size() != static_cast<std::size_t>( layout.param_layers() ) )
        throw ValidationError( "layer tensor count does not match layout" );
    std::vector<float> theta( layout.param_count() );
    for ( const auto &p: layout.plans() )
    {
        if ( p.param_layer < 0 )
            continue;
        const auto &t = layers[static_cast<std::size_t>( p.param_layer )];
        if ( t.weight.size() != p.weight_size || t.bias.size() != p.bias_size )
            throw ValidationError( fmt::format( "layer {} tensor size mismatch", p.param_layer ) );
        std::copy( t.weight.begin(), t.weight.end(), theta.begin() + p.weight_offset );
        std::copy( t.bias.begin(), t.bias.end(), theta.begin() + p.bias_offset );
    }
    return theta;
}

NetworkParams init_params( const NetworkLayout &layout, std::uint64_t seed )
{
    NetworkParams params;
    params.init_seed = seed;
    params.values.assign( layout.param_count(), 0.0f );
    std::mt19937_64 rng( seed );
    for ( const auto &p: layout.plans() )
    {
        switch ( p.spec.kind )
        {
            case LayerKind::conv3x3:
            case LayerKind::dense:
            {
                const std::size_t fan_in = p.weight_size / static_cast<std::size_t>( p.spec.out );
                const double      bound  = std::sqrt( 6.0 / static_cast<double>( fan_in ) );
                std::uniform_real_distribution<double> u( -bound, bound );
                for ( std::size_t i = 0; i < p.weight_size; ++i )
                    params.values[p.weight_offset + i] = static_cast<float>( u( rng ) );
                break;
            }
            case LayerKind::layernorm:
                std::fill_n( params.values.begin() + p.weight_offset, p.weight_size, 1.0f );
                break;
            default: break;
        }
    }
    return params;
}

// --- AlphaState ---------------------------------------------------------

AlphaState AlphaState::scalar( float a )
{
    return { AlphaKind::scalar, 1, 1, { a } };
}

AlphaState AlphaState::per_layer_per_step( int steps, int layers, float a )
{
    if ( steps < 1 || layers < 1 )
        throw ValidationError( "per-layer alpha needs at least one step and one layer" );
    return { AlphaKind::per_layer_per_step, steps, layers,
             std::vector<float>( static_cast<std::size_t>( steps ) * layers, a ) };
}

AlphaState AlphaState::per_parameter( std::size_t params, float a )
{
    return { AlphaKind::per_parameter, 1, static_cast<int>( params ), std::vector<float>( params, a ) };
}

int AlphaState::row_for_step( int step ) const
{
    return std::min( step, rows - 1 );
}

void AlphaState::validate( const NetworkLayout &layout ) const
{
    if ( rows < 1 || cols < 1 || values.size() != static_cast<std::size_t>( rows ) * cols )
        throw ValidationError( "alpha values do not match their declared shape" );
    switch ( kind )
    {
        case AlphaKind::scalar:
            if ( rows != 1 || cols != 1 )
                throw ValidationError( "scalar alpha must be 1x1" );
            break;
        case AlphaKind::per_layer_per_step:
            if ( cols != layout.param_layers() )
                throw ValidationError( fmt::format( "per-layer alpha has {} columns, network has {} "
                                                    "parameterised layers",
                                                    cols, layout.param_layers() ) );
            break;
        case AlphaKind::per_parameter:
            if ( rows != 1 || static_cast<std::size_t>( cols ) != layout.param_count() )
                throw ValidationError( "per-parameter alpha length does not match the network" );
            break;
        default: throw ValidationError( "unknown alpha kind" );
    }
}

template <class T>
void AlphaState::expand( const NetworkLayout &layout, int step, std::span<T> out ) const
{
    if ( out.size() != layout.param_count() )
        throw ValidationError( "alpha expansion buffer has the wrong size" );
    switch ( kind )
    {
        case AlphaKind::scalar: std::fill( out.begin(), out.end(), static_cast<T>( values[0] ) ); break;
        case AlphaKind::per_layer_per_step:
        {
            const float *row   = values.data() + static_cast<std::size_t>( row_for_step( step ) ) * cols;
            const auto  &owner = layout.param_layer_of();
            for ( std::size_t j = 0; j < out.size(); ++j )
                out[j] = static_cast<T>( row[owner[j]] );
            break;
        }
        case AlphaKind::per_parameter:
            for ( std::size_t j = 0; j < out.size(); ++j )
                out[j] = static_cast<T>( values[j] );
            break;
    }
}

template void AlphaState::expand<float>( const NetworkLayout &, int, std::span<float> ) const;
template void AlphaState::expand<double>( const NetworkLayout &, int, std::span<double> ) const;

PredLoss angular_loss( const std::array<double, 3> &pred, const std::array<double, 3> &gt )
{
    const auto e = detail::eval_loss<double>( pred, gt, LossKind::angular );
    return { e.loss, e.grad, e.degenerate };
}

} // namespace ccmeta::nn
