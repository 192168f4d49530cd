// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/meta.hpp>
#include <ccmeta/parallel.hpp>
#include <ccmeta/synthcam.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace ccmeta
{

namespace
{

constexpr double kDegrees = 180.0 / std::numbers::pi;

// First `k` entries of a partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> draw_without_replacement( std::size_t n, std::size_t k, std::mt19937_64 &rng )
{
    std::vector<std::size_t> idx( n );
    for ( std::size_t i = 0; i < n; ++i )
        idx[i] = i;
    for ( std::size_t i = 0; i < k; ++i )
    {
        std::uniform_int_distribution<std::size_t> pick( i, n - 1 );
        std::swap( idx[i], idx[pick( rng )] );
    }
    idx.resize( k );
    return idx;
}

std::string join_cameras( const std::vector<std::string> &cams )
{
    std::string out;
    for ( const auto &c: cams )
    {
        if ( !out.empty() )
            out += ';';
        out += c;
    }
    return out;
}

} // namespace

std::string to_string( Variant v )
{
    switch ( v )
    {
        case Variant::maml: return "maml";
        case Variant::metasgd: return "metasgd";
        case Variant::lslr: return "lslr";
        case Variant::baseline: return "baseline";
    }
    return "unknown";
}

Variant parse_variant( const std::string &name )
{
    if ( name == "maml" )
        return Variant::maml;
    if ( name == "metasgd" )
        return Variant::metasgd;
    if ( name == "lslr" )
        return Variant::lslr;
    if ( name == "baseline" )
        return Variant::baseline;
    throw ValidationError( fmt::format( "unknown variant '{}' (maml, metasgd, lslr, baseline)", name ) );
}

std::string to_string( nn::MetaGradMode m )
{
    return m == nn::MetaGradMode::exact ? "exact" : "first_order";
}

nn::MetaGradMode parse_meta_grad( const std::string &name )
{
    if ( name == "exact" )
        return nn::MetaGradMode::exact;
    if ( name == "first_order" )
        return nn::MetaGradMode::first_order;
    throw ValidationError( fmt::format( "unknown meta gradient mode '{}' (exact, first_order)", name ) );
}

nn::NetworkSpec make_network_spec( const std::string &name, int input_size )
{
    if ( input_size < 1 )
        throw ValidationError( "input size must be positive" );
    if ( name == "desk" )
        return nn::NetworkSpec::desk( input_size );
    if ( name == "paper" )
        return nn::NetworkSpec::paper( input_size );
    throw ValidationError( fmt::format( "unknown network spec '{}' (desk, paper)", name ) );
}

void TrainConfig::validate() const
{
    if ( meta_batch < 1 )
        throw ValidationError( "meta_batch must be >= 1" );
    if ( k_train < 1 || q_train < 1 )
        throw ValidationError( "k_train and q_train must be >= 1" );
    if ( n_train < 1 )
        throw ValidationError( "n_train must be >= 1" );
    if ( !( beta >= 0.0 ) || !std::isfinite( beta ) )
        throw ValidationError( "beta must be finite and >= 0" );
    if ( !( beta_decay > 0.0 && beta_decay <= 1.0 ) )
        throw ValidationError( "beta_decay must be in (0, 1]" );
    if ( beta_decay_interval < 0 )
        throw ValidationError( "beta_decay_interval must be >= 0" );
    if ( !( alpha_init >= 0.0 ) || !std::isfinite( alpha_init ) )
        throw ValidationError( "alpha_init must be finite and >= 0" );
    if ( iterations < 0 )
        throw ValidationError( "iterations must be >= 0" );
    if ( input_size < 1 )
        throw ValidationError( "input_size must be >= 1" );
    if ( workers < 1 )
        throw ValidationError( "workers must be >= 1" );
    make_network_spec( spec, input_size );
}

int TrainConfig::decay_interval() const
{
    if ( beta_decay_interval > 0 )
        return beta_decay_interval;
    return std::max( 1, iterations / 25 );
}

double TrainConfig::beta_at( int iteration ) const
{
    return beta * std::pow( beta_decay, iteration / decay_interval() );
}

std::string TrainConfig::echo() const
{
    std::string s;
    s += fmt::format( "train.variant = {}\n", to_string( variant ) );
    s += fmt::format( "train.meta_batch = {}\n", meta_batch );
    s += fmt::format( "train.k_train = {}\n", k_train );
    s += fmt::format( "train.q_train = {}\n", q_train );
    s += fmt::format( "train.n_train = {}\n", n_train );
    s += fmt::format( "train.beta = {}\n", beta );
    s += fmt::format( "train.beta_decay = {}\n", beta_decay );
    s += fmt::format( "train.beta_decay_interval = {}\n", beta_decay_interval );
    s += fmt::format( "train.alpha_init = {}\n", alpha_init );
    s += fmt::format( "train.iterations = {}\n", iterations );
    s += fmt::format( "train.meta_grad = {}\n", to_string( meta_grad ) );
    s += fmt::format( "train.seed = {}\n", seed );
    s += fmt::format( "train.input_size = {}\n", input_size );
    s += fmt::format( "train.spec = {}\n", spec );
    s += fmt::format( "train.held_out_camera = {}\n", held_out_camera );
    s += fmt::format( "train.task_kind = {}\n", task_kind == TaskKind::knn ? "knn" : "bin" );
    return s;
}

nn::AlphaState initial_alpha( Variant v, const nn::NetworkLayout &layout, int n_train, float alpha_init )
{
    switch ( v )
    {
        case Variant::metasgd: return nn::AlphaState::per_parameter( layout.param_count(), alpha_init );
        case Variant::lslr: return nn::AlphaState::per_layer_per_step( n_train, layout.param_layers(), alpha_init );
        default: return nn::AlphaState::scalar( alpha_init );
    }
}

std::string format_train_log( std::span<const TrainLogRow> rows )
{
    std::string out = "iteration,beta,mean_outer_loss_degrees,cameras\n";
    for ( const auto &r: rows )
        out += fmt::format( "{},{},{},{}\n", r.iteration, r.beta, r.mean_outer_loss_degrees, join_cameras( r.cameras ) );
    return out;
}

nn::Batch<float> make_batch( const LoadedDataset &ds, std::span<const std::size_t> ids, int input_size,
                             std::mt19937_64 *rng )
{
    nn::Batch<float> b;
    b.inputs.reserve( ids.size() * static_cast<std::size_t>( input_size ) * input_size * 3 );
    for ( std::size_t id: ids )
    {
        if ( id >= ds.images.size() )
            throw ValidationError( fmt::format( "image id {} out of range", id ) );
        const ProcessedImage &img = ds.images[id];
        const auto            x   = rng ? crop_resize( img, input_size, *rng ) : full_resize( img, input_size );
        b.inputs.insert( b.inputs.end(), x.begin(), x.end() );
        b.targets.push_back( img.gt_illuminant.values() );
    }
    return b;
}

// --- MetaTrainer ----------------------------------------------------------

MetaTrainer::MetaTrainer( TrainConfig config, const LoadedDataset &ds, std::span<const TaskSpec> tasks )
    : config_( std::move( config ) ), ds_( ds ), layout_( make_network_spec( config_.spec, config_.input_size ) )
{
    config_.validate();
    if ( config_.variant == Variant::baseline )
        throw ValidationError( "the baseline variant is trained with train_baseline" );

    const std::size_t need = static_cast<std::size_t>( config_.k_train + config_.q_train );
    std::set<std::string> cameras;
    if ( config_.task_kind == TaskKind::bin )
    {
        for ( const auto &t: tasks )
        {
            if ( t.camera_id == config_.held_out_camera || t.members.size() < need )
                continue;
            tasks_.push_back( t );
            cameras.insert( t.camera_id );
        }
    }
    else
    {
        std::map<std::string, std::size_t> per_camera;
        for ( const auto &e: cct_entries( ds ) )
            if ( e.camera_id != config_.held_out_camera )
            {
                entries_.push_back( e );
                ++per_camera[e.camera_id];
            }
        // One pseudo-task per camera holding its members; anchors are drawn from it.
        for ( const auto &[cam, count]: per_camera )
        {
            if ( count < need )
                continue;
            TaskSpec t;
            t.camera_id = cam;
            t.kind      = TaskKind::knn;
            for ( const auto &e: entries_ )
                if ( e.camera_id == cam )
                    t.members.push_back( e.id );
            tasks_.push_back( std::move( t ) );
            cameras.insert( cam );
        }
    }
    if ( tasks_.empty() )
        throw ValidationError( fmt::format( "no training task has the {} images an episode needs", need ) );
    if ( cameras.size() < 2 )
        throw ValidationError( fmt::format( "meta-training needs at least two training cameras, found {}",
                                            cameras.size() ) );

    theta_ = nn::init_params( layout_, derive_seed( config_.seed, 10 ) ).values;
    alpha_ = initial_alpha( config_.variant, layout_, config_.n_train, static_cast<float>( config_.alpha_init ) );
    const bool learned = config_.variant == Variant::metasgd || config_.variant == Variant::lslr;
    learn_alpha_       = learned && config_.meta_grad == nn::MetaGradMode::exact;
    if ( learned && !learn_alpha_ )
        fmt::print( stderr, "warning: first_order meta gradients give no step-size gradient; alpha stays frozen\n" );
}

std::vector<EpisodeBatch> MetaTrainer::sample_iteration( int iteration ) const
{
    const auto       it = static_cast<std::uint64_t>( iteration );
    std::mt19937_64  rng( derive_seed( config_.seed, 20, it ) );
    const auto       mb = static_cast<std::size_t>( config_.meta_batch );
    std::vector<std::size_t> picks;
    if ( tasks_.size() >= mb )
        picks = draw_without_replacement( tasks_.size(), mb, rng );
    else
    {
        std::uniform_int_distribution<std::size_t> any( 0, tasks_.size() - 1 );
        for ( std::size_t b = 0; b < mb; ++b )
            picks.push_back( any( rng ) );
    }

    const auto                k = static_cast<std::size_t>( config_.k_train );
    const auto                q = static_cast<std::size_t>( config_.q_train );
    std::vector<EpisodeBatch> out( mb );
    for ( std::size_t b = 0; b < mb; ++b )
    {
        const TaskSpec &task = tasks_[picks[b]];
        EpisodeBatch   &e    = out[b];
        e.task_index         = picks[b];
        e.camera_id          = task.camera_id;
        if ( config_.task_kind == TaskKind::knn )
        {
            std::uniform_int_distribution<std::size_t> member( 0, task.members.size() - 1 );
            const std::size_t                          anchor_id = task.members[member( rng )];
            std::vector<CctEntry>                      cam;
            double                                     anchor = 0.0;
            for ( const auto &en: entries_ )
                if ( en.camera_id == task.camera_id )
                {
                    cam.push_back( en );
                    if ( en.id == anchor_id )
                        anchor = en.cct;
                }
            const TaskSpec knn = knn_task( cam, anchor, k + q );
            e.episode          = sample_episode( knn, k, q, rng, picks[b] );
        }
        else
        {
            e.episode = sample_episode( task, k, q, rng, picks[b] );
        }
    }
    // Crops use their own streams so batch assembly order never matters.
    for ( std::size_t b = 0; b < mb; ++b )
    {
        std::mt19937_64 crop( derive_seed( config_.seed, 21, it, b ) );
        out[b].support = make_batch( ds_, out[b].episode.support, config_.input_size, &crop );
        out[b].query   = make_batch( ds_, out[b].episode.query, config_.input_size, &crop );
    }
    return out;
}

TrainLogRow MetaTrainer::step( std::span<const EpisodeBatch> episodes, double beta, int iteration )
{
    if ( episodes.empty() )
        throw ValidationError( "outer step needs at least one episode" );
    while ( engines_.size() < episodes.size() )
        engines_.emplace_back( layout_ );

    std::vector<nn::MetaGrad<float>> grads( episodes.size() );
    parallel_for( episodes.size(), config_.workers, [&]( std::size_t b ) {
        grads[b] = engines_[b].meta_backward( theta_, alpha_, episodes[b].support, episodes[b].query,
                                              config_.n_train, config_.meta_grad );
    } );

    // Fixed reduction order by episode index.
    const double        inv = 1.0 / static_cast<double>( episodes.size() );
    std::vector<double> g( theta_.size(), 0.0 ), ga( alpha_.values.size(), 0.0 );
    double              loss = 0.0;
    for ( const auto &mg: grads )
    {
        for ( std::size_t j = 0; j < g.size(); ++j )
            g[j] += mg.grad_theta[j];
        for ( std::size_t j = 0; j < ga.size(); ++j )
            ga[j] += mg.grad_alpha[j];
        loss += mg.outer_loss;
    }
    for ( std::size_t j = 0; j < theta_.size(); ++j )
        theta_[j] = static_cast<float>( theta_[j] - beta * ( g[j] * inv ) );
    if ( learn_alpha_ )
        for ( std::size_t j = 0; j < ga.size(); ++j )
            alpha_.values[j] = static_cast<float>( alpha_.values[j] - beta * ( ga[j] * inv ) );

    TrainLogRow row;
    row.iteration               = iteration + 1;
    row.beta                    = beta;
    row.mean_outer_loss_degrees = loss * inv * kDegrees;
    for ( const auto &e: episodes )
        row.cameras.push_back( e.camera_id );
    return row;
}

void MetaTrainer::set_theta( std::vector<float> theta )
{
    if ( theta.size() != layout_.param_count() )
        throw ValidationError( "parameter vector does not match the network" );
    theta_ = std::move( theta );
}

nn::Checkpoint MetaTrainer::checkpoint( std::uint64_t iterations ) const
{
    nn::Checkpoint c;
    c.spec        = layout_.spec();
    c.theta       = theta_;
    c.alpha       = alpha_;
    c.variant     = to_string( config_.variant );
    c.config_echo = config_.echo();
    c.iterations  = iterations;
    return c;
}

TrainResult MetaTrainer::run( const ProgressFn &progress )
{
    TrainResult result;
    for ( int it = 0; it < config_.iterations; ++it )
    {
        const auto episodes = sample_iteration( it );
        result.log.push_back( step( episodes, config_.beta_at( it ), it ) );
        if ( progress )
            progress( result.log.back() );
    }
    result.checkpoint = checkpoint( static_cast<std::uint64_t>( config_.iterations ) );
    return result;
}

TrainResult meta_train( const TrainConfig &config, const LoadedDataset &ds, std::span<const TaskSpec> tasks,
                        const ProgressFn &progress )
{
    MetaTrainer trainer( config, ds, tasks );
    return trainer.run( progress );
}

TrainResult train_baseline( const TrainConfig &config, const LoadedDataset &ds, const ProgressFn &progress )
{
    config.validate();
    const nn::NetworkLayout  layout( make_network_spec( config.spec, config.input_size ) );
    std::vector<std::size_t> pool;
    std::set<std::string>    cameras;
    for ( std::size_t i = 0; i < ds.images.size(); ++i )
        if ( ds.images[i].camera_id != config.held_out_camera )
        {
            pool.push_back( i );
            cameras.insert( ds.images[i].camera_id );
        }
    if ( cameras.size() < 2 )
        throw ValidationError( fmt::format( "baseline training needs at least two training cameras, found {}",
                                            cameras.size() ) );
    const std::size_t batch_size =
        static_cast<std::size_t>( config.meta_batch ) * static_cast<std::size_t>( config.k_train + config.q_train );
    if ( pool.size() < batch_size )
        throw ValidationError( fmt::format( "baseline batch needs {} images, training cameras have {}", batch_size,
                                            pool.size() ) );

    std::vector<float> theta = nn::init_params( layout, derive_seed( config.seed, 10 ) ).values;
    nn::Engine<float>  engine( layout );
    TrainResult        result;
    for ( int it = 0; it < config.iterations; ++it )
    {
        const auto               iu = static_cast<std::uint64_t>( it );
        std::mt19937_64          rng( derive_seed( config.seed, 40, iu ) );
        const auto               picks = draw_without_replacement( pool.size(), batch_size, rng );
        std::vector<std::size_t> ids;
        for ( std::size_t p: picks )
            ids.push_back( pool[p] );
        std::mt19937_64 crop( derive_seed( config.seed, 41, iu ) );
        const auto      batch = make_batch( ds, ids, config.input_size, &crop );
        const auto      lg    = engine.loss_and_grad( theta, batch );
        const double    beta  = config.beta_at( it );
        for ( std::size_t j = 0; j < theta.size(); ++j )
            theta[j] = static_cast<float>( theta[j] - beta * lg.grad[j] );

        TrainLogRow row;
        row.iteration               = it + 1;
        row.beta                    = beta;
        row.mean_outer_loss_degrees = lg.loss * kDegrees;
        std::set<std::string> seen;
        for ( std::size_t id: ids )
            seen.insert( ds.images[id].camera_id );
        row.cameras.assign( seen.begin(), seen.end() );
        result.log.push_back( std::move( row ) );
        if ( progress )
            progress( result.log.back() );
    }
    result.checkpoint.spec        = layout.spec();
    result.checkpoint.theta       = std::move( theta );
    result.checkpoint.alpha       = nn::AlphaState::scalar( static_cast<float>( config.alpha_init ) );
    result.checkpoint.variant     = to_string( Variant::baseline );
    TrainConfig echo              = config;
    echo.variant                  = Variant::baseline;
    result.checkpoint.config_echo = echo.echo();
    result.checkpoint.iterations  = static_cast<std::uint64_t>( config.iterations );
    return result;
}

std::vector<float> adapt( const nn::Checkpoint &ckpt, const LoadedDataset &ds, std::span<const std::size_t> support,
                          int n_test, int input_size )
{
    if ( n_test < 0 )
        throw ValidationError( "n_test must be >= 0" );
    if ( n_test > 0 && support.empty() )
        throw ValidationError( "adaptation needs a non-empty support set" );
    for ( std::size_t id: support )
    {
        if ( id >= ds.images.size() )
            throw ValidationError( fmt::format( "support image id {} out of range", id ) );
        if ( ds.images[id].camera_id != ds.images[support.front()].camera_id )
            throw ValidationError( fmt::format( "support set mixes cameras '{}' and '{}'",
                                                ds.images[support.front()].camera_id, ds.images[id].camera_id ) );
    }
    if ( n_test == 0 )
        return ckpt.theta;
    const nn::NetworkLayout layout( ckpt.spec );
    if ( layout.spec().height != input_size )
        throw ValidationError( "input size does not match the checkpoint network" );
    nn::Engine<float> engine( layout );
    const auto        batch = make_batch( ds, support, input_size, nullptr );
    return engine.inner_adapt( ckpt.theta, ckpt.alpha, batch, n_test );
}

std::vector<std::array<float, 3>> predict( const nn::Checkpoint &ckpt, std::span<const float> theta,
                                           const LoadedDataset &ds, std::span<const std::size_t> ids,
                                           int input_size )
{
    const nn::NetworkLayout layout( ckpt.spec );
    nn::Engine<float>       engine( layout );
    return engine.forward( theta, make_batch( ds, ids, input_size, nullptr ) );
}

} // namespace ccmeta
