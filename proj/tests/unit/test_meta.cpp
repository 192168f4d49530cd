// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include "meta_oracle.hpp"
#include "synth_fixture.hpp"

#include <ccmeta/error.hpp>
#include <ccmeta/meta.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace ccmeta;
using ccmeta::test::small_synth;

namespace
{

TrainConfig small_config()
{
    TrainConfig c;
    c.k_train    = 5;
    c.q_train    = 5;
    c.n_train    = 2;
    c.meta_batch = 2;
    c.iterations = 3;
    c.input_size = 8;
    return c;
}

double mean( const std::vector<TrainLogRow> &log, std::size_t a, std::size_t b )
{
    double s = 0.0;
    for ( std::size_t i = a; i < b; ++i )
        s += log[i].mean_outer_loss_degrees;
    return s / static_cast<double>( b - a );
}

} // namespace

TEST( MetaConfig, VariantNames )
{
    for ( auto v : { Variant::maml, Variant::metasgd, Variant::lslr, Variant::baseline } )
        EXPECT_EQ( parse_variant( to_string( v ) ), v );
    EXPECT_THROW( parse_variant( "reptile" ), ValidationError );
    EXPECT_EQ( parse_meta_grad( "first_order" ), nn::MetaGradMode::first_order );
    EXPECT_THROW( parse_meta_grad( "second" ), ValidationError );
    EXPECT_THROW( make_network_spec( "huge", 16 ), ValidationError );
}

TEST( MetaConfig, Validation )
{
    auto c       = small_config();
    c.meta_batch = 0;
    EXPECT_THROW( c.validate(), ValidationError );
    c      = small_config();
    c.beta = -1;
    EXPECT_THROW( c.validate(), ValidationError );
    c            = small_config();
    c.beta_decay = 0.0;
    EXPECT_THROW( c.validate(), ValidationError );
    EXPECT_NO_THROW( TrainConfig{}.validate() );
}

TEST( MetaConfig, BetaSchedule )
{
    TrainConfig c;
    c.beta                = 0.1;
    c.beta_decay          = 0.5;
    c.beta_decay_interval = 2;
    EXPECT_EQ( c.beta_at( 0 ), 0.1 );
    EXPECT_EQ( c.beta_at( 1 ), 0.1 );
    EXPECT_EQ( c.beta_at( 2 ), 0.05 );
    EXPECT_EQ( c.beta_at( 5 ), 0.025 );
    c.beta_decay_interval = 0;
    c.iterations          = 2000;
    EXPECT_EQ( c.decay_interval(), 80 );
    c.iterations = 10;
    EXPECT_EQ( c.decay_interval(), 1 );
}

TEST( MetaConfig, InitialAlphaShapes )
{
    const nn::NetworkLayout layout( make_network_spec( "desk", 16 ) );
    const auto              lslr = initial_alpha( Variant::lslr, layout, 5, 0.05f );
    EXPECT_EQ( lslr.kind, nn::AlphaKind::per_layer_per_step );
    EXPECT_EQ( lslr.rows, 5 );
    EXPECT_EQ( lslr.cols, static_cast<int>( layout.param_layers() ) );
    EXPECT_EQ( initial_alpha( Variant::metasgd, layout, 5, 0.05f ).values.size(), layout.param_count() );
    EXPECT_EQ( initial_alpha( Variant::maml, layout, 5, 0.05f ).values, std::vector<float>{ 0.05f } );
}

TEST( MetaConfig, EchoListsEveryKey )
{
    const auto e = TrainConfig{}.echo();
    for ( const char *k : { "variant", "meta_batch", "k_train", "q_train", "n_train", "beta", "beta_decay",
                            "beta_decay_interval", "alpha_init", "iterations", "meta_grad", "seed", "input_size",
                            "spec", "held_out_camera", "task_kind" } )
        EXPECT_NE( e.find( std::string( "train." ) + k + " = " ), std::string::npos ) << k;
}

TEST( InnerAdapt, LslrExtensionRule )
{
    const nn::NetworkLayout layout( make_network_spec( "desk", 8 ) );
    auto                    alpha = initial_alpha( Variant::lslr, layout, 5, 0.0f );
    for ( int r = 0; r < alpha.rows; ++r )
        for ( int c = 0; c < alpha.cols; ++c )
            alpha.values[static_cast<std::size_t>( r * alpha.cols + c )] = 0.001f * static_cast<float>( r + 1 ) + 1e-5f * c;
    const auto  &f     = small_synth();
    const auto   batch = make_batch( f.ds, f.tasks[0].members, 8, nullptr );
    const auto   theta = nn::init_params( layout, 1 ).values;
    std::vector<std::vector<float>> used;
    nn::Engine<float>               eng( layout );
    eng.inner_adapt( theta, alpha, batch, 10, nn::LossKind::angular,
                     [&]( int, std::span<const float> a ) { used.emplace_back( a.begin(), a.end() ); } );
    ASSERT_EQ( used.size(), 10u );
    for ( int i = 0; i < 5; ++i )
        EXPECT_NE( used[i], used[4 == i ? 3 : 4] );
    for ( int i = 5; i < 10; ++i )
        EXPECT_EQ( used[i], used[4] ) << "step " << i + 1;
    // step 5 uses row 4
    for ( std::size_t l = 0; l < layout.plans().size(); ++l )
    {
        const auto &p = layout.plans()[l];
        if ( p.weight_size == 0 )
            continue;
        const int col = p.param_layer;
        EXPECT_EQ( used[4][p.weight_offset], alpha.values[static_cast<std::size_t>( 4 * alpha.cols + col )] );
    }
}

TEST( Adapt, IdentityAndSingleStep )
{
    const auto &f = small_synth();
    auto        c = small_config();
    c.input_size  = 8;
    MetaTrainer tr( c, f.ds, f.tasks );
    auto        ck = tr.checkpoint( 0 );
    const auto &t  = f.tasks[0];
    std::vector<std::size_t> support( t.members.begin(), t.members.begin() + 5 );
    EXPECT_EQ( adapt( ck, f.ds, support, 0, 8 ), ck.theta );

    ck.alpha = nn::AlphaState::scalar( 0.03f );
    const auto        one = adapt( ck, f.ds, support, 1, 8 );
    nn::Engine<float> eng( nn::NetworkLayout( ck.spec ) );
    const auto        g = eng.loss_and_grad( ck.theta, make_batch( f.ds, support, 8, nullptr ) ).grad;
    for ( std::size_t j = 0; j < g.size(); ++j )
        EXPECT_EQ( one[j], ck.theta[j] - 0.03f * g[j] );

    // predictions at n_test = 0 equal the checkpoint forward
    const auto p0 = predict( ck, adapt( ck, f.ds, support, 0, 8 ), f.ds, support, 8 );
    EXPECT_EQ( p0, eng.forward( ck.theta, make_batch( f.ds, support, 8, nullptr ) ) );
}

TEST( Adapt, MixedCamerasRejected )
{
    const auto &f = small_synth();
    auto        c = small_config();
    MetaTrainer tr( c, f.ds, f.tasks );
    std::size_t other = 0;
    while ( f.ds.images[other].camera_id == f.ds.images[f.tasks[0].members[0]].camera_id )
        ++other;
    const std::vector<std::size_t> mixed{ f.tasks[0].members[0], other };
    EXPECT_THROW( adapt( tr.checkpoint( 0 ), f.ds, mixed, 2, 8 ), ValidationError );
}

TEST( MetaTrain, ZeroBetaLeavesThetaUnchanged )
{
    const auto &f  = small_synth();
    auto        c  = small_config();
    c.beta         = 0.0;
    c.iterations   = 1;
    MetaTrainer tr( c, f.ds, f.tasks );
    const auto  init = tr.theta();
    const auto  res  = tr.run();
    EXPECT_EQ( res.checkpoint.theta, init );
    EXPECT_EQ( res.log.size(), 1u );
}

TEST( MetaTrain, DeterministicAcrossRunsAndWorkers )
{
    const auto &f = small_synth();
    auto        c = small_config();
    c.variant     = Variant::metasgd;
    const auto a  = meta_train( c, f.ds, f.tasks );
    const auto b  = meta_train( c, f.ds, f.tasks );
    c.workers     = 2;
    const auto w  = meta_train( c, f.ds, f.tasks );
    EXPECT_EQ( format_train_log( a.log ), format_train_log( b.log ) );
    EXPECT_EQ( a.checkpoint.theta, b.checkpoint.theta );
    EXPECT_EQ( a.checkpoint.alpha, b.checkpoint.alpha );
    EXPECT_EQ( a.checkpoint.theta, w.checkpoint.theta );
    EXPECT_EQ( a.checkpoint.alpha, w.checkpoint.alpha );
    EXPECT_NE( a.checkpoint.alpha, initial_alpha( Variant::metasgd, nn::NetworkLayout( a.checkpoint.spec ), 2, 0.05f ) );
}

TEST( MetaTrain, LeaveOneCameraOut )
{
    const auto &f = small_synth();
    for ( auto kind : { TaskKind::bin, TaskKind::knn } )
    {
        auto c            = small_config();
        c.iterations      = 20;
        c.held_out_camera = "cam01";
        c.task_kind       = kind;
        c.meta_batch      = 4;
        MetaTrainer tr( c, f.ds, f.tasks );
        for ( int it = 0; it < c.iterations; ++it )
            for ( const auto &e : tr.sample_iteration( it ) )
            {
                EXPECT_NE( e.camera_id, "cam01" );
                for ( auto id : e.episode.support )
                    EXPECT_EQ( f.ds.images[id].camera_id, e.camera_id );
                for ( auto id : e.episode.query )
                {
                    EXPECT_EQ( f.ds.images[id].camera_id, e.camera_id );
                    EXPECT_EQ( std::count( e.episode.support.begin(), e.episode.support.end(), id ), 0 );
                }
            }
    }
    auto c            = small_config();
    c.held_out_camera = "cam01";
    c.iterations      = 5;
    const auto log    = meta_train( c, f.ds, f.tasks ).log;
    const auto csv    = format_train_log( log );
    EXPECT_EQ( csv.find( "cam01" ), std::string::npos );
    EXPECT_EQ( csv.substr( 0, csv.find( '\n' ) ), "iteration,beta,mean_outer_loss_degrees,cameras" );
}

TEST( MetaTrain, NeedsTwoCameras )
{
    const auto           &f = small_synth();
    std::vector<TaskSpec> one;
    for ( const auto &t : f.tasks )
        if ( t.camera_id == "cam00" )
            one.push_back( t );
    EXPECT_THROW( MetaTrainer( small_config(), f.ds, one ), ValidationError );
}

TEST( MetaTrain, IdenticalCopiesEqualSingleTask )
{
    const auto &f = small_synth();
    auto        c = small_config();
    MetaTrainer a( c, f.ds, f.tasks ), b( c, f.ds, f.tasks );
    const auto  eps = a.sample_iteration( 0 );
    std::vector<EpisodeBatch> copies( 4, eps[0] );
    a.step( copies, 0.05, 0 );
    b.step( std::span( eps ).first( 1 ), 0.05, 0 );
    EXPECT_EQ( a.theta(), b.theta() );
    EXPECT_EQ( a.alpha(), b.alpha() );
}

TEST( MetaTrain, OuterStepMatchesHandUpdate )
{
    const auto &f = small_synth();
    auto        c = small_config();
    c.variant     = Variant::maml;
    c.n_train     = 1;
    c.meta_batch  = 1;
    c.alpha_init  = 0.05;
    MetaTrainer tr( c, f.ds, f.tasks );
    const auto  eps      = tr.sample_iteration( 0 );
    const auto  expected = test::hand_outer_step( tr.layout(), tr.theta(), c.alpha_init, 0.05, eps[0].support,
                                                  eps[0].query );
    tr.step( eps, 0.05, 0 );
    double worst = 0.0;
    for ( std::size_t j = 0; j < expected.size(); ++j )
        worst = std::max( worst, std::abs( tr.theta()[j] - expected[j] ) );
    EXPECT_LT( worst, 1e-6 );
}

TEST( MetaTrain, FirstOrderFreezesAlpha )
{
    const auto &f = small_synth();
    auto        c = small_config();
    c.meta_grad   = nn::MetaGradMode::first_order;
    const auto r  = meta_train( c, f.ds, f.tasks );
    EXPECT_EQ( r.checkpoint.alpha, initial_alpha( Variant::lslr, nn::NetworkLayout( r.checkpoint.spec ), 2, 0.05f ) );
    EXPECT_NE( r.checkpoint.theta, MetaTrainer( c, f.ds, f.tasks ).theta() );
}

TEST( MetaTrain, LossDecreases )
{
    const auto &f = small_synth();
    auto        c = small_config();
    c.iterations  = 80;
    c.meta_batch  = 2;
    const auto r  = meta_train( c, f.ds, f.tasks );
    EXPECT_LT( mean( r.log, 72, 80 ), mean( r.log, 0, 8 ) );
    const auto ck = nn::parse_checkpoint( nn::serialize_checkpoint( r.checkpoint ) );
    EXPECT_EQ( ck, r.checkpoint );
    EXPECT_EQ( ck.alpha.rows, 2 );
    EXPECT_EQ( ck.iterations, 80u );
}

TEST( Baseline, ZeroBetaAndProgress )
{
    const auto &f = small_synth();
    auto        c = small_config();
    c.variant     = Variant::baseline;
    c.beta        = 0.0;
    c.iterations  = 2;
    const auto z  = train_baseline( c, f.ds );
    EXPECT_EQ( z.checkpoint.theta, nn::init_params( nn::NetworkLayout( z.checkpoint.spec ), derive_seed( c.seed, 10 ) ).values );

    c.beta       = 0.05;
    c.iterations = 100;
    const auto r = train_baseline( c, f.ds );
    EXPECT_LT( mean( r.log, 90, 100 ), mean( r.log, 0, 10 ) );
    EXPECT_EQ( r.checkpoint.variant, "baseline" );
    EXPECT_EQ( r.checkpoint.alpha, nn::AlphaState::scalar( 0.05f ) );
    EXPECT_EQ( nn::parse_checkpoint( nn::serialize_checkpoint( r.checkpoint ) ), r.checkpoint );
    EXPECT_EQ( format_train_log( r.log ), format_train_log( train_baseline( c, f.ds ).log ) );
}
