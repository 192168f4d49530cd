// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.
//
//   acceptance --cli <path to ccmeta> [--workdir DIR] [--only 1,3,7]

#include <ccmeta/colorsci.hpp>
#include <ccmeta/dataio.hpp>
#include <ccmeta/eval.hpp>
#include <ccmeta/meta.hpp>
#include <ccmeta/nn/network.hpp>
#include <ccmeta/runconfig.hpp>
#include <ccmeta/synthcam.hpp>
#include <ccmeta/tasks.hpp>
#include <ccmeta/textio.hpp>

#include "meta_oracle.hpp"
#include "nn_reference.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <set>

using namespace ccmeta;
namespace fs = std::filesystem;

namespace
{

struct Outcome
{
    bool        pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since( Clock::time_point t0 )
{
    return std::chrono::duration<double>( Clock::now() - t0 ).count();
}

// max_i |a_i - b_i| / max(|b_i|, 1e-3 max|b|)
double worst_relative( const std::vector<double> &a, const std::vector<double> &b )
{
    double scale = 0.0;
    for ( double v: b )
        scale = std::max( scale, std::abs( v ) );
    double worst = 0.0;
    for ( std::size_t i = 0; i < a.size(); ++i )
        worst = std::max( worst, std::abs( a[i] - b[i] ) / std::max( std::abs( b[i] ), 1e-3 * scale ) );
    return worst;
}

template <class F>
std::vector<double> central_diff( F f, std::vector<double> x, double h )
{
    std::vector<double> g( x.size() );
    for ( std::size_t i = 0; i < x.size(); ++i )
    {
        const double keep = x[i];
        x[i]              = keep + h;
        const double fp   = f( x );
        x[i]              = keep - h;
        const double fm   = f( x );
        x[i]              = keep;
        g[i]              = ( fp - fm ) / ( 2 * h );
    }
    return g;
}

LoadedDataset load_with_ccts( const std::string &manifest )
{
    auto ds = load_dataset( manifest );
    annotate_ccts( ds );
    return ds;
}

// -- 1 -------------------------------------------------------------------------

Outcome colorimetry()
{
    const auto t0    = Clock::now();
    double     worst = 0.0;
    for ( int i = 0; i < 200; ++i )
    {
        const double t   = 3000.0 + 12000.0 * i / 199.0;
        const auto   xy  = planckian_chromaticity( Kelvin( t ) );
        const double fit = cct_from_xy( xy ).value();
        worst            = std::max( worst, std::abs( fit - cct_oracle( xy ).value() ) );
    }
    const double secs = seconds_since( t0 );
    return { worst <= 100.0 && secs < 30.0,
             fmt::format( "200 locus points in [3000, 15000] K, max |fit - oracle| = {:.1f} K, {:.2f} s", worst,
                          secs ) };
}

// -- 2 -------------------------------------------------------------------------

Outcome gradients()
{
    const auto      t0 = Clock::now();
    std::mt19937_64 rng( 2 );
    double          worst_bwd = 0.0, worst_meta = 0.0;
    std::size_t     most_params = 0;
    for ( int trial = 0; trial < 20; ++trial )
    {
        const nn::NetworkLayout layout( test::random_small_spec( rng ) );
        most_params               = std::max( most_params, layout.param_count() );
        const auto         theta  = test::random_theta( layout, rng );
        const auto         batch  = test::random_batch<double>( layout, 3, rng );
        nn::Engine<double> eng( layout );
        const auto         g  = eng.loss_and_grad( theta, batch ).grad;
        const auto         fd = central_diff(
            [&]( const std::vector<double> &x ) { return eng.loss_and_grad( x, batch ).loss; }, theta, 1e-7 );
        worst_bwd = std::max( worst_bwd, worst_relative( g, fd ) );
    }
    for ( int trial = 0; trial < 20; ++trial )
    {
        const nn::NetworkLayout layout( test::random_small_spec( rng ) );
        most_params          = std::max( most_params, layout.param_count() );
        const auto   theta   = test::random_theta( layout, rng );
        const auto   s       = test::random_batch<double>( layout, 3, rng );
        const auto   q       = test::random_batch<double>( layout, 3, rng );
        auto         alpha   = nn::AlphaState::per_layer_per_step( 2, layout.param_layers(), 0.0f );
        std::uniform_real_distribution<float> u( 0.01f, 0.1f );
        for ( auto &a: alpha.values )
            a = u( rng );
        nn::Engine<double> eng( layout );
        const auto         mg = eng.meta_backward( theta, alpha, s, q, 2, nn::MetaGradMode::exact );
        const auto         fd = central_diff(
            [&]( const std::vector<double> &x ) {
                return eng.loss_and_grad( eng.inner_adapt( x, alpha, s, 2 ), q ).loss;
            },
            theta, 1e-6 );
        worst_meta = std::max( worst_meta, worst_relative( mg.grad_theta, fd ) );
    }
    const double secs = seconds_since( t0 );
    return { worst_bwd <= 1e-4 && worst_meta <= 1e-3 && most_params <= 200 && secs < 60.0,
             fmt::format( "20+20 random specs (<= {} params): backward rel {:.2e}, meta_backward(n=2) rel {:.2e}, "
                          "{:.2f} s",
                          most_params, worst_bwd, worst_meta, secs ) };
}

// -- 3 -------------------------------------------------------------------------

Outcome loss_and_outer_step( const std::string &workdir )
{
    std::mt19937_64                        rng( 3 );
    std::uniform_real_distribution<double> u( -1.0, 1.0 ), pos( 0.05, 1.0 );
    double                                 worst_dot = 0.0;
    for ( int t = 0; t < 1000; ++t )
    {
        const std::array<double, 3> p{ u( rng ), u( rng ), u( rng ) };
        const std::array<double, 3> gt{ pos( rng ), pos( rng ), pos( rng ) };
        const auto                  l = nn::angular_loss( p, gt );
        const double dot  = l.grad[0] * p[0] + l.grad[1] * p[1] + l.grad[2] * p[2];
        const double norm = std::hypot( l.grad[0], l.grad[1], l.grad[2] ) * std::hypot( p[0], p[1], p[2] );
        if ( norm > 0.0 )
            worst_dot = std::max( worst_dot, std::abs( dot ) / norm );
    }
    const bool orthogonal = worst_dot <= 4 * std::numeric_limits<double>::epsilon();

    SynthConfig sc;
    sc.cameras           = 3;
    sc.scenes_per_camera = 40;
    sc.image_size        = 24;
    sc.seed              = 3;
    const auto dir       = fs::path( workdir ) / "c3";
    fs::remove_all( dir );
    generate_dataset( sc, dir.string() );
    auto       ds  = load_with_ccts( ( dir / "manifest.csv" ).string() );
    const auto e   = cct_entries( ds );
    const auto asg = assign_tasks( e, build_histograms( e, 2 ), 10 );

    TrainConfig tc;
    tc.variant    = Variant::maml;
    tc.k_train    = 5;
    tc.q_train    = 5;
    tc.n_train    = 1;
    tc.meta_batch = 1;
    tc.input_size = 8;
    tc.alpha_init = 0.05;
    MetaTrainer tr( tc, ds, asg.tasks );
    const auto  eps      = tr.sample_iteration( 0 );
    const auto  expected = test::hand_outer_step( tr.layout(), tr.theta(), tc.alpha_init, 0.05, eps[0].support,
                                                  eps[0].query );
    tr.step( eps, 0.05, 0 );
    double worst = 0.0;
    for ( std::size_t j = 0; j < expected.size(); ++j )
        worst = std::max( worst, std::abs( tr.theta()[j] - expected[j] ) );
    return { orthogonal && worst <= 1e-6,
             fmt::format( "max |cos(grad, pred)| = {:.2e} over 1000 draws; outer step vs hand update max |diff| = "
                          "{:.2e} over {} params",
                          worst_dot, worst, expected.size() ) };
}

// -- 4 -------------------------------------------------------------------------

Outcome task_separation( const std::string &workdir )
{
    SynthConfig sc; // 4 cameras x 60 scenes, [2500, 9000] K, jitter 0.15
    const auto  dir = fs::path( workdir ) / "c4";
    fs::remove_all( dir );
    generate_dataset( sc, dir.string() );
    auto       ds = load_with_ccts( ( dir / "manifest.csv" ).string() );
    const auto e  = cct_entries( ds );
    const auto m2 = assign_tasks( e, build_histograms( e, 2 ), 1 );
    const auto m1 = assign_tasks( e, build_histograms( e, 1 ), 1 );

    double      worst_purity = 1.0;
    std::size_t pure = 0, total = 0;
    for ( const auto &t: m2.tasks )
    {
        std::size_t warm = 0;
        for ( auto id: t.members )
            warm += *ds.manifest.records[id].nominal_cct <= sc.warm_max ? 1 : 0;
        const std::size_t major = std::max( warm, t.members.size() - warm );
        pure += major;
        total += t.members.size();
        worst_purity = std::min( worst_purity, static_cast<double>( major ) / t.members.size() );
    }
    const double purity = static_cast<double>( pure ) / static_cast<double>( total );

    bool        spread_ok = true;
    std::string spreads;
    for ( const auto &cam: ds.manifest.camera_ids() )
    {
        double one = 0.0, two = 0.0;
        int    n2  = 0;
        for ( const auto &t: m1.tasks )
            if ( t.camera_id == cam )
                one = gt_spread( ds, t.members );
        for ( const auto &t: m2.tasks )
            if ( t.camera_id == cam )
            {
                two += gt_spread( ds, t.members );
                ++n2;
            }
        two /= std::max( 1, n2 );
        spread_ok = spread_ok && n2 > 0 && two < one;
        spreads += fmt::format( " {} {:.2f}<{:.2f}", cam, two, one );
    }
    return { purity >= 0.95 && spread_ok,
             fmt::format( "{} images, M=2 purity {:.3f} (worst task {:.3f}); spread M=2 < M=1 (deg):{}", e.size(),
                          purity, worst_purity, spreads ) };
}

// -- 5, 6 ------------------------------------------------------------------------

struct Experiment
{
    bool        ran = false;
    DrawReport  lslr, base, k5, k20;
    double      train_s = 0.0, base_s = 0.0, eval_s = 0.0;
    std::string error;
};

Experiment &experiment( const std::string &workdir )
{
    static Experiment ex;
    if ( ex.ran )
        return ex;
    ex.ran = true;
    try
    {
        SynthConfig sc;
        const auto  dir = fs::path( workdir ) / "c5";
        fs::remove_all( dir );
        generate_dataset( sc, dir.string() );
        auto       ds = load_dataset( ( dir / "manifest.csv" ).string() );
        TaskConfig tcfg;
        const auto asg = build_bin_tasks( ds, tcfg );

        TrainConfig tc; // lslr, n_train 5, K 10, meta-batch 4, 2000 iterations, 16 px, desk
        tc.held_out_camera = "cam03";
        auto t0            = Clock::now();
        const auto lslr    = meta_train( tc, ds, asg.tasks ).checkpoint;
        ex.train_s         = seconds_since( t0 );

        TrainConfig bc = tc;
        bc.variant     = Variant::baseline;
        t0             = Clock::now();
        const auto base = train_baseline( bc, ds ).checkpoint;
        ex.base_s       = seconds_since( t0 );

        EvalConfig ec; // K 10, n 10, 10 draws
        t0      = Clock::now();
        ex.lslr = evaluate( lslr, ds, asg.tasks, "cam03", ec );
        ex.base = evaluate( base, ds, asg.tasks, "cam03", ec );
        ex.eval_s = seconds_since( t0 );
        ec.k_test = 5;
        ex.k5     = evaluate( lslr, ds, asg.tasks, "cam03", ec );
        ec.k_test = 20;
        ex.k20    = evaluate( lslr, ds, asg.tasks, "cam03", ec );
    }
    catch ( const std::exception &e )
    {
        ex.error = e.what();
    }
    return ex;
}

Outcome adaptation_benefit( const std::string &workdir )
{
    const auto &ex = experiment( workdir );
    if ( !ex.error.empty() )
        return { false, "experiment failed: " + ex.error };
    const double n0 = ex.lslr.headline( 0 ), n10 = ex.lslr.headline( 10 ), b10 = ex.base.headline( 10 );
    const double secs = ex.train_s + ex.base_s + ex.eval_s;
    const bool   a    = n10 <= 0.8 * n0;
    const bool   b    = n10 < b10;
    return { a && b && secs < 600.0,
             fmt::format( "cam03 K=10: LSLR n=10 {:.3f} vs n=0 {:.3f} deg ({:.1f}% lower) [a {}]; baseline "
                          "fine-tuned n=10 {:.3f} deg [b {}]; train {:.0f} s + baseline {:.0f} s + eval {:.0f} s",
                          n10, n0, 100.0 * ( 1.0 - n10 / n0 ), a ? "ok" : "fail", b10, b ? "ok" : "fail",
                          ex.train_s, ex.base_s, ex.eval_s ) };
}

Outcome table_trends( const std::string &workdir )
{
    const auto &ex = experiment( workdir );
    if ( !ex.error.empty() )
        return { false, "experiment failed: " + ex.error };
    const double n1 = ex.lslr.headline( 1 ), n5 = ex.lslr.headline( 5 );
    const double k5 = ex.k5.headline( 10 ), k20 = ex.k20.headline( 10 );
    return { n5 <= n1 && k20 <= k5 + 0.1,
             fmt::format( "median n=5 {:.3f} <= n=1 {:.3f}; K=20 {:.3f} <= K=5 {:.3f} + 0.1 (n=10)", n5, n1, k20,
                          k5 ) };
}

// -- 7 -------------------------------------------------------------------------

AngularErrorStats naive_stats( std::vector<double> v )
{
    std::sort( v.begin(), v.end() );
    const double n = static_cast<double>( v.size() );
    auto         q = [&]( double p ) {
        const double h  = ( n - 1.0 ) * p + 1.0;
        const double fl = std::floor( h );
        const double lo = v[static_cast<std::size_t>( fl ) - 1];
        const double hi = fl < n ? v[static_cast<std::size_t>( fl )] : lo;
        return lo + ( h - fl ) * ( hi - lo );
    };
    AngularErrorStats s;
    s.mean              = std::accumulate( v.begin(), v.end(), 0.0 ) / n;
    s.median            = q( 0.5 );
    s.trimean           = ( q( 0.25 ) + 2.0 * s.median + q( 0.75 ) ) / 4.0;
    const std::size_t m = static_cast<std::size_t>( std::ceil( n / 4.0 ) );
    s.best25  = std::accumulate( v.begin(), v.begin() + static_cast<std::ptrdiff_t>( m ), 0.0 ) / m;
    s.worst25 = std::accumulate( v.end() - static_cast<std::ptrdiff_t>( m ), v.end(), 0.0 ) / m;
    s.gm      = std::exp( ( std::log( s.mean ) + std::log( s.median ) + std::log( s.trimean ) + std::log( s.best25 ) +
                       std::log( s.worst25 ) ) /
                     5.0 );
    return s;
}

double stats_gap( const AngularErrorStats &a, const AngularErrorStats &b )
{
    return std::max( { std::abs( a.mean - b.mean ), std::abs( a.median - b.median ), std::abs( a.trimean - b.trimean ),
                       std::abs( a.best25 - b.best25 ), std::abs( a.worst25 - b.worst25 ), std::abs( a.gm - b.gm ) } );
}

Outcome statistics()
{
    const std::vector<double> five{ 1, 2, 3, 4, 5 };
    const auto                s = error_stats( five );
    const AngularErrorStats   hand{ 3.0, 3.0, 3.0, 1.5, 4.5, std::pow( 3.0 * 3.0 * 3.0 * 1.5 * 4.5, 0.2 ) };
    const bool                exact = s == hand;

    std::mt19937_64                        rng( 7 );
    std::uniform_int_distribution<int>     len( 1, 80 );
    std::uniform_real_distribution<double> u( 0.01, 40.0 );
    double                                 worst = 0.0;
    for ( int t = 0; t < 1000; ++t )
    {
        std::vector<double> v( static_cast<std::size_t>( len( rng ) ) );
        for ( auto &x: v )
            x = u( rng );
        worst = std::max( worst, stats_gap( error_stats( v ), naive_stats( v ) ) );
    }
    return { exact && worst <= 1e-9,
             fmt::format( "{{1..5}} -> ({}, {}, {}, {}, {}, {:.5f}) {}; 1000 random lists max gap {:.1e}", s.mean,
                          s.median, s.trimean, s.best25, s.worst25, s.gm, exact ? "exact" : "MISMATCH", worst ) };
}

// -- 8 -------------------------------------------------------------------------

std::string quote( const std::string &s )
{
    return "'" + s + "'";
}

Outcome determinism( const std::string &workdir, const std::string &cli )
{
    if ( cli.empty() || !fs::exists( cli ) )
        return { false, fmt::format( "CLI binary not found at '{}'", cli ) };
    const auto root = fs::path( workdir ) / "c8";
    fs::remove_all( root );
    fs::create_directories( root );
    const auto cfg = root / "run.cfg";
    write_text_file( cfg.string(), "synth.cameras = 3\n"
                                   "synth.scenes_per_camera = 40\n"
                                   "synth.image_size = 24\n"
                                   "synth.seed = 11\n"
                                   "tasks.min_task_size = 10\n"
                                   "train.k_train = 5\n"
                                   "train.q_train = 5\n"
                                   "train.meta_batch = 2\n"
                                   "train.iterations = 40\n"
                                   "train.input_size = 8\n"
                                   "train.seed = 12\n"
                                   "train.held_out_camera = cam02\n"
                                   "eval.k_test = 5\n"
                                   "eval.n_test = 3\n"
                                   "eval.draws = 3\n"
                                   "eval.seed = 13\n" );
    for ( const char *run: { "a", "b" } )
    {
        const auto dir = root / run;
        const auto log = ( root / ( std::string( run ) + ".log" ) ).string();
        const auto base = fmt::format( "{} --config {} --workers 1", quote( cli ), quote( cfg.string() ) );
        const std::string cmds[] = {
            fmt::format( "{} synth --out {}", base, quote( ( dir / "ds" ).string() ) ),
            fmt::format( "{} train --manifest {} --out {}", base, quote( ( dir / "ds" / "manifest.csv" ).string() ),
                         quote( ( dir / "train" ).string() ) ),
            fmt::format( "{} eval --checkpoint {} --manifest {} --out {}", base,
                         quote( ( dir / "train" / "checkpoint.bin" ).string() ),
                         quote( ( dir / "ds" / "manifest.csv" ).string() ), quote( ( dir / "eval" ).string() ) ) };
        for ( const auto &c: cmds )
            if ( std::system( ( c + " >> " + quote( log ) + " 2>&1" ).c_str() ) != 0 )
                return { false, fmt::format( "command failed (see {}): {}", log, c ) };
    }
    std::string detail;
    bool        same = true;
    for ( const char *f: { "ds/manifest.csv", "train/train_log.csv", "eval/report.csv", "train/checkpoint.bin" } )
    {
        const bool eq = read_text_file( ( root / "a" / f ).string() ) == read_text_file( ( root / "b" / f ).string() );
        same          = same && eq;
        detail += fmt::format( "{}{} {}", detail.empty() ? "" : ", ", f, eq ? "identical" : "DIFFERS" );
    }
    return { same, "two CLI runs, workers=1: " + detail };
}

// -- 9 -------------------------------------------------------------------------

Outcome preprocessing()
{
    const ManifestRecord plain{ "x.png", "cam", IlluminantRGB( 1, 1, 1 ), {}, 0.0, std::nullopt };
    ManifestRecord       black = plain;
    black.black_level          = 2048.0;
    const auto px              = [&]( std::uint16_t v, const ManifestRecord &r, int depth = 16 ) {
        return preprocess( DecodedImage{ 1, 1, depth, { v, v, v } }, r ).image.data[0];
    };
    struct Check
    {
        const char *what;
        double      got, want;
    };
    const Check checks[] = {
        { "gamma(0.5)", gamma_encode( 0.5 ), 0.7297 },
        { "16-bit 65535", px( 65535, plain ), 1.0 },
        { "value at black level", px( 2048, black ), 0.0 },
        { "below black level", px( 1000, black ), 0.0 },
        { "16-bit 32768 -> 8-bit 128", px( 32768, plain ), std::pow( 128.0 / 255.0, 1.0 / 2.2 ) },
        { "8-bit 51", px( 51, plain, 8 ), std::pow( 0.2, 1.0 / 2.2 ) },
        { "8-bit 0", px( 0, plain, 8 ), 0.0 },
    };
    double      worst = 0.0;
    std::string detail;
    for ( const auto &c: checks )
    {
        worst = std::max( worst, std::abs( c.got - c.want ) );
        detail += fmt::format( "{}{} {:.4f}", detail.empty() ? "" : ", ", c.what, c.got );
    }
    return { worst <= 1e-4, fmt::format( "{}; max deviation {:.1e}", detail, worst ) };
}

} // namespace

int main( int argc, char **argv )
{
    CLI::App         app{ "Acceptance criteria runner" };
    std::string      cli;
    std::string      workdir = ( fs::temp_directory_path() / "ccmeta_acceptance" ).string();
    std::vector<int> only;
    app.add_option( "--cli", cli, "path to the ccmeta binary" );
    app.add_option( "--workdir", workdir, "scratch directory" );
    app.add_option( "--only", only, "criteria to run" )->delimiter( ',' );
    CLI11_PARSE( app, argc, argv );

    fs::create_directories( workdir );
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        { "colorimetry oracle agreement", [] { return colorimetry(); } },
        { "gradient correctness", [] { return gradients(); } },
        { "loss orthogonality and outer step", [&] { return loss_and_outer_step( workdir ); } },
        { "task-definition separation", [&] { return task_separation( workdir ); } },
        { "end-to-end adaptation benefit", [&] { return adaptation_benefit( workdir ); } },
        { "fine-tuning and shot-count trends", [&] { return table_trends( workdir ); } },
        { "statistics oracle", [] { return statistics(); } },
        { "CLI determinism", [&] { return determinism( workdir, cli ); } },
        { "preprocessing conformance", [] { return preprocessing(); } },
    };

    int failed = 0;
    for ( std::size_t i = 0; i < criteria.size(); ++i )
    {
        const int id = static_cast<int>( i + 1 );
        if ( !only.empty() && std::find( only.begin(), only.end(), id ) == only.end() )
            continue;
        Outcome o;
        try
        {
            o = criteria[i].second();
        }
        catch ( const std::exception &e )
        {
            o = { false, fmt::format( "exception: {}", e.what() ) };
        }
        failed += o.pass ? 0 : 1;
        fmt::print( "{} {}. {}: {}\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail );
        std::fflush( stdout );
    }
    return failed == 0 ? 0 : 1;
}
