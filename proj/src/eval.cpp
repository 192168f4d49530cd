// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/eval.hpp>
#include <ccmeta/meta.hpp>
#include <ccmeta/parallel.hpp>
#include <ccmeta/synthcam.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace ccmeta
{

double quantile_sorted( std::span<const double> sorted, double p )
{
    if ( sorted.empty() )
        throw ValidationError( "quantile of an empty list" );
    const double      h  = ( static_cast<double>( sorted.size() ) - 1.0 ) * p;
    const std::size_t lo = static_cast<std::size_t>( std::floor( h ) );
    if ( lo + 1 >= sorted.size() )
        return sorted.back();
    return sorted[lo] + ( h - static_cast<double>( lo ) ) * ( sorted[lo + 1] - sorted[lo] );
}

AngularErrorStats error_stats( std::span<const double> errors )
{
    if ( errors.empty() )
        throw ValidationError( "statistics of an empty error list" );
    for ( double e: errors )
        if ( !std::isfinite( e ) || e < 0.0 )
            throw ValidationError( fmt::format( "angular errors must be finite and >= 0, got {}", e ) );
    std::vector<double> s( errors.begin(), errors.end() );
    std::sort( s.begin(), s.end() );
    const std::size_t n = s.size();

    AngularErrorStats out;
    double            sum = 0.0;
    for ( double e: s )
        sum += e;
    out.mean   = sum / static_cast<double>( n );
    out.median = n % 2 == 1 ? s[n / 2] : 0.5 * ( s[n / 2 - 1] + s[n / 2] );
    const double q1 = quantile_sorted( s, 0.25 );
    const double q3 = quantile_sorted( s, 0.75 );
    out.trimean     = 0.25 * ( q1 + 2.0 * out.median + q3 );
    const std::size_t quarter = ( n + 3 ) / 4;
    double            lo = 0.0, hi = 0.0;
    for ( std::size_t i = 0; i < quarter; ++i )
    {
        lo += s[i];
        hi += s[n - 1 - i];
    }
    out.best25  = lo / static_cast<double>( quarter );
    out.worst25 = hi / static_cast<double>( quarter );
    const double prod = out.mean * out.median * out.trimean * out.best25 * out.worst25;
    out.gm            = prod > 0.0 ? std::pow( prod, 0.2 ) : 0.0;
    return out;
}

AngularErrorStats cross_camera_geometric_mean( std::span<const AngularErrorStats> per_camera )
{
    if ( per_camera.empty() )
        throw ValidationError( "cross-camera mean of no cameras" );
    auto gm = [&]( double AngularErrorStats::*field ) {
        double log_sum = 0.0;
        for ( const auto &s: per_camera )
        {
            if ( !( s.*field > 0.0 ) )
                return 0.0;
            log_sum += std::log( s.*field );
        }
        return std::exp( log_sum / static_cast<double>( per_camera.size() ) );
    };
    AngularErrorStats out;
    out.mean    = gm( &AngularErrorStats::mean );
    out.median  = gm( &AngularErrorStats::median );
    out.trimean = gm( &AngularErrorStats::trimean );
    out.best25  = gm( &AngularErrorStats::best25 );
    out.worst25 = gm( &AngularErrorStats::worst25 );
    out.gm      = gm( &AngularErrorStats::gm );
    return out;
}

void EvalConfig::validate() const
{
    if ( k_test < 1 )
        throw ValidationError( "k_test must be >= 1" );
    if ( n_test < 0 )
        throw ValidationError( "n_test must be >= 0" );
    if ( draws < 1 )
        throw ValidationError( "draws must be >= 1" );
    if ( input_size < 1 )
        throw ValidationError( "input_size must be >= 1" );
    if ( workers < 1 )
        throw ValidationError( "workers must be >= 1" );
}

std::vector<double> DrawReport::draw_medians( int step ) const
{
    std::vector<double> out;
    for ( const auto &draw: errors.at( static_cast<std::size_t>( step ) ) )
        out.push_back( error_stats( draw ).median );
    return out;
}

double DrawReport::headline( int step ) const
{
    const auto m = draw_medians( step );
    double     s = 0.0;
    for ( double v: m )
        s += v;
    return s / static_cast<double>( m.size() );
}

double DrawReport::draw_median_std( int step ) const
{
    const auto   m    = draw_medians( step );
    const double mean = headline( step );
    double       ss   = 0.0;
    for ( double v: m )
        ss += ( v - mean ) * ( v - mean );
    return std::sqrt( ss / static_cast<double>( m.size() ) );
}

namespace
{

std::vector<double> draw_means( const std::vector<std::vector<double>> &by_draw )
{
    std::vector<double> mean( by_draw.front().size(), 0.0 );
    for ( const auto &d: by_draw )
        for ( std::size_t i = 0; i < mean.size(); ++i )
            mean[i] += d[i];
    for ( auto &v: mean )
        v /= static_cast<double>( by_draw.size() );
    return mean;
}

constexpr double kDegrees = 180.0 / std::numbers::pi;

} // namespace

double prediction_error_degrees( const std::array<float, 3> &pred, const IlluminantRGB &gt )
{
    return nn::angular_loss( { pred[0], pred[1], pred[2] }, gt.values() ).loss * kDegrees;
}

double DrawReport::median_of_draw_means( int step ) const
{
    return error_stats( draw_means( errors.at( static_cast<std::size_t>( step ) ) ) ).median;
}

AngularErrorStats DrawReport::stats( int step ) const
{
    return error_stats( draw_means( errors.at( static_cast<std::size_t>( step ) ) ) );
}

DrawReport evaluate( const nn::Checkpoint &ckpt, const LoadedDataset &ds, std::span<const TaskSpec> tasks,
                     const std::string &camera_id, const EvalConfig &config )
{
    config.validate();
    const nn::NetworkLayout layout( ckpt.spec );
    if ( layout.spec().height != config.input_size || layout.spec().width != config.input_size )
        throw ValidationError( fmt::format( "eval input size {} does not match the checkpoint network ({})",
                                            config.input_size, layout.spec().describe() ) );
    const auto k = static_cast<std::size_t>( config.k_test );

    DrawReport report;
    report.camera_id = camera_id;
    report.k_test    = config.k_test;
    report.n_test    = config.n_test;

    // Test image -> the task it is drawn from (bin mode) or its temperature (knn).
    std::vector<const TaskSpec *> owner;
    std::vector<CctEntry>         cam_entries;
    std::size_t                   camera_images = 0;
    for ( const auto &img: ds.images )
        camera_images += img.camera_id == camera_id ? 1 : 0;
    if ( config.task_kind == TaskKind::bin )
    {
        std::map<std::size_t, const TaskSpec *> by_image;
        for ( const auto &t: tasks )
        {
            if ( t.camera_id != camera_id )
                continue;
            if ( t.members.size() < k + 1 )
                throw ValidationError( fmt::format( "task (camera {}, bin {}) has {} images; K_test = {} needs {}",
                                                    t.camera_id, t.bin, t.members.size(), k, k + 1 ) );
            for ( std::size_t id: t.members )
                by_image.emplace( id, &t );
        }
        if ( by_image.empty() )
            throw ValidationError( fmt::format( "camera '{}' has no tasks", camera_id ) );
        for ( const auto &[id, t]: by_image )
        {
            report.image_ids.push_back( id );
            owner.push_back( t );
        }
    }
    else
    {
        for ( const auto &e: cct_entries( ds ) )
            if ( e.camera_id == camera_id )
                cam_entries.push_back( e );
        if ( cam_entries.size() < k + 1 )
            throw ValidationError( fmt::format( "camera '{}' has {} images with a temperature; K_test = {} needs {}",
                                                camera_id, cam_entries.size(), k, k + 1 ) );
        for ( const auto &e: cam_entries )
            report.image_ids.push_back( e.id );
    }
    report.unassigned = camera_images - report.image_ids.size();

    const std::size_t n_img   = report.image_ids.size();
    const auto        n_draws = static_cast<std::size_t>( config.draws );
    const auto        steps   = static_cast<std::size_t>( config.n_test ) + 1;
    report.errors.assign( steps, std::vector<std::vector<double>>( n_draws, std::vector<double>( n_img, 0.0 ) ) );
    report.supports.assign( n_draws, std::vector<std::vector<std::size_t>>( n_img ) );

    // Inputs are deterministic at test time, so build them once.
    const nn::Batch<float> all = make_batch( ds, report.image_ids, config.input_size, nullptr );
    std::map<std::size_t, std::size_t> row_of;
    for ( std::size_t i = 0; i < n_img; ++i )
        row_of[report.image_ids[i]] = i;
    const std::size_t in_size = layout.input_size();
    auto              slice   = [&]( std::span<const std::size_t> ids ) {
        nn::Batch<float> b;
        for ( std::size_t id: ids )
        {
            const auto it = row_of.find( id );
            if ( it != row_of.end() )
            {
                b.inputs.insert( b.inputs.end(), all.inputs.begin() + it->second * in_size,
                                 all.inputs.begin() + ( it->second + 1 ) * in_size );
                b.targets.push_back( all.targets[it->second] );
            }
            else
            {
                const auto one = make_batch( ds, std::span<const std::size_t>( &id, 1 ), config.input_size, nullptr );
                b.inputs.insert( b.inputs.end(), one.inputs.begin(), one.inputs.end() );
                b.targets.push_back( one.targets.front() );
            }
        }
        return b;
    };

    parallel_for( n_draws, config.workers, [&]( std::size_t d ) {
        nn::Engine<float>  engine( layout );
        std::vector<float> a( layout.param_count() );
        for ( std::size_t i = 0; i < n_img; ++i )
        {
            const std::size_t        id = report.image_ids[i];
            std::vector<std::size_t> support;
            if ( config.task_kind == TaskKind::bin )
            {
                std::mt19937_64 rng( derive_seed( config.seed, 50, d, id ) );
                support = sample_episode_excluding( *owner[i], k, 0, id, rng ).support;
            }
            else
            {
                const auto self = std::find_if( cam_entries.begin(), cam_entries.end(),
                                                [&]( const CctEntry &e ) { return e.id == id; } );
                support = knn_task( cam_entries, self->cct, k, id ).members;
            }
            if ( std::find( support.begin(), support.end(), id ) != support.end() )
                throw std::logic_error( "test image placed in its own support set" );

            const nn::Batch<float> sb   = slice( support );
            const nn::Batch<float> test = slice( std::span<const std::size_t>( &id, 1 ) );
            std::vector<float>     theta = ckpt.theta;
            for ( std::size_t s = 0; s < steps; ++s )
            {
                const auto                  p = engine.forward( theta, test ).front();
                const std::array<double, 3> pd{ p[0], p[1], p[2] };
                report.errors[s][d][i] = nn::angular_loss( pd, test.targets.front() ).loss * kDegrees;
                if ( s + 1 == steps )
                    break;
                const auto g = engine.loss_and_grad( theta, sb ).grad;
                ckpt.alpha.expand<float>( layout, static_cast<int>( s ), a );
                for ( std::size_t j = 0; j < theta.size(); ++j )
                    theta[j] -= a[j] * g[j];
            }
            report.supports[d][i] = std::move( support );
        }
    } );
    return report;
}

std::vector<ReportRow> report_rows( const DrawReport &report, const std::string &variant )
{
    std::vector<ReportRow> rows;
    for ( int s = 0; s <= report.n_test; ++s )
    {
        ReportRow r;
        r.camera          = report.camera_id;
        r.variant         = variant;
        r.k_test          = report.k_test;
        r.n_test          = s;
        r.stats           = report.stats( s );
        r.headline        = report.headline( s );
        r.draw_median_std = report.draw_median_std( s );
        r.median_of_means = report.median_of_draw_means( s );
        rows.push_back( std::move( r ) );
    }
    return rows;
}

namespace
{

constexpr const char *kReportHeader =
    "camera,variant,K_test,n_test,mean,median,trimean,best25,worst25,gm,headline_median_over_draws,"
    "draw_median_std,median_of_draw_means";

} // namespace

std::string format_report_csv( std::span<const ReportRow> rows )
{
    std::string out;
    out += "# angular errors in degrees\n";
    out += "# headline_median_over_draws: per-draw median over images, then mean over draws\n";
    out += "# median_of_draw_means: per-image mean over draws, then median over images\n";
    out += "# mean..gm: statistics of the per-image errors averaged over draws\n";
    out += "# draw_median_std: population standard deviation of the per-draw medians\n";
    out += kReportHeader;
    out += '\n';
    for ( const auto &r: rows )
        out += fmt::format( "{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.camera, r.variant, r.k_test, r.n_test,
                            r.stats.mean, r.stats.median, r.stats.trimean, r.stats.best25, r.stats.worst25,
                            r.stats.gm, r.headline, r.draw_median_std, r.median_of_means );
    return out;
}

std::vector<ReportRow> parse_report_csv( const std::string &text )
{
    std::istringstream     in( text );
    std::string            line;
    std::vector<ReportRow> rows;
    bool                   header = false;
    std::size_t            lineno = 0;
    while ( std::getline( in, line ) )
    {
        ++lineno;
        if ( line.empty() || line[0] == '#' )
            continue;
        if ( !header )
        {
            if ( line != kReportHeader )
                throw ValidationError( "report CSV header does not match the expected columns" );
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::string              cell;
        std::istringstream       ls( line );
        while ( std::getline( ls, cell, ',' ) )
            f.push_back( cell );
        if ( f.size() != 13 )
            throw ValidationError( fmt::format( "report line {} has {} fields, expected 13", lineno, f.size() ) );
        auto num = [&]( std::size_t i ) {
            double      v   = 0.0;
            const auto &s   = f[i];
            const auto  res = std::from_chars( s.data(), s.data() + s.size(), v );
            if ( res.ec != std::errc() || res.ptr != s.data() + s.size() )
                throw ValidationError( fmt::format( "report line {}: '{}' is not a number", lineno, s ) );
            return v;
        };
        ReportRow r;
        r.camera          = f[0];
        r.variant         = f[1];
        r.k_test          = static_cast<int>( num( 2 ) );
        r.n_test          = static_cast<int>( num( 3 ) );
        r.stats           = { num( 4 ), num( 5 ), num( 6 ), num( 7 ), num( 8 ), num( 9 ) };
        r.headline        = num( 10 );
        r.draw_median_std = num( 11 );
        r.median_of_means = num( 12 );
        rows.push_back( std::move( r ) );
    }
    if ( !header )
        throw ValidationError( "report CSV has no header" );
    return rows;
}

} // namespace ccmeta
