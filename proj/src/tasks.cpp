// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/parallel.hpp>
#include <ccmeta/tasks.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ccmeta
{

Kelvin image_cct( const ProcessedImage &img, const CctOptions &opts )
{
    std::array<double, 3> sum{};
    std::size_t           n = 0;
    for ( std::size_t p = 0; p < img.image.pixels(); ++p )
    {
        if ( !img.valid.empty() && !img.valid[p] )
            continue;
        for ( int k = 0; k < 3; ++k )
            sum[k] += gamma_decode( img.image.data[p * 3 + k] );
        ++n;
    }
    if ( n == 0 )
        throw ValidationError( "image_cct: image has no valid pixels" );
    for ( auto &s : sum )
        s /= static_cast<double>( n );
    return cct_from_xy( rgb_to_xy( sum ), opts );
}

std::vector<std::size_t> annotate_ccts( LoadedDataset &ds, const CctOptions &opts, int workers )
{
    parallel_for( ds.images.size(), workers, [&]( std::size_t i ) {
        try
        {
            ds.images[i].cct = image_cct( ds.images[i], opts ).value();
        }
        catch ( const ValidationError & )
        {
            ds.images[i].cct.reset();
        }
    } );
    std::vector<std::size_t> rejected;
    for ( std::size_t i = 0; i < ds.images.size(); ++i )
        if ( !ds.images[i].cct )
            rejected.push_back( i );
    return rejected;
}

std::vector<CctEntry> cct_entries( const LoadedDataset &ds )
{
    std::vector<CctEntry> out;
    for ( std::size_t i = 0; i < ds.images.size(); ++i )
        if ( ds.images[i].cct )
            out.push_back( { i, ds.images[i].camera_id, *ds.images[i].cct } );
    return out;
}

int CctHistogram::bin_of( double cct ) const
{
    if ( edges.empty() || cct < edges.front() || cct > edges.back() )
        return -1;
    for ( int m = 0; m < bins; ++m )
        if ( cct <= edges[m + 1] )
            return m;
    return bins - 1;
}

namespace
{

std::vector<double> log_edges( double lo, double hi, int bins )
{
    const double        top = std::nextafter( hi, std::numeric_limits<double>::infinity() );
    const double        a = std::log( lo ), b = std::log( top );
    std::vector<double> e( static_cast<std::size_t>( bins ) + 1 );
    e.front() = lo;
    for ( int i = 1; i < bins; ++i )
        e[i] = std::exp( a + ( b - a ) * static_cast<double>( i ) / bins );
    e.back() = top;
    return e;
}

CctHistogram histogram_with_edges( const std::string &camera_id, std::span<const double> ccts,
                                   std::vector<double> edges )
{
    CctHistogram h;
    h.camera_id = camera_id;
    h.bins      = static_cast<int>( edges.size() ) - 1;
    h.edges     = std::move( edges );
    h.counts.assign( static_cast<std::size_t>( h.bins ), 0 );
    for ( double c : ccts )
    {
        const int m = h.bin_of( c );
        if ( m >= 0 )
            ++h.counts[m];
    }
    return h;
}

std::vector<double> edges_for( std::span<const double> ccts, int &bins, const HistogramOptions &opts,
                               const std::string &what )
{
    if ( bins < 1 )
        throw ValidationError( "histogram: bin count must be >= 1" );
    if ( ccts.size() < static_cast<std::size_t>( bins ) )
        throw ValidationError( "histogram for " + what + ": " + std::to_string( ccts.size() ) +
                               " computable images, need at least " + std::to_string( bins ) );
    const auto [lo, hi] = std::minmax_element( ccts.begin(), ccts.end() );
    if ( *lo == *hi && bins > 1 )
    {
        if ( !opts.degenerate_single_bin )
            throw ValidationError( "histogram for " + what + ": all temperatures are equal" );
        bins = 1;
    }
    return log_edges( *lo, *hi, bins );
}

} // namespace

CctHistogram build_histogram( const std::string &camera_id, std::span<const double> ccts, int bins,
                              const HistogramOptions &opts )
{
    auto edges = edges_for( ccts, bins, opts, camera_id );
    return histogram_with_edges( camera_id, ccts, std::move( edges ) );
}

std::map<std::string, CctHistogram> build_histograms( std::span<const CctEntry> entries, int bins,
                                                      const HistogramOptions &opts )
{
    std::map<std::string, std::vector<double>> per_camera;
    std::vector<double>                        all;
    for ( const auto &e : entries )
    {
        per_camera[e.camera_id].push_back( e.cct );
        all.push_back( e.cct );
    }

    std::map<std::string, CctHistogram> out;
    if ( opts.global_edges )
    {
        int  m     = bins;
        auto edges = edges_for( all, m, opts, "all cameras" );
        for ( const auto &[cam, ccts] : per_camera )
            out.emplace( cam, histogram_with_edges( cam, ccts, edges ) );
    }
    else
    {
        for ( const auto &[cam, ccts] : per_camera )
            out.emplace( cam, build_histogram( cam, ccts, bins, opts ) );
    }
    return out;
}

TaskAssignment assign_tasks( std::span<const CctEntry> entries,
                             const std::map<std::string, CctHistogram> &histograms,
                             std::size_t min_task_size )
{
    std::map<std::pair<std::string, int>, std::vector<std::size_t>> groups;
    for ( const auto &e : entries )
    {
        const auto it = histograms.find( e.camera_id );
        if ( it == histograms.end() )
            throw ValidationError( "assign_tasks: no histogram for camera " + e.camera_id );
        const int m = it->second.bin_of( e.cct );
        if ( m >= 0 )
            groups[{ e.camera_id, m }].push_back( e.id );
    }

    TaskAssignment out;
    for ( auto &[key, members] : groups )
    {
        std::sort( members.begin(), members.end() );
        if ( members.size() < min_task_size )
        {
            out.dropped.push_back( { key.first, key.second, members.size() } );
            continue;
        }
        const auto &h = histograms.at( key.first );
        TaskSpec    t;
        t.camera_id = key.first;
        t.kind      = TaskKind::bin;
        t.bin       = key.second;
        t.lo        = h.edges[key.second];
        t.hi        = h.edges[key.second + 1];
        t.members   = std::move( members );
        out.tasks.push_back( std::move( t ) );
    }
    return out;
}

TaskSpec knn_task( std::span<const CctEntry> camera_entries, double anchor_cct, std::size_t k,
                   std::optional<std::size_t> exclude )
{
    std::vector<const CctEntry *> pool;
    for ( const auto &e : camera_entries )
        if ( !exclude || e.id != *exclude )
            pool.push_back( &e );
    if ( k == 0 || pool.size() < k )
        throw ValidationError( "knn_task: need " + std::to_string( k ) + " images, have " +
                               std::to_string( pool.size() ) );
    for ( const auto *e : pool )
        if ( e->camera_id != pool.front()->camera_id )
            throw ValidationError( "knn_task: entries span more than one camera" );

    std::sort( pool.begin(), pool.end(), [&]( const CctEntry *a, const CctEntry *b ) {
        const double da = std::abs( a->cct - anchor_cct ), db = std::abs( b->cct - anchor_cct );
        return da != db ? da < db : a->id < b->id;
    } );

    TaskSpec t;
    t.camera_id  = pool.front()->camera_id;
    t.kind       = TaskKind::knn;
    t.anchor_cct = anchor_cct;
    t.lo         = std::numeric_limits<double>::infinity();
    t.hi         = -std::numeric_limits<double>::infinity();
    for ( std::size_t i = 0; i < k; ++i )
    {
        t.members.push_back( pool[i]->id );
        t.lo = std::min( t.lo, pool[i]->cct );
        t.hi = std::max( t.hi, pool[i]->cct );
    }
    std::sort( t.members.begin(), t.members.end() );
    return t;
}

namespace
{

Episode draw( std::vector<std::size_t> pool, std::size_t k, std::size_t q, std::mt19937_64 &rng,
              std::size_t task_index )
{
    if ( pool.size() < k + q )
        throw ValidationError( "sample_episode: task has " + std::to_string( pool.size() ) +
                               " images, need " + std::to_string( k + q ) );
    for ( std::size_t i = 0; i < k + q; ++i )
    {
        std::uniform_int_distribution<std::size_t> pick( i, pool.size() - 1 );
        std::swap( pool[i], pool[pick( rng )] );
    }
    Episode e;
    e.task_index = task_index;
    e.support.assign( pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>( k ) );
    e.query.assign( pool.begin() + static_cast<std::ptrdiff_t>( k ),
                    pool.begin() + static_cast<std::ptrdiff_t>( k + q ) );
    return e;
}

} // namespace

Episode sample_episode( const TaskSpec &task, std::size_t k, std::size_t q, std::mt19937_64 &rng,
                        std::size_t task_index )
{
    return draw( task.members, k, q, rng, task_index );
}

Episode sample_episode_excluding( const TaskSpec &task, std::size_t k, std::size_t q,
                                  std::size_t exclude, std::mt19937_64 &rng, std::size_t task_index )
{
    std::vector<std::size_t> pool;
    for ( auto id : task.members )
        if ( id != exclude )
            pool.push_back( id );
    return draw( std::move( pool ), k, q, rng, task_index );
}

double gt_spread( const LoadedDataset &ds, std::span<const std::size_t> members )
{
    double      sum   = 0.0;
    std::size_t pairs = 0;
    for ( std::size_t i = 0; i < members.size(); ++i )
        for ( std::size_t j = i + 1; j < members.size(); ++j )
        {
            sum += angular_error( ds.images.at( members[i] ).gt_illuminant, ds.images.at( members[j] ).gt_illuminant );
            ++pairs;
        }
    return pairs ? sum / static_cast<double>( pairs ) : 0.0;
}

std::string tasks_to_jsonl( std::span<const TaskSpec> tasks )
{
    std::string out;
    for ( const auto &t : tasks )
    {
        nlohmann::ordered_json j;
        j["camera_id"]  = t.camera_id;
        j["kind"]       = t.kind == TaskKind::bin ? "bin" : "knn";
        j["bin"]        = t.bin;
        j["lo"]         = t.lo;
        j["hi"]         = t.hi;
        j["anchor_cct"] = t.anchor_cct ? nlohmann::ordered_json( *t.anchor_cct ) : nullptr;
        j["members"]    = t.members;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<TaskSpec> tasks_from_jsonl( const std::string &text )
{
    std::vector<TaskSpec> out;
    std::istringstream    in( text );
    std::string           line;
    std::size_t           n = 0;
    while ( std::getline( in, line ) )
    {
        ++n;
        if ( line.empty() )
            continue;
        try
        {
            const auto j = nlohmann::json::parse( line );
            TaskSpec   t;
            t.camera_id  = j.at( "camera_id" ).get<std::string>();
            const auto k = j.at( "kind" ).get<std::string>();
            if ( k != "bin" && k != "knn" )
                throw ValidationError( "unknown task kind '" + k + "'" );
            t.kind = k == "bin" ? TaskKind::bin : TaskKind::knn;
            t.bin  = j.at( "bin" ).get<int>();
            t.lo   = j.at( "lo" ).get<double>();
            t.hi   = j.at( "hi" ).get<double>();
            if ( !j.at( "anchor_cct" ).is_null() )
                t.anchor_cct = j.at( "anchor_cct" ).get<double>();
            t.members = j.at( "members" ).get<std::vector<std::size_t>>();
            out.push_back( std::move( t ) );
        }
        catch ( const nlohmann::json::exception &e )
        {
            throw ValidationError( "task dump line " + std::to_string( n ) + ": " + e.what() );
        }
    }
    return out;
}

} // namespace ccmeta
