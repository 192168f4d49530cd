// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/runconfig.hpp>
#include <ccmeta/textio.hpp>

#include <fmt/format.h>

#include <charconv>
#include <functional>
#include <set>

namespace ccmeta
{

namespace
{

std::string trim( const std::string &s )
{
    const auto b = s.find_first_not_of( " \t\r" );
    if ( b == std::string::npos )
        return {};
    const auto e = s.find_last_not_of( " \t\r" );
    return s.substr( b, e - b + 1 );
}

template <class T>
T parse_number( const std::string &key, const std::string &v )
{
    T          out{};
    const auto r = std::from_chars( v.data(), v.data() + v.size(), out );
    if ( v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size() )
        throw ValidationError( fmt::format( "{}: cannot parse '{}' as a number", key, v ) );
    return out;
}

bool parse_bool( const std::string &key, const std::string &v )
{
    if ( v == "true" || v == "1" )
        return true;
    if ( v == "false" || v == "0" )
        return false;
    throw ValidationError( fmt::format( "{}: expected true or false, got '{}'", key, v ) );
}

TaskKind parse_task_kind( const std::string &key, const std::string &v )
{
    if ( v == "bin" )
        return TaskKind::bin;
    if ( v == "knn" )
        return TaskKind::knn;
    throw ValidationError( fmt::format( "{}: expected bin or knn, got '{}'", key, v ) );
}

CctSampling parse_sampling( const std::string &key, const std::string &v )
{
    if ( v == "bimodal" )
        return CctSampling::bimodal;
    if ( v == "log_uniform" )
        return CctSampling::log_uniform;
    throw ValidationError( fmt::format( "{}: expected bimodal or log_uniform, got '{}'", key, v ) );
}

struct Entry
{
    ConfigKey                                                 info;
    std::function<void( RunConfig &, const std::string & )>  set;
    std::function<std::string( const RunConfig & )>          get;
};

template <class T, class Ref>
Entry number( std::string key, std::string help, Ref ref )
{
    return { { key, std::move( help ) },
             [ref, key]( RunConfig &c, const std::string &v ) { ref( c ) = parse_number<T>( key, v ); },
             [ref]( const RunConfig &c ) { return fmt::format( "{}", ref( const_cast<RunConfig &>( c ) ) ); } };
}

template <class Ref>
Entry flag( std::string key, std::string help, Ref ref )
{
    return { { key, std::move( help ) },
             [ref, key]( RunConfig &c, const std::string &v ) { ref( c ) = parse_bool( key, v ); },
             [ref]( const RunConfig &c ) { return ref( const_cast<RunConfig &>( c ) ) ? "true" : "false"; } };
}

template <class Ref>
Entry text( std::string key, std::string help, Ref ref )
{
    return { { key, std::move( help ) }, [ref]( RunConfig &c, const std::string &v ) { ref( c ) = v; },
             [ref]( const RunConfig &c ) { return ref( const_cast<RunConfig &>( c ) ); } };
}

#define CCMETA_REF( path ) []( RunConfig &c ) -> auto & { return c.path; }

const std::vector<Entry> &registry()
{
    static const std::vector<Entry> r = [] {
        std::vector<Entry> e;
        e.push_back( number<int>( "synth.cameras", "number of simulated cameras", CCMETA_REF( synth.cameras ) ) );
        e.push_back( number<int>( "synth.scenes_per_camera", "scenes rendered per camera",
                                  CCMETA_REF( synth.scenes_per_camera ) ) );
        e.push_back( number<double>( "synth.cct_min", "lowest illuminant temperature (K)",
                                     CCMETA_REF( synth.cct_min ) ) );
        e.push_back( number<double>( "synth.cct_max", "highest illuminant temperature (K)",
                                     CCMETA_REF( synth.cct_max ) ) );
        e.push_back( { { "synth.sampling", "temperature sampling: bimodal or log_uniform" },
                       []( RunConfig &c, const std::string &v ) {
                           c.synth.sampling = parse_sampling( "synth.sampling", v );
                       },
                       []( const RunConfig &c ) -> std::string {
                           return c.synth.sampling == CctSampling::bimodal ? "bimodal" : "log_uniform";
                       } } );
        e.push_back( number<double>( "synth.warm_max", "bimodal warm group upper bound (K)",
                                     CCMETA_REF( synth.warm_max ) ) );
        e.push_back( number<double>( "synth.cold_min", "bimodal cold group lower bound (K)",
                                     CCMETA_REF( synth.cold_min ) ) );
        e.push_back( number<double>( "synth.warm_fraction", "bimodal share of warm scenes",
                                     CCMETA_REF( synth.warm_fraction ) ) );
        e.push_back( number<double>( "synth.css_jitter", "camera sensitivity jitter", CCMETA_REF( synth.css_jitter ) ) );
        e.push_back( number<double>( "synth.spd_jitter", "off-locus illuminant jitter (0 disables)",
                                     CCMETA_REF( synth.spd_jitter ) ) );
        e.push_back( number<int>( "synth.image_size", "rendered image side (px)", CCMETA_REF( synth.image_size ) ) );
        e.push_back( number<double>( "synth.noise_sigma", "sensor noise, fraction of full scale",
                                     CCMETA_REF( synth.noise_sigma ) ) );
        e.push_back( number<int>( "synth.reflectance_bank", "reflectance curves in the bank",
                                  CCMETA_REF( synth.reflectance_bank ) ) );
        e.push_back( number<int>( "synth.min_patches", "fewest patches per scene", CCMETA_REF( synth.min_patches ) ) );
        e.push_back( number<int>( "synth.max_patches", "most patches per scene", CCMETA_REF( synth.max_patches ) ) );
        e.push_back( number<std::uint64_t>( "synth.seed", "dataset seed", CCMETA_REF( synth.seed ) ) );

        e.push_back( number<int>( "tasks.bins", "temperature histogram bins per camera (M)", CCMETA_REF( tasks.bins ) ) );
        e.push_back( number<int>( "tasks.min_task_size", "bins with fewer images are dropped",
                                  CCMETA_REF( tasks.min_task_size ) ) );
        e.push_back( flag( "tasks.global_edges", "share histogram edges across cameras",
                           CCMETA_REF( tasks.global_edges ) ) );
        e.push_back( flag( "tasks.degenerate_single_bin", "single bin instead of an error for one temperature",
                           CCMETA_REF( tasks.degenerate_single_bin ) ) );
        e.push_back( number<double>( "tasks.max_locus_distance", "CCT rejection distance from the locus in (x, y)",
                                     CCMETA_REF( tasks.max_locus_distance ) ) );

        e.push_back( { { "train.variant", "maml, metasgd, lslr or baseline" },
                       []( RunConfig &c, const std::string &v ) { c.train.variant = parse_variant( v ); },
                       []( const RunConfig &c ) { return to_string( c.train.variant ); } } );
        e.push_back( number<int>( "train.meta_batch", "tasks per outer step", CCMETA_REF( train.meta_batch ) ) );
        e.push_back( number<int>( "train.k_train", "support images per episode", CCMETA_REF( train.k_train ) ) );
        e.push_back( number<int>( "train.q_train", "query images per episode", CCMETA_REF( train.q_train ) ) );
        e.push_back( number<int>( "train.n_train", "inner steps", CCMETA_REF( train.n_train ) ) );
        e.push_back( number<double>( "train.beta", "outer learning rate", CCMETA_REF( train.beta ) ) );
        e.push_back( number<double>( "train.beta_decay", "outer rate decay factor", CCMETA_REF( train.beta_decay ) ) );
        e.push_back( number<int>( "train.beta_decay_interval", "iterations per decay (0: iterations / 25)",
                                  CCMETA_REF( train.beta_decay_interval ) ) );
        e.push_back( number<double>( "train.alpha_init", "initial inner step size", CCMETA_REF( train.alpha_init ) ) );
        e.push_back( number<int>( "train.iterations", "outer iterations", CCMETA_REF( train.iterations ) ) );
        e.push_back( { { "train.meta_grad", "exact or first_order" },
                       []( RunConfig &c, const std::string &v ) { c.train.meta_grad = parse_meta_grad( v ); },
                       []( const RunConfig &c ) { return to_string( c.train.meta_grad ); } } );
        e.push_back( number<std::uint64_t>( "train.seed", "training seed", CCMETA_REF( train.seed ) ) );
        e.push_back( number<int>( "train.input_size", "network input side (px)", CCMETA_REF( train.input_size ) ) );
        e.push_back( text( "train.spec", "network spec: desk or paper", CCMETA_REF( train.spec ) ) );
        e.push_back( text( "train.held_out_camera", "camera excluded from training (empty: none)",
                           CCMETA_REF( train.held_out_camera ) ) );
        e.push_back( { { "train.task_kind", "bin or knn" },
                       []( RunConfig &c, const std::string &v ) {
                           c.train.task_kind = parse_task_kind( "train.task_kind", v );
                       },
                       []( const RunConfig &c ) -> std::string {
                           return c.train.task_kind == TaskKind::knn ? "knn" : "bin";
                       } } );

        e.push_back( number<int>( "eval.k_test", "support images per test image", CCMETA_REF( eval.k_test ) ) );
        e.push_back( number<int>( "eval.n_test", "fine-tuning steps at test time", CCMETA_REF( eval.n_test ) ) );
        e.push_back( number<int>( "eval.draws", "independent support draws", CCMETA_REF( eval.draws ) ) );
        e.push_back( number<std::uint64_t>( "eval.seed", "evaluation seed", CCMETA_REF( eval.seed ) ) );
        e.push_back( { { "eval.task_kind", "bin or knn" },
                       []( RunConfig &c, const std::string &v ) {
                           c.eval.task_kind = parse_task_kind( "eval.task_kind", v );
                       },
                       []( const RunConfig &c ) -> std::string {
                           return c.eval.task_kind == TaskKind::knn ? "knn" : "bin";
                       } } );
        e.push_back( text( "eval.camera", "camera to evaluate (empty: checkpoint's held-out camera)",
                           CCMETA_REF( eval_camera ) ) );

        e.push_back( number<int>( "run.workers", "worker threads (1: bit-exact)", CCMETA_REF( workers ) ) );
        return e;
    }();
    return r;
}

#undef CCMETA_REF

const Entry &find_entry( const std::string &key )
{
    for ( const auto &e: registry() )
        if ( e.info.key == key )
            return e;
    throw ValidationError( fmt::format( "unknown config key '{}'", key ) );
}

} // namespace

const std::vector<ConfigKey> &config_keys()
{
    static const std::vector<ConfigKey> keys = [] {
        std::vector<ConfigKey> k;
        for ( const auto &e: registry() )
            k.push_back( e.info );
        return k;
    }();
    return keys;
}

bool is_config_key( const std::string &key )
{
    for ( const auto &e: registry() )
        if ( e.info.key == key )
            return true;
    return false;
}

void RunConfig::set( const std::string &key, const std::string &value )
{
    find_entry( key ).set( *this, value );
}

std::string RunConfig::get( const std::string &key ) const
{
    return find_entry( key ).get( *this );
}

std::string RunConfig::dump() const
{
    std::string out;
    for ( const auto &e: registry() )
        out += fmt::format( "{} = {}\n", e.info.key, e.get( *this ) );
    return out;
}

void RunConfig::finalize()
{
    if ( workers < 1 )
        throw ValidationError( "run.workers must be >= 1" );
    if ( tasks.bins < 1 )
        throw ValidationError( "tasks.bins must be >= 1" );
    if ( tasks.min_task_size < 1 )
        throw ValidationError( "tasks.min_task_size must be >= 1" );
    if ( !( tasks.max_locus_distance > 0.0 ) )
        throw ValidationError( "tasks.max_locus_distance must be positive" );
    synth.workers = workers;
    train.workers = workers;
    eval.workers  = workers;
    synth.validate();
    train.validate();
    eval.validate();
}

RunConfig parse_run_config( const std::string &text, RunConfig base )
{
    std::set<std::string> seen;
    std::size_t           line_no = 0;
    std::size_t           pos     = 0;
    while ( pos <= text.size() )
    {
        auto end = text.find( '\n', pos );
        if ( end == std::string::npos )
            end = text.size();
        std::string line = text.substr( pos, end - pos );
        pos              = end + 1;
        ++line_no;
        if ( const auto hash = line.find( '#' ); hash != std::string::npos )
            line.resize( hash );
        line = trim( line );
        if ( line.empty() )
            continue;
        const auto eq = line.find( '=' );
        if ( eq == std::string::npos )
            throw ValidationError( fmt::format( "config line {}: expected 'key = value'", line_no ) );
        const std::string key   = trim( line.substr( 0, eq ) );
        const std::string value = trim( line.substr( eq + 1 ) );
        if ( !seen.insert( key ).second )
            throw ValidationError( fmt::format( "config line {}: key '{}' repeated", line_no, key ) );
        try
        {
            base.set( key, value );
        }
        catch ( const ValidationError &e )
        {
            throw ValidationError( fmt::format( "config line {}: {}", line_no, e.what() ) );
        }
    }
    return base;
}

RunConfig load_run_config( const std::string &path, RunConfig base )
{
    return parse_run_config( read_text_file( path ), std::move( base ) );
}

HistogramOptions histogram_options( const TaskConfig &c )
{
    HistogramOptions o;
    o.global_edges          = c.global_edges;
    o.degenerate_single_bin = c.degenerate_single_bin;
    return o;
}

TaskAssignment build_bin_tasks( LoadedDataset &ds, const TaskConfig &c, int workers )
{
    CctOptions opts;
    opts.max_locus_distance = c.max_locus_distance;
    annotate_ccts( ds, opts, workers );
    const auto entries = cct_entries( ds );
    return assign_tasks( entries, build_histograms( entries, c.bins, histogram_options( c ) ),
                         static_cast<std::size_t>( c.min_task_size ) );
}

} // namespace ccmeta
