// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/cli.hpp>
#include <ccmeta/error.hpp>
#include <ccmeta/eval.hpp>
#include <ccmeta/meta.hpp>
#include <ccmeta/nn/checkpoint.hpp>
#include <ccmeta/runconfig.hpp>
#include <ccmeta/svg.hpp>
#include <ccmeta/synthcam.hpp>
#include <ccmeta/tasks.hpp>
#include <ccmeta/textio.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>

namespace fs = std::filesystem;

namespace ccmeta
{

namespace
{

void ensure_dir( const std::string &dir )
{
    std::error_code ec;
    fs::create_directories( dir, ec );
    if ( ec || !fs::is_directory( dir ) )
        throw IoError( fmt::format( "cannot create directory '{}': {}", dir, ec ? ec.message() : "not a directory" ) );
}

std::string join_path( const std::string &dir, const std::string &name )
{
    return ( fs::path( dir ) / name ).string();
}

std::string one_line( std::string s )
{
    std::replace( s.begin(), s.end(), '\n', ' ' );
    return s;
}

// Shortcut flags that land on a config key; applied after the dotted flags.
struct Shortcut
{
    std::string                key;
    std::optional<std::string> value;
};

struct Context
{
    std::ostream                      &out;
    std::string                        config_file;
    std::map<std::string, std::string> key_flags;
    std::vector<CLI::Option *>         key_options;
    std::deque<Shortcut>               shortcuts;

    RunConfig resolve() const
    {
        RunConfig c;
        if ( !config_file.empty() )
            c = load_run_config( config_file, c );
        for ( const auto *opt: key_options )
            if ( opt->count() > 0 )
            {
                const std::string key = opt->get_name().substr( 2 );
                c.set( key, key_flags.at( key ) );
            }
        for ( const auto &s: shortcuts )
            if ( s.value )
                c.set( s.key, *s.value );
        c.finalize();
        return c;
    }
};

void add_shortcut( Context &ctx, CLI::App *cmd, const std::string &flag, const std::string &key,
                   const std::string &help )
{
    ctx.shortcuts.push_back( { key, std::nullopt } );
    cmd->add_option( flag, ctx.shortcuts.back().value, fmt::format( "{} (sets {})", help, key ) );
}

std::string cct_cell( const std::optional<double> &v )
{
    return v ? fmt::format( "{:.1f}", *v ) : std::string{};
}

// -- synth -------------------------------------------------------------------

int cmd_synth( const Context &ctx, const std::string &out_dir )
{
    const RunConfig cfg  = ctx.resolve();
    const auto      recs = generate_dataset( cfg.synth, out_dir );
    std::map<std::string, int> per_camera;
    for ( const auto &r: recs )
        ++per_camera[r.camera_id];
    ctx.out << "manifest: " << join_path( out_dir, "manifest.csv" ) << '\n';
    for ( const auto &[cam, n]: per_camera )
        ctx.out << fmt::format( "  {}: {} images\n", cam, n );
    ctx.out << fmt::format( "total: {} images, {} cameras\n", recs.size(), per_camera.size() );
    return 0;
}

// -- cct ---------------------------------------------------------------------

int cmd_cct( const Context &ctx, const std::string &manifest, const std::vector<double> &xy, const std::string &out )
{
    const RunConfig cfg = ctx.resolve();
    CctOptions      opts;
    opts.max_locus_distance = cfg.tasks.max_locus_distance;
    if ( !xy.empty() )
    {
        const ChromaticityXY c( xy[0], xy[1] );
        ctx.out << fmt::format( "cct_fit = {:.1f} K\n", cct_from_xy( c, opts ).value() );
        ctx.out << fmt::format( "cct_oracle = {:.1f} K\n", cct_oracle( c, opts ).value() );
        ctx.out << fmt::format( "locus_distance = {:.5f}\n", locus_distance( c ) );
        return 0;
    }
    if ( manifest.empty() )
        throw ValidationError( "cct needs --manifest or --xy" );
    auto        ds       = load_dataset( manifest, cfg.workers );
    const auto  rejected = annotate_ccts( ds, opts, cfg.workers );
    std::string csv      = "id,path,camera,cct,gt_r,gt_g,gt_b\n";
    for ( std::size_t i = 0; i < ds.images.size(); ++i )
    {
        const auto &img = ds.images[i];
        const auto &gt  = img.gt_illuminant;
        csv += fmt::format( "{},{},{},{},{},{},{}\n", i, fs::path( ds.manifest.records[i].path ).filename().string(),
                            img.camera_id, cct_cell( img.cct ), gt.r(), gt.g(), gt.b() );
    }
    if ( out.empty() )
        ctx.out << csv;
    else
    {
        write_text_file( out, csv );
        ctx.out << fmt::format( "wrote {} ({} images, {} rejected off-locus)\n", out, ds.images.size(),
                                rejected.size() );
    }
    return 0;
}

// -- tasks -------------------------------------------------------------------

std::string histogram_csv( const std::map<std::string, CctHistogram> &hist )
{
    std::string csv = "camera,bin,lo,hi,count\n";
    for ( const auto &[cam, h]: hist )
        for ( int m = 0; m < h.bins; ++m )
            csv += fmt::format( "{},{},{:.3f},{:.3f},{}\n", cam, m, h.edges[m], h.edges[m + 1], h.counts[m] );
    return csv;
}

std::string task_scatter( const LoadedDataset &ds, const std::map<std::string, CctHistogram> &hist,
                          const std::vector<TaskSpec> &knn )
{
    std::vector<ScatterPanel> panels;
    for ( const auto &cam: ds.manifest.camera_ids() )
    {
        ScatterPanel p;
        p.title = cam;
        for ( std::size_t i = 0; i < ds.images.size(); ++i )
        {
            const auto &img = ds.images[i];
            if ( img.camera_id != cam )
                continue;
            const auto &gt    = img.gt_illuminant;
            int         group = -1;
            if ( !knn.empty() )
            {
                const auto &m = knn.front().members;
                group = std::binary_search( m.begin(), m.end(), i ) ? 0 : -1;
            }
            else if ( img.cct && hist.count( cam ) )
                group = hist.at( cam ).bin_of( *img.cct );
            p.points.push_back( { gt.r() / gt.g(), gt.b() / gt.g(), group } );
        }
        panels.push_back( std::move( p ) );
    }
    std::vector<std::string> labels;
    if ( !knn.empty() )
        labels.push_back( fmt::format( "{} nearest to {:.0f} K", knn.front().members.size(), *knn.front().anchor_cct ) );
    else
    {
        int bins = 0;
        for ( const auto &[cam, h]: hist )
            bins = std::max( bins, h.bins );
        for ( int m = 0; m < bins; ++m )
            labels.push_back( fmt::format( "bin {}", m ) );
    }
    return svg_scatter( "Ground-truth illuminants by temperature task", "r/g", "b/g", panels, labels );
}

struct KnnRequest
{
    std::optional<int>    k;
    std::optional<double> anchor;
    std::string           camera;
};

int cmd_tasks( const Context &ctx, const std::string &manifest, const std::string &out_dir, const KnnRequest &knn )
{
    const RunConfig cfg = ctx.resolve();
    auto            ds  = load_dataset( manifest, cfg.workers );
    CctOptions      opts;
    opts.max_locus_distance = cfg.tasks.max_locus_distance;
    const auto rejected     = annotate_ccts( ds, opts, cfg.workers );
    const auto entries      = cct_entries( ds );
    const auto hist         = build_histograms( entries, cfg.tasks.bins, histogram_options( cfg.tasks ) );

    std::vector<TaskSpec> tasks;
    std::vector<TaskSpec> knn_tasks;
    if ( knn.k )
    {
        if ( !knn.anchor )
            throw ValidationError( "--knn needs --anchor" );
        if ( *knn.k < 1 )
            throw ValidationError( "--knn must be >= 1" );
        const auto  cams   = ds.manifest.camera_ids();
        std::string camera = knn.camera.empty() ? cams.front() : knn.camera;
        if ( std::find( cams.begin(), cams.end(), camera ) == cams.end() )
            throw ValidationError( fmt::format( "unknown camera '{}'", camera ) );
        std::vector<CctEntry> cam_entries;
        for ( const auto &e: entries )
            if ( e.camera_id == camera )
                cam_entries.push_back( e );
        tasks.push_back( knn_task( cam_entries, *knn.anchor, static_cast<std::size_t>( *knn.k ) ) );
        knn_tasks = tasks;
    }
    else
    {
        auto assignment = assign_tasks( entries, hist, static_cast<std::size_t>( cfg.tasks.min_task_size ) );
        for ( const auto &d: assignment.dropped )
            ctx.out << fmt::format( "dropped {} bin {} ({} images < {})\n", d.camera_id, d.bin, d.population,
                                    cfg.tasks.min_task_size );
        tasks = std::move( assignment.tasks );
    }

    ensure_dir( out_dir );
    write_text_file( join_path( out_dir, "tasks.jsonl" ), tasks_to_jsonl( tasks ) );
    write_text_file( join_path( out_dir, "histogram.csv" ), histogram_csv( hist ) );
    write_text_file( join_path( out_dir, "tasks.svg" ), task_scatter( ds, hist, knn_tasks ) );

    ctx.out << fmt::format( "{} images, {} rejected off-locus\n", ds.images.size(), rejected.size() );
    for ( const auto &t: tasks )
    {
        if ( t.kind == TaskKind::knn )
            ctx.out << fmt::format( "  {} knn anchor {:.0f} K: {} images\n", t.camera_id, *t.anchor_cct,
                                    t.members.size() );
        else
            ctx.out << fmt::format( "  {} bin {} [{:.0f}, {:.0f}] K: {} images\n", t.camera_id, t.bin, t.lo, t.hi,
                                    t.members.size() );
    }
    ctx.out << fmt::format( "wrote {} tasks to {}\n", tasks.size(), out_dir );
    return 0;
}

// -- train -------------------------------------------------------------------

int cmd_train( const Context &ctx, const std::string &manifest, const std::string &out_dir,
               const std::string &tasks_file )
{
    const RunConfig cfg = ctx.resolve();
    auto            ds  = load_dataset( manifest, cfg.workers );

    std::vector<TaskSpec> tasks;
    if ( tasks_file.empty() )
        tasks = build_bin_tasks( ds, cfg.tasks, cfg.workers ).tasks;
    else
    {
        CctOptions opts;
        opts.max_locus_distance = cfg.tasks.max_locus_distance;
        annotate_ccts( ds, opts, cfg.workers );
        tasks = tasks_from_jsonl( read_text_file( tasks_file ) );
    }
    ensure_dir( out_dir );

    const int  every    = std::max( 1, cfg.train.iterations / 20 );
    const auto progress = [&]( const TrainLogRow &r ) {
        if ( r.iteration % every == 0 || r.iteration == cfg.train.iterations )
            ctx.out << fmt::format( "iteration {}/{} beta {:.5f} loss {:.3f} deg\n", r.iteration,
                                    cfg.train.iterations, r.beta, r.mean_outer_loss_degrees )
                    << std::flush;
    };
    const TrainResult res = cfg.train.variant == Variant::baseline ? train_baseline( cfg.train, ds, progress )
                                                                   : meta_train( cfg.train, ds, tasks, progress );

    const auto ckpt_path = join_path( out_dir, "checkpoint.bin" );
    nn::write_checkpoint( ckpt_path, res.checkpoint );
    write_text_file( join_path( out_dir, "train_log.csv" ), format_train_log( res.log ) );
    write_text_file( join_path( out_dir, "config.txt" ), cfg.dump() );
    ctx.out << fmt::format( "checkpoint: {}\nlog: {}\n", ckpt_path, join_path( out_dir, "train_log.csv" ) );
    return 0;
}

// -- adapt -------------------------------------------------------------------

int cmd_adapt( const Context &ctx, const std::string &ckpt_path, const std::string &manifest,
               const std::vector<std::size_t> &support, std::vector<std::size_t> query, std::optional<int> steps,
               const std::string &out )
{
    const RunConfig cfg   = ctx.resolve();
    const auto      ckpt  = nn::read_checkpoint( ckpt_path );
    const auto      ds    = load_dataset( manifest, cfg.workers );
    const int       input = ckpt.spec.height;
    const int       n     = steps.value_or( cfg.eval.n_test );
    if ( n < 0 )
        throw ValidationError( "--steps must be >= 0" );
    if ( support.empty() )
        throw ValidationError( "--support needs at least one image id" );
    for ( std::size_t id: support )
        if ( id >= ds.images.size() )
            throw ValidationError( fmt::format( "support id {} out of range", id ) );
    if ( query.empty() )
    {
        const auto &cam = ds.images[support.front()].camera_id;
        for ( std::size_t i = 0; i < ds.images.size(); ++i )
            if ( ds.images[i].camera_id == cam && std::find( support.begin(), support.end(), i ) == support.end() )
                query.push_back( i );
    }
    const auto theta = adapt( ckpt, ds, support, n, input );
    const auto pred  = predict( ckpt, theta, ds, query, input );

    std::string csv = "id,camera,pred_r,pred_g,pred_b,angular_error_deg\n";
    for ( std::size_t i = 0; i < query.size(); ++i )
    {
        const auto &p = pred[i];
        const auto  e = prediction_error_degrees( p, ds.images[query[i]].gt_illuminant );
        csv += fmt::format( "{},{},{},{},{},{}\n", query[i], ds.images[query[i]].camera_id, p[0], p[1], p[2], e );
    }
    if ( out.empty() )
        ctx.out << csv;
    else
    {
        write_text_file( out, csv );
        ctx.out << fmt::format( "wrote {} predictions after {} steps to {}\n", query.size(), n, out );
    }
    return 0;
}

// -- eval / report ------------------------------------------------------------

std::string median_chart( const std::vector<ReportRow> &rows )
{
    std::vector<LineSeries>                                 series;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> index;
    for ( const auto &r: rows )
    {
        const auto key = std::make_tuple( r.camera, r.variant, r.k_test );
        auto       it  = index.find( key );
        if ( it == index.end() )
        {
            it = index.emplace( key, series.size() ).first;
            series.push_back( { fmt::format( "{} {} K={}", r.variant, r.camera, r.k_test ), {}, {}, {} } );
        }
        auto &s = series[it->second];
        s.x.push_back( r.n_test );
        s.y.push_back( r.headline );
        s.err.push_back( r.draw_median_std );
    }
    for ( auto &s: series )
    {
        std::vector<std::size_t> order( s.x.size() );
        for ( std::size_t i = 0; i < order.size(); ++i )
            order[i] = i;
        std::sort( order.begin(), order.end(), [&]( auto a, auto b ) { return s.x[a] < s.x[b]; } );
        LineSeries sorted{ s.label, {}, {}, {} };
        for ( auto i: order )
        {
            sorted.x.push_back( s.x[i] );
            sorted.y.push_back( s.y[i] );
            sorted.err.push_back( s.err[i] );
        }
        s = std::move( sorted );
    }
    return svg_line_chart( "Median angular error vs fine-tuning steps (bars: inter-draw std)",
                           "fine-tuning steps n", "median angular error (deg)", series );
}

std::string report_table( const std::vector<ReportRow> &rows )
{
    std::string t = "| camera | variant | K | n | mean | median | trimean | best 25% | worst 25% | G.M. | "
                    "headline | draw std |\n";
    t += "|---|---|---|---|---|---|---|---|---|---|---|---|\n";
    for ( const auto &r: rows )
        t += fmt::format( "| {} | {} | {} | {} | {:.2f} | {:.2f} | {:.2f} | {:.2f} | {:.2f} | {:.2f} | {:.2f} | "
                          "{:.2f} |\n",
                          r.camera, r.variant, r.k_test, r.n_test, r.stats.mean, r.stats.median, r.stats.trimean,
                          r.stats.best25, r.stats.worst25, r.stats.gm, r.headline, r.draw_median_std );
    return t;
}

std::string held_out_from_echo( const std::string &echo )
{
    try
    {
        return parse_run_config( echo ).train.held_out_camera;
    }
    catch ( const ValidationError & )
    {
        return {};
    }
}

int cmd_eval( const Context &ctx, const std::string &ckpt_path, const std::string &manifest,
              const std::string &out_dir )
{
    RunConfig  cfg  = ctx.resolve();
    const auto ckpt = nn::read_checkpoint( ckpt_path );
    auto       ds   = load_dataset( manifest, cfg.workers );
    const auto asg  = build_bin_tasks( ds, cfg.tasks, cfg.workers );

    std::string camera = cfg.eval_camera.empty() ? held_out_from_echo( ckpt.config_echo ) : cfg.eval_camera;
    if ( camera.empty() )
        throw ValidationError( "no camera to evaluate: set eval.camera or train with train.held_out_camera" );
    cfg.eval.input_size = ckpt.spec.height;

    const auto report = evaluate( ckpt, ds, asg.tasks, camera, cfg.eval );
    const auto rows   = report_rows( report, ckpt.variant );
    ensure_dir( out_dir );
    write_text_file( join_path( out_dir, "report.csv" ), format_report_csv( rows ) );
    write_text_file( join_path( out_dir, "median_vs_n.svg" ), median_chart( rows ) );

    ctx.out << fmt::format( "{} on {}: {} images, {} without a task, K_test={}, {} draws\n", ckpt.variant, camera,
                            report.image_ids.size(), report.unassigned, cfg.eval.k_test, report.draws() );
    for ( const auto &r: rows )
        ctx.out << fmt::format( "  n={:2d} median {:.3f} deg (draw std {:.3f})\n", r.n_test, r.headline,
                                r.draw_median_std );
    ctx.out << fmt::format( "report: {}\n", join_path( out_dir, "report.csv" ) );
    return 0;
}

int cmd_report( const Context &ctx, const std::vector<std::string> &inputs, const std::string &out_dir )
{
    ctx.resolve();
    std::vector<ReportRow> rows;
    for ( const auto &p: inputs )
    {
        auto r = parse_report_csv( read_text_file( p ) );
        rows.insert( rows.end(), r.begin(), r.end() );
    }
    if ( rows.empty() )
        throw ValidationError( "no report rows in the inputs" );
    const auto table = report_table( rows );
    ensure_dir( out_dir );
    write_text_file( join_path( out_dir, "summary.md" ), table );
    write_text_file( join_path( out_dir, "median_vs_n.svg" ), median_chart( rows ) );
    ctx.out << table;
    return 0;
}

} // namespace

int run_cli( int argc, const char *const *argv, std::ostream &out, std::ostream &err )
{
    CLI::App app{ "Colour-constancy meta-learning toolkit.\n"
                  "Configuration precedence: built-in defaults < --config file < command-line flags.\n"
                  "Config file format: one `key = value` per line, `#` starts a comment." };
    app.require_subcommand( 1 );
    app.fallthrough();

    Context ctx{ out, {}, {}, {}, {} };
    app.add_option( "--config", ctx.config_file, "key = value configuration file" );

    const RunConfig defaults;
    for ( const auto &k: config_keys() )
    {
        auto *opt = app.add_option( "--" + k.key, ctx.key_flags[k.key],
                                    fmt::format( "{} [default: {}]", k.help, defaults.get( k.key ) ) );
        opt->group( "Config keys" );
        ctx.key_options.push_back( opt );
    }
    add_shortcut( ctx, &app, "--workers", "run.workers", "worker threads; 1 is bit-exact" );

    std::string manifest, out_dir, checkpoint, file_out, tasks_file;

    auto *synth = app.add_subcommand( "synth", "generate a synthetic multi-camera dataset" );
    synth->add_option( "--out", out_dir, "dataset directory" )->required();
    add_shortcut( ctx, synth, "--seed", "synth.seed", "dataset seed" );

    std::vector<double> xy;
    auto *cct = app.add_subcommand( "cct", "correlated colour temperature of a chromaticity or of every image" );
    cct->add_option( "--manifest", manifest, "dataset manifest" );
    cct->add_option( "--xy", xy, "CIE x y chromaticity" )->expected( 2 );
    cct->add_option( "--out", file_out, "CSV output (default: stdout)" );

    KnnRequest knn;
    auto      *tasks = app.add_subcommand( "tasks", "build temperature tasks, histograms and a scatter plot" );
    tasks->add_option( "--manifest", manifest, "dataset manifest" )->required();
    tasks->add_option( "--out", out_dir, "output directory" )->required();
    add_shortcut( ctx, tasks, "--bins", "tasks.bins", "histogram bins per camera (M)" );
    tasks->add_option( "--knn", knn.k, "one task of the K images nearest in temperature to --anchor" );
    tasks->add_option( "--anchor", knn.anchor, "anchor temperature for --knn (K)" );
    tasks->add_option( "--camera", knn.camera, "camera for --knn (default: first)" );

    auto *train = app.add_subcommand( "train", "meta-train (or jointly train the baseline)" );
    train->add_option( "--manifest", manifest, "dataset manifest" )->required();
    train->add_option( "--out", out_dir, "output directory" )->required();
    train->add_option( "--tasks", tasks_file, "task JSON-lines (default: built from tasks.* keys)" );
    add_shortcut( ctx, train, "--seed", "train.seed", "training seed" );
    add_shortcut( ctx, train, "--variant", "train.variant", "maml, metasgd, lslr or baseline" );
    add_shortcut( ctx, train, "--iterations", "train.iterations", "outer iterations" );
    add_shortcut( ctx, train, "--held-out", "train.held_out_camera", "camera excluded from training" );

    std::vector<std::size_t> support, query;
    std::optional<int>       steps;
    auto *adapt_cmd = app.add_subcommand( "adapt", "fine-tune a checkpoint on a support set and predict" );
    adapt_cmd->add_option( "--checkpoint", checkpoint, "checkpoint file" )->required();
    adapt_cmd->add_option( "--manifest", manifest, "dataset manifest" )->required();
    adapt_cmd->add_option( "--support", support, "support image ids" )->required()->delimiter( ',' );
    adapt_cmd->add_option( "--query", query, "image ids to predict (default: rest of the camera)" )->delimiter( ',' );
    adapt_cmd->add_option( "--steps", steps, "fine-tuning steps (default: eval.n_test)" );
    adapt_cmd->add_option( "--out", file_out, "CSV output (default: stdout)" );

    auto *eval_cmd = app.add_subcommand( "eval", "K-shot evaluation on a held-out camera" );
    eval_cmd->add_option( "--checkpoint", checkpoint, "checkpoint file" )->required();
    eval_cmd->add_option( "--manifest", manifest, "dataset manifest" )->required();
    eval_cmd->add_option( "--out", out_dir, "output directory" )->required();
    add_shortcut( ctx, eval_cmd, "--camera", "eval.camera", "camera to evaluate" );
    add_shortcut( ctx, eval_cmd, "--k-test", "eval.k_test", "support images per test image" );
    add_shortcut( ctx, eval_cmd, "--n-test", "eval.n_test", "fine-tuning steps" );
    add_shortcut( ctx, eval_cmd, "--draws", "eval.draws", "independent draws" );
    add_shortcut( ctx, eval_cmd, "--seed", "eval.seed", "evaluation seed" );

    std::vector<std::string> reports;
    auto *report = app.add_subcommand( "report", "tables and plots from report CSVs" );
    report->add_option( "reports", reports, "report CSV files" )->required();
    report->add_option( "--out", out_dir, "output directory" )->required();

    try
    {
        app.parse( argc, argv );
    }
    catch ( const CLI::ParseError &e )
    {
        if ( e.get_exit_code() == 0 )
            return app.exit( e, out, err );
        err << "error: " << one_line( e.what() ) << '\n';
        return 1;
    }

    try
    {
        if ( synth->parsed() )
            return cmd_synth( ctx, out_dir );
        if ( cct->parsed() )
            return cmd_cct( ctx, manifest, xy, file_out );
        if ( tasks->parsed() )
            return cmd_tasks( ctx, manifest, out_dir, knn );
        if ( train->parsed() )
            return cmd_train( ctx, manifest, out_dir, tasks_file );
        if ( adapt_cmd->parsed() )
            return cmd_adapt( ctx, checkpoint, manifest, support, query, steps, file_out );
        if ( eval_cmd->parsed() )
            return cmd_eval( ctx, checkpoint, manifest, out_dir );
        if ( report->parsed() )
            return cmd_report( ctx, reports, out_dir );
    }
    catch ( const ValidationError &e )
    {
        err << "error: " << one_line( e.what() ) << '\n';
        return 1;
    }
    catch ( const IoError &e )
    {
        err << "error: " << one_line( e.what() ) << '\n';
        return 2;
    }
    catch ( const fs::filesystem_error &e )
    {
        err << "error: " << one_line( e.what() ) << '\n';
        return 2;
    }
    catch ( const std::exception &e )
    {
        err << "error: " << one_line( e.what() ) << '\n';
        return 1;
    }
    return 1;
}

} // namespace ccmeta
