// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/dataio.hpp>
#include <ccmeta/nn/checkpoint.hpp>
#include <ccmeta/tasks.hpp>

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ccmeta
{

/// Angular-error summary in degrees.
struct AngularErrorStats
{
    double mean    = 0.0;
    double median  = 0.0;
    double trimean = 0.0; // (Q1 + 2 Q2 + Q3) / 4, type-7 quartiles
    double best25  = 0.0; // mean of the ceil(N/4) smallest
    double worst25 = 0.0; // mean of the ceil(N/4) largest
    double gm      = 0.0; // geometric mean of the five above

    bool operator==( const AngularErrorStats & ) const = default;
};

/// Angular error in degrees of a raw network output, which may have negative
/// or vanishing components (scored through the training loss).
double prediction_error_degrees( const std::array<float, 3> &pred, const IlluminantRGB &gt );

/// Throws ValidationError on an empty list or negative / non-finite values.
AngularErrorStats error_stats( std::span<const double> errors );

/// Type-7 (linear interpolation) quantile of sorted values, p in [0, 1].
double quantile_sorted( std::span<const double> sorted, double p );

/// Statistic-wise geometric mean over cameras.
AngularErrorStats cross_camera_geometric_mean( std::span<const AngularErrorStats> per_camera );

struct EvalConfig
{
    int           k_test     = 10;
    int           n_test     = 10;
    int           draws      = 10;
    std::uint64_t seed       = 1;
    int           input_size = 16;
    TaskKind      task_kind  = TaskKind::bin; // knn: the k_test nearest in temperature
    int           workers    = 1;

    void validate() const;
};

/// Errors of every draw, image and adaptation step.
struct DrawReport
{
    std::string              camera_id;
    int                      k_test = 0;
    int                      n_test = 0;
    std::vector<std::size_t> image_ids;
    /// errors[step][draw][image], degrees; steps 0..n_test.
    std::vector<std::vector<std::vector<double>>> errors;
    /// supports[draw][image]: the K support ids used for that image.
    std::vector<std::vector<std::vector<std::size_t>>> supports;
    /// Camera images left out because they belong to no task.
    std::size_t unassigned = 0;

    int draws() const { return errors.empty() ? 0 : static_cast<int>( errors.front().size() ); }

    std::vector<double> draw_medians( int step ) const;
    /// Mean over draws of the per-draw median.
    double headline( int step ) const;
    /// Standard deviation (population) of the per-draw medians.
    double draw_median_std( int step ) const;
    /// Median over images of the draw-averaged error.
    double median_of_draw_means( int step ) const;
    /// Full statistics of the draw-averaged per-image errors.
    AngularErrorStats stats( int step ) const;
};

/// K-shot protocol on one camera: for each draw and each test image, adapt on
/// K support images of the image's task (never the image itself) and record
/// the error after every step. Test images are the camera's task members.
/// Camera images in no task are skipped and counted in `unassigned`.
/// Throws ValidationError when the camera has no task or a task is smaller
/// than K + 1.
DrawReport evaluate( const nn::Checkpoint &ckpt, const LoadedDataset &ds, std::span<const TaskSpec> tasks,
                     const std::string &camera_id, const EvalConfig &config );

struct ReportRow
{
    std::string       camera;
    std::string       variant;
    int               k_test = 0;
    int               n_test = 0;
    AngularErrorStats stats;
    double            headline        = 0.0;
    double            draw_median_std = 0.0;
    double            median_of_means = 0.0;
};

/// One row per step 0..n_test.
std::vector<ReportRow> report_rows( const DrawReport &report, const std::string &variant );

/// CSV with `#` header comments; columns camera, variant, K_test, n_test,
/// mean, median, trimean, best25, worst25, gm, headline_median_over_draws,
/// draw_median_std, median_of_draw_means.
std::string format_report_csv( std::span<const ReportRow> rows );
std::vector<ReportRow> parse_report_csv( const std::string &text );

} // namespace ccmeta
