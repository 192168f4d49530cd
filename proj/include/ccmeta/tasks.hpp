// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/colorsci.hpp>
#include <ccmeta/dataio.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ccmeta
{

/// Image-derived temperature: undo the gamma, average the valid pixels,
/// convert to xy and apply cct_from_xy. Throws ValidationError when no
/// pixel is valid or the chromaticity is rejected.
Kelvin image_cct( const ProcessedImage &img, const CctOptions &opts = {} );

/// Fills `cct` for every image whose temperature is computable; returns the
/// ids that were rejected.
std::vector<std::size_t> annotate_ccts( LoadedDataset &ds, const CctOptions &opts = {},
                                        int workers = 1 );

/// One image with a computable temperature.
struct CctEntry
{
    std::size_t id;
    std::string camera_id;
    double      cct;
};

std::vector<CctEntry> cct_entries( const LoadedDataset &ds );

/// Log-uniform temperature histogram for one camera.
struct CctHistogram
{
    std::string         camera_id;
    int                 bins = 0;
    std::vector<double> edges; // bins + 1, ascending
    std::vector<int>    counts;

    /// Both edges inclusive; a value on an interior edge goes to the lower
    /// bin. Returns -1 outside [edges.front(), edges.back()].
    int bin_of( double cct ) const;
};

struct HistogramOptions
{
    bool global_edges         = false; // share edges across cameras
    bool degenerate_single_bin = false; // all-equal temperatures: one bin instead of an error
};

/// Histogram of `ccts` with `bins` log-uniform bins over [min, max], the top
/// edge widened by one ulp.
CctHistogram build_histogram( const std::string &camera_id, std::span<const double> ccts, int bins,
                              const HistogramOptions &opts = {} );

/// One histogram per camera present in `entries`.
std::map<std::string, CctHistogram> build_histograms( std::span<const CctEntry> entries, int bins,
                                                      const HistogramOptions &opts = {} );

enum class TaskKind
{
    bin,
    knn
};

struct TaskSpec
{
    std::string              camera_id;
    TaskKind                 kind = TaskKind::bin;
    int                      bin  = -1;
    double                   lo   = 0.0; // inclusive temperature bounds
    double                   hi   = 0.0;
    std::optional<double>    anchor_cct;
    std::vector<std::size_t> members; // ascending image ids
};

struct DroppedTask
{
    std::string camera_id;
    int         bin;
    std::size_t population;
};

struct TaskAssignment
{
    std::vector<TaskSpec>    tasks;
    std::vector<DroppedTask> dropped;
};

/// One task per non-empty (camera, bin) holding at least `min_task_size`
/// images; smaller bins are reported in `dropped`.
TaskAssignment assign_tasks( std::span<const CctEntry> entries,
                             const std::map<std::string, CctHistogram> &histograms,
                             std::size_t min_task_size );

/// The `k` images of `camera_entries` closest in temperature to `anchor_cct`,
/// ties broken by ascending id. `exclude` is never selected.
TaskSpec knn_task( std::span<const CctEntry> camera_entries, double anchor_cct, std::size_t k,
                   std::optional<std::size_t> exclude = std::nullopt );

struct Episode
{
    std::size_t              task_index = 0;
    std::vector<std::size_t> support;
    std::vector<std::size_t> query;
};

/// Uniform draw without replacement of k support and q query members.
Episode sample_episode( const TaskSpec &task, std::size_t k, std::size_t q, std::mt19937_64 &rng,
                        std::size_t task_index = 0 );

/// Same as sample_episode but never draws `exclude`.
Episode sample_episode_excluding( const TaskSpec &task, std::size_t k, std::size_t q,
                                  std::size_t exclude, std::mt19937_64 &rng,
                                  std::size_t task_index = 0 );

/// Mean pairwise angular error (degrees) between the ground-truth
/// illuminants of `members`; 0 for fewer than two members.
double gt_spread( const LoadedDataset &ds, std::span<const std::size_t> members );

/// JSON-lines task dump: camera_id, kind ("bin" | "knn"), bin, lo, hi,
/// anchor_cct (null for bins), members.
std::string tasks_to_jsonl( std::span<const TaskSpec> tasks );
std::vector<TaskSpec> tasks_from_jsonl( const std::string &text );

} // namespace ccmeta
