// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/eval.hpp>
#include <ccmeta/meta.hpp>
#include <ccmeta/synthcam.hpp>
#include <ccmeta/tasks.hpp>

#include <string>
#include <vector>

namespace ccmeta
{

struct TaskConfig
{
    int    bins                  = 2;
    int    min_task_size         = 20;
    bool   global_edges          = false;
    bool   degenerate_single_bin = false;
    double max_locus_distance    = 0.05;
};

/// Everything a command can be configured with. Plain-text form, one entry
/// per line:
///
///     # comment
///     train.k_train = 10
///     eval.draws    = 10
///
/// Keys are dotted (synth.*, tasks.*, train.*, eval.*, run.*). Unknown keys,
/// repeated keys and unparsable values are rejected.
struct RunConfig
{
    SynthConfig synth;
    TaskConfig  tasks;
    TrainConfig train;
    EvalConfig  eval;
    std::string eval_camera; // empty: the checkpoint's held-out camera
    int         workers = 1;

    void        set( const std::string &key, const std::string &value );
    std::string get( const std::string &key ) const;
    /// Every key in registry order, `key = value` lines.
    std::string dump() const;
    /// Copies `workers` into the per-module configs and validates them.
    void finalize();
};

struct ConfigKey
{
    std::string key;
    std::string help;
};

const std::vector<ConfigKey> &config_keys();
bool                          is_config_key( const std::string &key );

/// Applies the entries of `text` on top of `base`.
RunConfig parse_run_config( const std::string &text, RunConfig base = {} );
RunConfig load_run_config( const std::string &path, RunConfig base = {} );

HistogramOptions histogram_options( const TaskConfig &c );

/// CCT annotation, per-camera histograms and bin tasks for a loaded dataset.
TaskAssignment build_bin_tasks( LoadedDataset &ds, const TaskConfig &c, int workers = 1 );

} // namespace ccmeta
