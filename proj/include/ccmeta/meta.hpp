// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/dataio.hpp>
#include <ccmeta/nn/checkpoint.hpp>
#include <ccmeta/nn/network.hpp>
#include <ccmeta/tasks.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace ccmeta
{

enum class Variant
{
    maml,     // fixed scalar inner step
    metasgd,  // learned per-parameter inner steps
    lslr,     // learned per-layer, per-step inner steps
    baseline  // joint training without episodes
};

std::string to_string( Variant v );
/// Throws ValidationError on an unknown name.
Variant parse_variant( const std::string &name );

std::string       to_string( nn::MetaGradMode m );
nn::MetaGradMode  parse_meta_grad( const std::string &name );

/// "desk" or "paper" at the given input size.
nn::NetworkSpec make_network_spec( const std::string &name, int input_size );

struct TrainConfig
{
    Variant          variant             = Variant::lslr;
    int              meta_batch          = 4;
    int              k_train             = 10;
    int              q_train             = 10;
    int              n_train             = 5;
    double           beta                = 0.05;
    double           beta_decay          = 0.96;
    int              beta_decay_interval = 0; // 0: iterations / 25
    double           alpha_init          = 0.05;
    int              iterations          = 2000;
    nn::MetaGradMode meta_grad           = nn::MetaGradMode::exact;
    std::uint64_t    seed                = 1;
    int              input_size          = 16;
    std::string      spec                = "desk";
    std::string      held_out_camera;
    TaskKind         task_kind = TaskKind::bin; // knn: anchor = CCT of a random member
    int              workers   = 1;

    /// Throws ValidationError on out-of-range values.
    void validate() const;
    int  decay_interval() const;
    /// beta after `iteration` completed outer steps.
    double beta_at( int iteration ) const;
    /// `train.<key> = <value>` lines, stored in checkpoints.
    std::string echo() const;
};

/// Initial inner step sizes for a variant.
nn::AlphaState initial_alpha( Variant v, const nn::NetworkLayout &layout, int n_train, float alpha_init );

struct TrainLogRow
{
    int                      iteration = 0; // 1-based
    double                   beta      = 0.0;
    double                   mean_outer_loss_degrees = 0.0;
    std::vector<std::string> cameras; // camera of every episode in the step
};

/// CSV: iteration,beta,mean_outer_loss_degrees,cameras (';'-joined).
std::string format_train_log( std::span<const TrainLogRow> rows );

/// Network inputs for images `ids`: random crops when `rng` is given, else
/// the centred full-image resize.
nn::Batch<float> make_batch( const LoadedDataset &ds, std::span<const std::size_t> ids, int input_size,
                             std::mt19937_64 *rng );

struct EpisodeBatch
{
    std::size_t      task_index = 0;
    std::string      camera_id;
    Episode          episode;
    nn::Batch<float> support;
    nn::Batch<float> query;
};

struct TrainResult
{
    nn::Checkpoint           checkpoint;
    std::vector<TrainLogRow> log;
};

using ProgressFn = std::function<void( const TrainLogRow & )>;

/// Episodic meta-training over the tasks of every camera but the held-out one.
class MetaTrainer
{
public:
    /// Throws ValidationError when fewer than two training cameras or no
    /// task large enough for K + Q remain.
    MetaTrainer( TrainConfig config, const LoadedDataset &ds, std::span<const TaskSpec> tasks );

    const TrainConfig       &config() const { return config_; }
    const nn::NetworkLayout &layout() const { return layout_; }
    const std::vector<TaskSpec> &training_tasks() const { return tasks_; }

    /// Episodes of outer step `iteration` (0-based); deterministic in seed.
    std::vector<EpisodeBatch> sample_iteration( int iteration ) const;

    /// One outer update from `episodes` with rate `beta`.
    TrainLogRow step( std::span<const EpisodeBatch> episodes, double beta, int iteration );

    TrainResult run( const ProgressFn &progress = {} );

    const std::vector<float> &theta() const { return theta_; }
    const nn::AlphaState     &alpha() const { return alpha_; }
    void                      set_theta( std::vector<float> theta );
    nn::Checkpoint            checkpoint( std::uint64_t iterations ) const;

private:
    TrainConfig                    config_;
    const LoadedDataset           &ds_;
    nn::NetworkLayout              layout_;
    std::vector<TaskSpec>          tasks_;
    std::vector<CctEntry>          entries_;
    std::vector<float>             theta_;
    nn::AlphaState                 alpha_;
    bool                           learn_alpha_ = false;
    std::vector<nn::Engine<float>> engines_;
};

TrainResult meta_train( const TrainConfig &config, const LoadedDataset &ds, std::span<const TaskSpec> tasks,
                        const ProgressFn &progress = {} );

/// Joint training: plain SGD on batches of meta_batch * (K + Q) images drawn
/// from all non-held-out cameras. The checkpoint carries a scalar alpha of
/// alpha_init for test-time fine-tuning.
TrainResult train_baseline( const TrainConfig &config, const LoadedDataset &ds, const ProgressFn &progress = {} );

/// Adapted parameters after `n_test` inner steps on `support` with the
/// checkpoint's step sizes. Throws ValidationError when the support images
/// come from more than one camera.
std::vector<float> adapt( const nn::Checkpoint &ckpt, const LoadedDataset &ds, std::span<const std::size_t> support,
                          int n_test, int input_size );

/// Illuminant estimates for `ids` under parameters `theta`.
std::vector<std::array<float, 3>> predict( const nn::Checkpoint &ckpt, std::span<const float> theta,
                                           const LoadedDataset &ds, std::span<const std::size_t> ids,
                                           int input_size );

} // namespace ccmeta
