// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ccmeta::nn
{

enum class LayerKind : std::uint8_t
{
    conv3x3        = 1, // stride 1, zero padding 1
    layernorm      = 2, // over (H, W, C) per sample, per-channel affine
    relu           = 3,
    avgpool_global = 4,
    dense          = 5
};

struct LayerSpec
{
    LayerKind kind;
    int       out = 0; // output channels / features for conv3x3 and dense

    bool operator==( const LayerSpec & ) const = default;
};

struct NetworkSpec
{
    int                    height   = 16;
    int                    width    = 16;
    int                    channels = 3;
    std::vector<LayerSpec> layers;

    bool operator==( const NetworkSpec & ) const = default;

    /// conv(16)-ln-relu x2, avgpool, dense(16)-relu, dense(3).
    static NetworkSpec desk( int input_size = 16 );
    /// conv(64)-ln-relu x4, avgpool, dense(64)-relu, dense(3).
    static NetworkSpec paper( int input_size = 128 );

    std::string describe() const;
};

struct Shape
{
    int h = 0, w = 0, c = 0;
    std::size_t size() const { return static_cast<std::size_t>( h ) * w * c; }
};

struct LayerPlan
{
    LayerSpec   spec;
    Shape       in;
    Shape       out;
    std::size_t weight_offset = 0;
    std::size_t weight_size   = 0; // conv: 9*Cin*Cout [tap][ci][co]; dense: In*Out [i][o]; ln: gamma[C]
    std::size_t bias_offset   = 0;
    std::size_t bias_size     = 0; // conv/dense: Cout; ln: beta[C]
    int         param_layer   = -1; // index among layers with parameters
};

/// Shape inference and the flat parameter offsets table.
class NetworkLayout
{
public:
    /// Throws ValidationError on inconsistent shapes or a final width != 3.
    explicit NetworkLayout( NetworkSpec spec );

    const NetworkSpec            &spec() const { return spec_; }
    const std::vector<LayerPlan> &plans() const { return plans_; }
    std::size_t                   param_count() const { return param_count_; }
    int                           param_layers() const { return param_layers_; }
    std::size_t                   input_size() const { return plans_.front().in.size(); }
    /// Parameterised-layer index of each flat parameter.
    const std::vector<int>       &param_layer_of() const { return param_layer_of_; }

private:
    NetworkSpec            spec_;
    std::vector<LayerPlan> plans_;
    std::size_t            param_count_  = 0;
    int                    param_layers_ = 0;
    std::vector<int>       param_layer_of_;
};

/// Flat parameter vector.
struct NetworkParams
{
    std::vector<float> values;
    std::uint64_t      init_seed = 0;
};

/// Weights and biases of one layer, in layout order.
struct LayerTensors
{
    std::vector<float> weight;
    std::vector<float> bias;
};

std::vector<LayerTensors> unflatten( const NetworkLayout &layout, std::span<const float> theta );
std::vector<float>        flatten( const NetworkLayout &layout, const std::vector<LayerTensors> &layers );

/// He-uniform fan-in weights, zero biases, layernorm scale 1 and shift 0.
NetworkParams init_params( const NetworkLayout &layout, std::uint64_t seed );

enum class AlphaKind : std::uint8_t
{
    scalar             = 0,
    per_layer_per_step = 1,
    per_parameter      = 2
};

/// Inner-loop step sizes.
struct AlphaState
{
    AlphaKind          kind = AlphaKind::scalar;
    int                rows = 1; // steps for per_layer_per_step, else 1
    int                cols = 1; // parameterised layers, parameter count, or 1
    std::vector<float> values;   // rows * cols

    bool operator==( const AlphaState & ) const = default;

    static AlphaState scalar( float a );
    static AlphaState per_layer_per_step( int steps, int layers, float a );
    static AlphaState per_parameter( std::size_t params, float a );

    /// Row used at inner step `step`: steps past the last trained row reuse it.
    int row_for_step( int step ) const;

    /// Per-parameter step sizes for inner step `step`.
    template <class T>
    void expand( const NetworkLayout &layout, int step, std::span<T> out ) const;

    /// Throws ValidationError when the shape does not fit `layout`.
    void validate( const NetworkLayout &layout ) const;
};

enum class LossKind
{
    angular, // arccos of the normalised dot product, radians
    squared  // 0.5 * |p - g|^2, for closed-form checks
};

inline constexpr double kDegenerateNorm = 1e-8;

struct PredLoss
{
    double                loss = 0.0;
    std::array<double, 3> grad{};
    bool                  degenerate = false;
};

/// Angular loss of one prediction and its gradient with respect to `pred`.
/// Norms at or below kDegenerateNorm give loss pi/2, zero gradient and the
/// degenerate flag.
PredLoss angular_loss( const std::array<double, 3> &pred, const std::array<double, 3> &gt );

/// Inputs are N x (H*W*C) interleaved HWC, labels are illuminant vectors.
template <class T>
struct Batch
{
    std::vector<T>                     inputs;
    std::vector<std::array<double, 3>> targets;

    std::size_t size() const { return targets.size(); }
};

template <class T>
struct LossGrad
{
    double         loss = 0.0; // batch mean
    std::vector<T> grad;
    std::size_t    degenerate = 0;
};

template <class T>
struct HvpResult
{
    double         loss = 0.0;
    std::vector<T> grad;
    std::vector<T> hv;
};

enum class MetaGradMode
{
    exact,
    first_order
};

template <class T>
struct MetaGrad
{
    double             outer_loss = 0.0; // mean query loss after adaptation
    std::vector<T>     grad_theta;
    std::vector<double> grad_alpha; // same shape as AlphaState::values
};

/// Called after inner step `step` (0-based) with the step sizes it used.
template <class T>
using StepObserver = std::function<void( int step, std::span<const T> step_sizes )>;

/// Forward and reverse passes for a NetworkLayout (copied). Holds scratch
/// buffers, so one instance per thread.
template <class T>
class Engine
{
public:
    explicit Engine( const NetworkLayout &layout );
    ~Engine();
    Engine( Engine && ) noexcept;
    Engine &operator=( Engine && ) = delete;

    const NetworkLayout &layout() const { return *layout_; }

    std::vector<std::array<T, 3>> forward( std::span<const T> theta, const Batch<T> &batch );

    /// Mean loss over the batch and its exact gradient.
    LossGrad<T> loss_and_grad( std::span<const T> theta, const Batch<T> &batch,
                               LossKind loss = LossKind::angular );

    /// Gradient and Hessian-vector product H * v of the mean loss.
    HvpResult<T> hvp( std::span<const T> theta, const Batch<T> &batch, std::span<const T> v,
                      LossKind loss = LossKind::angular );

    /// `steps` SGD steps on `support` with the step sizes of `alpha`.
    std::vector<T> inner_adapt( std::span<const T> theta, const AlphaState &alpha,
                                const Batch<T> &support, int steps,
                                LossKind loss = LossKind::angular,
                                const StepObserver<T> &observer = {} );

    /// Outer-loss gradients after `steps` inner steps. `exact` differentiates
    /// through every inner step (theta and alpha); `first_order` returns the
    /// query gradient at the adapted parameters and a zero alpha gradient.
    MetaGrad<T> meta_backward( std::span<const T> theta, const AlphaState &alpha,
                               const Batch<T> &support, const Batch<T> &query, int steps,
                               MetaGradMode mode, LossKind loss = LossKind::angular );

private:
    struct Impl;
    const NetworkLayout  *layout_;
    std::unique_ptr<Impl> impl_;
};

extern template class Engine<float>;
extern template class Engine<double>;

} // namespace ccmeta::nn
