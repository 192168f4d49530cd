// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/colorsci.hpp>
#include <ccmeta/image.hpp>
#include <ccmeta/spectral.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ccmeta
{

/// Gaussian-bump sensitivity parameters, channels ordered R, G, B.
struct CssParams
{
    std::array<double, 3> peak_nm;
    std::array<double, 3> width_nm; // standard deviation
    std::array<double, 3> amplitude;
};

/// Camera spectral sensitivities sampled on a grid.
struct CameraCSS
{
    std::string                        camera_id;
    CssParams                          params;
    SpectralGrid                       grid;
    std::array<std::vector<double>, 3> curves;

    /// Same camera sampled on another grid.
    CameraCSS resampled( const SpectralGrid &g ) const;
};

/// Canonical peaks are 615/535/450 nm with widths 20/25/15 nm; amplitudes are
/// calibrated once so that a 6504 K blackbody of unit luminance produces the
/// green-normalised linear-sRGB colour of that blackbody, scaled so G = 0.3.
/// `jitter` in [0, 0.3] perturbs peaks by up to 40*jitter nm and widths and
/// amplitudes by up to 50*jitter percent.
CameraCSS make_css( std::uint64_t seed, double jitter, std::string camera_id = "canonical",
                    const SpectralGrid &grid = SpectralGrid::visible( 5.0 ) );

enum class SpdFamily
{
    planckian,
    planckian_jittered
};

struct IlluminantSPD
{
    SpectralGrid        grid;
    std::vector<double> values;
    double              nominal_cct = 0.0;
    SpdFamily           family      = SpdFamily::planckian;
};

/// Planck's law on `grid`, optionally tilted by a smooth random
/// multiplicative factor (stddev `jitter_scale`) that moves the chromaticity
/// off the locus, then normalised so that the ybar-weighted integral is 1.
/// t must lie in [2000, 12000] K.
IlluminantSPD planckian_spd( double t, std::optional<std::uint64_t> jitter_seed = std::nullopt,
                             const SpectralGrid &grid = SpectralGrid::visible( 5.0 ),
                             double jitter_scale = 0.05 );

/// Trapezoid integral of E * R_k for each channel. Grids must match.
IlluminantRGB illuminant_rgb( const CameraCSS &css, const IlluminantSPD &spd );

/// Piecewise-constant spectral scene: each pixel indexes one reflectance curve.
struct ReflectancePatchSet
{
    SpectralGrid                     grid;
    int                              width  = 0;
    int                              height = 0;
    std::vector<std::vector<double>> curves;
    std::vector<std::uint32_t>       patch_index; // width * height

    /// Every pixel reflects `value` at every wavelength.
    static ReflectancePatchSet uniform( const SpectralGrid &grid, int width, int height,
                                        double value );
};

/// Smooth random reflectances: a small base level plus three Gaussians in
/// wavelength, clipped to [0, 1].
std::vector<std::vector<double>> make_reflectance_bank( std::size_t size, std::mt19937_64 &rng,
                                                        const SpectralGrid &grid );

/// Random rectangles drawn from `bank` over a background patch.
ReflectancePatchSet make_patchwork( const std::vector<std::vector<double>> &bank, int width,
                                    int height, int min_patches, int max_patches,
                                    std::mt19937_64 &rng, const SpectralGrid &grid );

struct SensorNoise
{
    double                       sigma = 0.005; // fraction of full scale
    std::optional<std::uint64_t> seed;          // no seed: noise disabled
};

struct SynthScene
{
    RgbImage      image; // linear, [0, 1]
    IlluminantRGB gt_illuminant;
    std::string   camera_id;
    double        nominal_cct;
};

/// Per-pixel sensor response to E * S; gt_illuminant is illuminant_rgb(css, spd).
SynthScene render_scene( const CameraCSS &css, const IlluminantSPD &spd,
                         const ReflectancePatchSet &patches, const SensorNoise &noise = {} );

enum class CctSampling
{
    bimodal,    // warm and cold groups
    log_uniform // log-uniform over [cct_min, cct_max]
};

struct SynthConfig
{
    int           cameras            = 4;
    int           scenes_per_camera  = 60;
    double        cct_min            = 2500.0;
    double        cct_max            = 9000.0;
    CctSampling   sampling           = CctSampling::bimodal;
    double        warm_max           = 3500.0; // bimodal warm group upper bound
    double        cold_min           = 6500.0; // bimodal cold group lower bound
    double        warm_fraction      = 0.5;
    double        css_jitter         = 0.15;
    double        spd_jitter         = 0.05; // 0 disables off-locus jitter
    int           image_size         = 32;
    double        noise_sigma        = 0.005;
    int           reflectance_bank   = 64;
    int           min_patches        = 3;
    int           max_patches        = 10;
    std::uint64_t seed               = 1;
    int           workers            = 1;

    /// Throws ValidationError when the config cannot produce a usable dataset.
    void validate() const;
};

struct SynthRecord
{
    std::string   path; // relative to the dataset directory
    std::string   camera_id;
    IlluminantRGB gt_illuminant;
    double        nominal_cct;
};

/// Camera id for index i ("cam00", "cam01", ...).
std::string synth_camera_id( int index );

/// Writes `<out_dir>/<camera>/scene_NNNN.png` (16-bit) and
/// `<out_dir>/manifest.csv`. Returns the manifest rows in file order.
std::vector<SynthRecord> generate_dataset( const SynthConfig &config, const std::string &out_dir );

/// The manifest text generate_dataset writes for `records`.
std::string format_synth_manifest( const std::vector<SynthRecord> &records );

/// Deterministic 64-bit stream seed from a master seed and stream labels.
std::uint64_t derive_seed( std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                           std::uint64_t c = 0 );

} // namespace ccmeta
