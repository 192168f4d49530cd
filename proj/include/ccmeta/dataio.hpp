// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <ccmeta/colorsci.hpp>
#include <ccmeta/image.hpp>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ccmeta
{

/// Pixel rectangle, [x0, x1) x [y0, y1).
struct MaskRect
{
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    bool operator==( const MaskRect & ) const = default;
};

struct ManifestRecord
{
    std::string           path; // resolved against the manifest directory
    std::string           camera_id;
    IlluminantRGB         gt_illuminant;
    std::vector<MaskRect> masks;
    double                black_level = 0.0; // in the file's native units
    std::optional<double> nominal_cct;
};

struct DatasetManifest
{
    std::string                 directory;
    std::vector<ManifestRecord> records; // image id = index

    std::vector<std::string> camera_ids() const; // sorted, unique
};

/// Required columns: path, camera_id, gt_r, gt_g, gt_b. Optional: nominal_cct,
/// mask_x0, mask_y0, mask_x1, mask_y1 (all four or none), black_level.
/// Empty optional cells take defaults. Throws ValidationError naming the
/// offending column, or IoError for unreadable or missing files.
DatasetManifest load_manifest( const std::string &path, bool check_files = true );
DatasetManifest parse_manifest( const std::string &text, const std::string &directory,
                                bool check_files = true );

struct ProcessedImage
{
    RgbImage              image; // gamma-encoded, [0, 1]
    std::vector<uint8_t>  valid; // 0 where masked
    std::string           camera_id;
    IlluminantRGB         gt_illuminant;
    std::optional<double> cct;

    std::size_t valid_count() const;
};

inline constexpr double kGamma = 2.2;

/// v^(1/2.2).
double gamma_encode( double linear );
/// v^2.2.
double gamma_decode( double encoded );

struct PreprocessOptions
{
    bool apply_gamma = true;
};

/// In order: subtract the black level and clamp at 0; quantise 16-bit input
/// to 8 bits over the range above the black level; scale to [0, 1]; apply
/// v^(1/2.2); zero the mask rectangles and flag them invalid.
ProcessedImage preprocess( const DecodedImage &raw, const ManifestRecord &record,
                           const PreprocessOptions &opts = {} );

/// Square crop with side uniform in [out_size, min(H, W)] at a uniform
/// position, bilinearly resized to out_size (half-pixel centres, no
/// renormalisation of masked zeros). Output is out_size x out_size x 3.
std::vector<float> crop_resize( const ProcessedImage &img, int out_size, std::mt19937_64 &rng );

/// Crop of side `side` at (x0, y0), bilinearly resized to out_size.
std::vector<float> crop_resize_at( const RgbImage &img, int x0, int y0, int side, int out_size );

/// Centred square crop of side min(H, W) resized to out_size; the
/// deterministic input used at evaluation time.
std::vector<float> full_resize( const ProcessedImage &img, int out_size );

} // namespace ccmeta

namespace ccmeta
{

/// Manifest plus every image decoded and preprocessed (image id = index).
struct LoadedDataset
{
    DatasetManifest             manifest;
    std::vector<ProcessedImage> images;
};

LoadedDataset load_dataset( const std::string &manifest_path, int workers = 1 );
LoadedDataset load_dataset( DatasetManifest manifest, int workers = 1 );

} // namespace ccmeta
