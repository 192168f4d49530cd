// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/parallel.hpp>
#include <ccmeta/synthcam.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace ccmeta
{

namespace
{

constexpr std::array<double, 3> kCanonicalPeak  = { 615.0, 535.0, 450.0 };
constexpr std::array<double, 3> kCanonicalWidth = { 20.0, 25.0, 15.0 };
constexpr double                kGreenLevel     = 0.3;

std::vector<double> gaussian_curve( const SpectralGrid &g, double peak, double width, double amp )
{
    std::vector<double> v( g.count );
    for ( std::size_t i = 0; i < g.count; ++i )
    {
        const double z = ( g.wavelength( i ) - peak ) / width;
        v[i]           = amp * std::exp( -0.5 * z * z );
    }
    return v;
}

double integrate_product( const std::vector<double> &a, const std::vector<double> &b, double step )
{
    std::vector<double> f( a.size() );
    for ( std::size_t i = 0; i < a.size(); ++i )
        f[i] = a[i] * b[i];
    return trapezoid( f, step );
}

std::array<double, 3> solve3( const double m[3][3], const std::array<double, 3> &b )
{
    auto det = []( double a00, double a01, double a02, double a10, double a11, double a12,
                   double a20, double a21, double a22 ) {
        return a00 * ( a11 * a22 - a12 * a21 ) - a01 * ( a10 * a22 - a12 * a20 ) +
               a02 * ( a10 * a21 - a11 * a20 );
    };
    const double d = det( m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0],
                          m[2][1], m[2][2] );
    std::array<double, 3> x{};
    for ( int c = 0; c < 3; ++c )
    {
        double a[3][3];
        for ( int r = 0; r < 3; ++r )
            for ( int k = 0; k < 3; ++k )
                a[r][k] = k == c ? b[r] : m[r][k];
        x[c] = det( a[0][0], a[0][1], a[0][2], a[1][0], a[1][1], a[1][2], a[2][0], a[2][1],
                    a[2][2] ) /
               d;
    }
    return x;
}

const std::array<double, 3> &canonical_amplitudes()
{
    static const std::array<double, 3> amps = [] {
        constexpr double srgb_to_xyz[3][3] = { { 0.4124, 0.3576, 0.1805 },
                                               { 0.2126, 0.7152, 0.0722 },
                                               { 0.0193, 0.1192, 0.9505 } };
        const auto       grid              = SpectralGrid::visible( 5.0 );
        const auto       spd               = planckian_spd( 6504.0, std::nullopt, grid );
        const auto      &cmf               = cie1931_cmf();
        std::array<double, 3> xyz{};
        for ( int k = 0; k < 3; ++k )
            xyz[k] = integrate_product( spd.values, cmf.cmf[k], grid.step_nm );
        auto rgb = solve3( srgb_to_xyz, xyz );
        std::array<double, 3> a{};
        for ( int k = 0; k < 3; ++k )
        {
            const auto   unit = gaussian_curve( grid, kCanonicalPeak[k], kCanonicalWidth[k], 1.0 );
            const double resp = integrate_product( spd.values, unit, grid.step_nm );
            a[k]              = kGreenLevel * ( rgb[k] / rgb[1] ) / resp;
        }
        return a;
    }();
    return amps;
}

double ybar_at( double nm ) { return cie1931_cmf().at( 1, nm ); }

} // namespace

std::uint64_t derive_seed( std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c )
{
    auto mix = []( std::uint64_t z ) {
        z += 0x9e3779b97f4a7c15ULL;
        z = ( z ^ ( z >> 30 ) ) * 0xbf58476d1ce4e5b9ULL;
        z = ( z ^ ( z >> 27 ) ) * 0x94d049bb133111ebULL;
        return z ^ ( z >> 31 );
    };
    std::uint64_t h = mix( master );
    h               = mix( h ^ a );
    h               = mix( h ^ b );
    h               = mix( h ^ c );
    return h;
}

CameraCSS CameraCSS::resampled( const SpectralGrid &g ) const
{
    CameraCSS out = *this;
    out.grid      = g;
    for ( int k = 0; k < 3; ++k )
        out.curves[k] = gaussian_curve( g, params.peak_nm[k], params.width_nm[k], params.amplitude[k] );
    return out;
}

CameraCSS make_css( std::uint64_t seed, double jitter, std::string camera_id, const SpectralGrid &grid )
{
    if ( !( jitter >= 0.0 && jitter <= 0.3 ) )
        throw ValidationError( "make_css: jitter must lie in [0, 0.3]" );

    CssParams p{ kCanonicalPeak, kCanonicalWidth, canonical_amplitudes() };
    if ( jitter > 0.0 )
    {
        std::mt19937_64                        rng( seed );
        std::uniform_real_distribution<double> u( -1.0, 1.0 );
        for ( int k = 0; k < 3; ++k )
        {
            p.peak_nm[k] += 40.0 * jitter * u( rng );
            p.width_nm[k] *= 1.0 + 0.5 * jitter * u( rng );
            p.amplitude[k] *= 1.0 + 0.5 * jitter * u( rng );
        }
    }

    CameraCSS css;
    css.camera_id = std::move( camera_id );
    css.params    = p;
    return css.resampled( grid );
}

IlluminantSPD planckian_spd( double t, std::optional<std::uint64_t> jitter_seed,
                             const SpectralGrid &grid, double jitter_scale )
{
    if ( !( t >= 2000.0 && t <= 12000.0 ) )
        throw ValidationError( "planckian_spd: temperature must lie in [2000, 12000] K" );

    IlluminantSPD spd;
    spd.grid        = grid;
    spd.nominal_cct = t;
    spd.values.resize( grid.count );
    for ( std::size_t i = 0; i < grid.count; ++i )
        spd.values[i] = planck_radiance( grid.wavelength( i ), t );

    if ( jitter_seed && jitter_scale > 0.0 )
    {
        std::mt19937_64                  rng( *jitter_seed );
        std::normal_distribution<double> n( 0.0, jitter_scale );
        const double                     tilt = n( rng );
        const double                     bump = n( rng );
        for ( std::size_t i = 0; i < grid.count; ++i )
        {
            const double u = ( grid.wavelength( i ) - 580.0 ) / 200.0;
            spd.values[i] *= std::exp( tilt * u + bump * ( u * u - 1.0 / 3.0 ) );
        }
        spd.family = SpdFamily::planckian_jittered;
    }

    std::vector<double> weighted( grid.count );
    for ( std::size_t i = 0; i < grid.count; ++i )
        weighted[i] = spd.values[i] * ybar_at( grid.wavelength( i ) );
    const double norm = trapezoid( weighted, grid.step_nm );
    for ( auto &v : spd.values )
        v /= norm;
    return spd;
}

IlluminantRGB illuminant_rgb( const CameraCSS &css, const IlluminantSPD &spd )
{
    if ( !( css.grid == spd.grid ) )
        throw ValidationError( "illuminant_rgb: camera and illuminant grids differ" );
    std::array<double, 3> rho{};
    for ( int k = 0; k < 3; ++k )
        rho[k] = integrate_product( spd.values, css.curves[k], spd.grid.step_nm );
    return IlluminantRGB( rho );
}

ReflectancePatchSet ReflectancePatchSet::uniform( const SpectralGrid &grid, int width, int height,
                                                  double value )
{
    ReflectancePatchSet p;
    p.grid   = grid;
    p.width  = width;
    p.height = height;
    p.curves.emplace_back( grid.count, value );
    p.patch_index.assign( static_cast<std::size_t>( width ) * height, 0 );
    return p;
}

std::vector<std::vector<double>> make_reflectance_bank( std::size_t size, std::mt19937_64 &rng,
                                                        const SpectralGrid &grid )
{
    std::uniform_real_distribution<double> base( 0.15, 0.7 );
    std::uniform_real_distribution<double> center( 380.0, 780.0 );
    std::uniform_real_distribution<double> width( 30.0, 120.0 );
    std::uniform_real_distribution<double> amp( -0.4, 0.4 );

    std::vector<std::vector<double>> bank;
    bank.reserve( size );
    for ( std::size_t n = 0; n < size; ++n )
    {
        const double        level = base( rng );
        std::vector<double> curve( grid.count, 1.0 );
        for ( int g = 0; g < 3; ++g )
        {
            const double c = center( rng ), w = width( rng ), a = amp( rng );
            for ( std::size_t i = 0; i < grid.count; ++i )
            {
                const double z = ( grid.wavelength( i ) - c ) / w;
                curve[i] += a * std::exp( -0.5 * z * z );
            }
        }
        for ( auto &v : curve )
            v *= level;
        for ( auto &v : curve )
            v = std::clamp( v, 0.0, 1.0 );
        bank.push_back( std::move( curve ) );
    }
    return bank;
}

ReflectancePatchSet make_patchwork( const std::vector<std::vector<double>> &bank, int width,
                                    int height, int min_patches, int max_patches,
                                    std::mt19937_64 &rng, const SpectralGrid &grid )
{
    if ( bank.empty() )
        throw ValidationError( "make_patchwork: empty reflectance bank" );
    std::uniform_int_distribution<std::size_t> pick( 0, bank.size() - 1 );
    std::uniform_int_distribution<int>          count( min_patches, max_patches );

    ReflectancePatchSet p;
    p.grid   = grid;
    p.width  = width;
    p.height = height;
    p.curves.push_back( bank[pick( rng )] );
    p.patch_index.assign( static_cast<std::size_t>( width ) * height, 0 );

    const int n = count( rng );
    for ( int r = 0; r < n; ++r )
    {
        std::uniform_int_distribution<int> wx( 2, std::max( 2, width / 2 ) );
        std::uniform_int_distribution<int> wy( 2, std::max( 2, height / 2 ) );
        const int                          w = wx( rng ), h = wy( rng );
        std::uniform_int_distribution<int> px( 0, width - w );
        std::uniform_int_distribution<int> py( 0, height - h );
        const int                          x0 = px( rng ), y0 = py( rng );
        const auto                         id = static_cast<std::uint32_t>( p.curves.size() );
        p.curves.push_back( bank[pick( rng )] );
        for ( int y = y0; y < y0 + h; ++y )
            for ( int x = x0; x < x0 + w; ++x )
                p.patch_index[static_cast<std::size_t>( y ) * width + x] = id;
    }
    return p;
}

SynthScene render_scene( const CameraCSS &css, const IlluminantSPD &spd,
                         const ReflectancePatchSet &patches, const SensorNoise &noise )
{
    if ( !( css.grid == spd.grid ) || !( patches.grid == spd.grid ) )
        throw ValidationError( "render_scene: spectral grids differ" );
    if ( patches.width < 4 || patches.height < 4 )
        throw ValidationError( "render_scene: image must be at least 4x4" );
    if ( patches.patch_index.size() != static_cast<std::size_t>( patches.width ) * patches.height )
        throw ValidationError( "render_scene: patch index has the wrong size" );

    const auto          &grid = spd.grid;
    std::vector<double>  f( grid.count );
    std::vector<std::array<float, 3>> patch_rgb( patches.curves.size() );
    for ( std::size_t p = 0; p < patches.curves.size(); ++p )
    {
        const auto &s = patches.curves[p];
        for ( int k = 0; k < 3; ++k )
        {
            for ( std::size_t i = 0; i < grid.count; ++i )
                f[i] = spd.values[i] * s[i] * css.curves[k][i];
            patch_rgb[p][k] = static_cast<float>( trapezoid( f, grid.step_nm ) );
        }
    }

    SynthScene scene{ RgbImage( patches.width, patches.height ), illuminant_rgb( css, spd ),
                      css.camera_id, spd.nominal_cct };
    for ( std::size_t i = 0; i < patches.patch_index.size(); ++i )
        for ( int k = 0; k < 3; ++k )
            scene.image.data[i * 3 + k] = patch_rgb[patches.patch_index[i]][k];

    if ( noise.seed && noise.sigma > 0.0 )
    {
        std::mt19937_64                  rng( *noise.seed );
        std::normal_distribution<double> n( 0.0, noise.sigma );
        for ( auto &v : scene.image.data )
            v = static_cast<float>( std::clamp( static_cast<double>( v ) + n( rng ), 0.0, 1.0 ) );
    }
    else
    {
        for ( auto &v : scene.image.data )
            v = std::clamp( v, 0.0f, 1.0f );
    }
    return scene;
}

void SynthConfig::validate() const
{
    if ( cameras < 3 )
        throw ValidationError( "synth: need at least 3 cameras" );
    if ( scenes_per_camera < 40 )
        throw ValidationError( "synth: need at least 40 scenes per camera" );
    if ( !( cct_min >= 2000.0 && cct_max <= 12000.0 && cct_min < cct_max ) )
        throw ValidationError( "synth: CCT range must lie within [2000, 12000] K" );
    if ( !( cct_min <= 4000.0 && cct_max >= 5500.0 ) )
        throw ValidationError( "synth: CCT range must span warm (<= 4000 K) and cold (>= 5500 K)" );
    if ( sampling == CctSampling::bimodal &&
         !( cct_min < warm_max && warm_max <= cold_min && cold_min < cct_max ) )
        throw ValidationError( "synth: bimodal groups need cct_min < warm_max <= cold_min < cct_max" );
    if ( !( warm_fraction >= 0.0 && warm_fraction <= 1.0 ) )
        throw ValidationError( "synth: warm_fraction must lie in [0, 1]" );
    if ( !( css_jitter >= 0.0 && css_jitter <= 0.3 ) )
        throw ValidationError( "synth: css_jitter must lie in [0, 0.3]" );
    if ( image_size < 4 )
        throw ValidationError( "synth: image_size must be at least 4" );
    if ( reflectance_bank < 1 || min_patches < 0 || max_patches < min_patches )
        throw ValidationError( "synth: invalid reflectance bank or patch counts" );
    if ( !( noise_sigma >= 0.0 ) || !( spd_jitter >= 0.0 ) )
        throw ValidationError( "synth: noise and jitter scales must be >= 0" );
}

std::string synth_camera_id( int index ) { return fmt::format( "cam{:02d}", index ); }

std::string format_synth_manifest( const std::vector<SynthRecord> &records )
{
    std::string out = "path,camera_id,gt_r,gt_g,gt_b,nominal_cct\n";
    for ( const auto &r : records )
        out += fmt::format( "{},{},{},{},{},{}\n", r.path, r.camera_id, r.gt_illuminant.r(),
                            r.gt_illuminant.g(), r.gt_illuminant.b(), r.nominal_cct );
    return out;
}

std::vector<SynthRecord> generate_dataset( const SynthConfig &config, const std::string &out_dir )
{
    namespace fs = std::filesystem;
    config.validate();

    const auto grid = SpectralGrid::visible( 5.0 );
    std::vector<CameraCSS> cameras;
    for ( int c = 0; c < config.cameras; ++c )
        cameras.push_back( make_css( derive_seed( config.seed, 1, c ), config.css_jitter,
                                     synth_camera_id( c ), grid ) );

    std::mt19937_64 bank_rng( derive_seed( config.seed, 3 ) );
    const auto      bank = make_reflectance_bank( config.reflectance_bank, bank_rng, grid );

    std::error_code ec;
    for ( const auto &cam : cameras )
    {
        fs::create_directories( fs::path( out_dir ) / cam.camera_id, ec );
        if ( ec )
            throw IoError( "cannot create output directory " + ( fs::path( out_dir ) / cam.camera_id ).string() +
                           ": " + ec.message() );
    }

    const std::size_t n = static_cast<std::size_t>( config.cameras ) * config.scenes_per_camera;
    std::vector<std::optional<SynthRecord>> records( n );
    parallel_for( n, config.workers, [&]( std::size_t idx ) {
        const int       c = static_cast<int>( idx / config.scenes_per_camera );
        const int       s = static_cast<int>( idx % config.scenes_per_camera );
        std::mt19937_64 rng( derive_seed( config.seed, 2, c, s ) );
        std::uniform_real_distribution<double> u( 0.0, 1.0 );

        double lo = config.cct_min, hi = config.cct_max;
        if ( config.sampling == CctSampling::bimodal )
        {
            if ( u( rng ) < config.warm_fraction )
                hi = config.warm_max;
            else
                lo = config.cold_min;
        }
        const double cct    = std::exp( std::log( lo ) + u( rng ) * ( std::log( hi ) - std::log( lo ) ) );
        const auto   spd    = planckian_spd( cct, rng(), grid, config.spd_jitter );
        const auto   patches = make_patchwork( bank, config.image_size, config.image_size,
                                               config.min_patches, config.max_patches, rng, grid );
        const auto   scene  = render_scene( cameras[c], spd, patches,
                                            SensorNoise{ config.noise_sigma, rng() } );

        DecodedImage png{ scene.image.width, scene.image.height, 16, {} };
        png.samples.resize( scene.image.data.size() );
        for ( std::size_t i = 0; i < png.samples.size(); ++i )
            png.samples[i] = static_cast<std::uint16_t>(
                std::lround( std::clamp( scene.image.data[i], 0.0f, 1.0f ) * 65535.0f ) );

        const std::string rel = fmt::format( "{}/scene_{:04d}.png", cameras[c].camera_id, s );
        write_png( ( fs::path( out_dir ) / rel ).string(), png );
        records[idx] = SynthRecord{ rel, cameras[c].camera_id, scene.gt_illuminant, cct };
    } );

    std::vector<SynthRecord> out;
    out.reserve( n );
    for ( auto &r : records )
        out.push_back( std::move( *r ) );

    const auto    manifest = fs::path( out_dir ) / "manifest.csv";
    std::ofstream f( manifest, std::ios::binary );
    if ( !f )
        throw IoError( "cannot write " + manifest.string() );
    f << format_synth_manifest( out );
    if ( !f )
        throw IoError( "failed writing " + manifest.string() );
    return out;
}

} // namespace ccmeta
