// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/nn/checkpoint.hpp>

#include <fmt/format.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace ccmeta::nn
{

namespace
{

class Writer
{
public:
    std::vector<std::uint8_t> bytes;

    template <class U>
    void put_uint( U v )
    {
        for ( std::size_t i = 0; i < sizeof( U ); ++i )
            bytes.push_back( static_cast<std::uint8_t>( v >> ( 8 * i ) ) );
    }
    void u8( std::uint8_t v ) { bytes.push_back( v ); }
    void u32( std::uint32_t v ) { put_uint( v ); }
    void i32( std::int32_t v ) { put_uint( static_cast<std::uint32_t>( v ) ); }
    void u64( std::uint64_t v ) { put_uint( v ); }
    void f32( float v ) { put_uint( std::bit_cast<std::uint32_t>( v ) ); }
    void str( const std::string &s )
    {
        u32( static_cast<std::uint32_t>( s.size() ) );
        bytes.insert( bytes.end(), s.begin(), s.end() );
    }
};

class Reader
{
public:
    explicit Reader( const std::vector<std::uint8_t> &b )
        : bytes_( b )
    {}

    template <class U>
    U get_uint()
    {
        need( sizeof( U ) );
        U v = 0;
        for ( std::size_t i = 0; i < sizeof( U ); ++i )
            v |= static_cast<U>( bytes_[pos_ + i] ) << ( 8 * i );
        pos_ += sizeof( U );
        return v;
    }
    std::uint8_t  u8() { return get_uint<std::uint8_t>(); }
    std::uint32_t u32() { return get_uint<std::uint32_t>(); }
    std::int32_t  i32() { return static_cast<std::int32_t>( get_uint<std::uint32_t>() ); }
    std::uint64_t u64() { return get_uint<std::uint64_t>(); }
    float         f32() { return std::bit_cast<float>( get_uint<std::uint32_t>() ); }
    std::string   str()
    {
        const std::uint32_t len = u32();
        need( len );
        std::string s( bytes_.begin() + static_cast<std::ptrdiff_t>( pos_ ),
                       bytes_.begin() + static_cast<std::ptrdiff_t>( pos_ + len ) );
        pos_ += len;
        return s;
    }
    void need( std::size_t count ) const
    {
        if ( bytes_.size() - pos_ < count )
            throw IoError( "checkpoint is truncated" );
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    const std::vector<std::uint8_t> &bytes_;
    std::size_t                      pos_ = 0;
};

} // namespace

std::vector<std::uint8_t> serialize_checkpoint( const Checkpoint &ckpt )
{
    Writer w;
    w.bytes.insert( w.bytes.end(), std::begin( kCheckpointMagic ), std::end( kCheckpointMagic ) );
    w.u32( kCheckpointVersion );
    w.i32( ckpt.spec.height );
    w.i32( ckpt.spec.width );
    w.i32( ckpt.spec.channels );
    w.u32( static_cast<std::uint32_t>( ckpt.spec.layers.size() ) );
    for ( const auto &l: ckpt.spec.layers )
    {
        w.u8( static_cast<std::uint8_t>( l.kind ) );
        w.i32( l.out );
    }
    w.u64( ckpt.iterations );
    w.str( ckpt.variant );
    w.u64( ckpt.theta.size() );
    for ( float v: ckpt.theta )
        w.f32( v );
    w.u8( static_cast<std::uint8_t>( ckpt.alpha.kind ) );
    w.i32( ckpt.alpha.rows );
    w.i32( ckpt.alpha.cols );
    for ( float v: ckpt.alpha.values )
        w.f32( v );
    w.str( ckpt.config_echo );
    return std::move( w.bytes );
}

Checkpoint parse_checkpoint( const std::vector<std::uint8_t> &bytes )
{
    Reader r( bytes );
    r.need( sizeof( kCheckpointMagic ) );
    if ( std::memcmp( bytes.data(), kCheckpointMagic, sizeof( kCheckpointMagic ) ) != 0 )
        throw IoError( "not a checkpoint file (bad magic)" );
    for ( std::size_t i = 0; i < sizeof( kCheckpointMagic ); ++i )
        r.u8();
    const std::uint32_t version = r.u32();
    if ( version != kCheckpointVersion )
        throw IoError( fmt::format( "unsupported checkpoint version {}", version ) );

    Checkpoint c;
    c.spec.height            = r.i32();
    c.spec.width             = r.i32();
    c.spec.channels          = r.i32();
    const std::uint32_t nl   = r.u32();
    r.need( static_cast<std::size_t>( nl ) * 5 );
    for ( std::uint32_t i = 0; i < nl; ++i )
    {
        LayerSpec l;
        const auto kind = r.u8();
        if ( kind < 1 || kind > 5 )
            throw ValidationError( fmt::format( "checkpoint layer {} has unknown kind {}", i, kind ) );
        l.kind = static_cast<LayerKind>( kind );
        l.out  = r.i32();
        c.spec.layers.push_back( l );
    }
    c.iterations         = r.u64();
    c.variant            = r.str();
    const std::uint64_t np = r.u64();
    r.need( np * 4 );
    c.theta.resize( np );
    for ( auto &v: c.theta )
        v = r.f32();
    const auto ak = r.u8();
    if ( ak > 2 )
        throw ValidationError( fmt::format( "checkpoint has unknown alpha kind {}", ak ) );
    c.alpha.kind = static_cast<AlphaKind>( ak );
    c.alpha.rows = r.i32();
    c.alpha.cols = r.i32();
    if ( c.alpha.rows < 1 || c.alpha.cols < 1 )
        throw ValidationError( "checkpoint alpha shape is invalid" );
    const std::size_t na = static_cast<std::size_t>( c.alpha.rows ) * static_cast<std::size_t>( c.alpha.cols );
    r.need( na * 4 );
    c.alpha.values.resize( na );
    for ( auto &v: c.alpha.values )
        v = r.f32();
    c.config_echo = r.str();
    if ( !r.done() )
        throw IoError( "checkpoint has trailing bytes" );

    const NetworkLayout layout( c.spec );
    if ( layout.param_count() != c.theta.size() )
        throw ValidationError( fmt::format( "checkpoint has {} parameters, its network needs {}", c.theta.size(),
                                            layout.param_count() ) );
    c.alpha.validate( layout );
    return c;
}

void write_checkpoint( const std::filesystem::path &path, const Checkpoint &ckpt )
{
    const auto    bytes = serialize_checkpoint( ckpt );
    std::ofstream out( path, std::ios::binary | std::ios::trunc );
    if ( !out )
        throw IoError( fmt::format( "cannot open '{}' for writing", path.string() ) );
    out.write( reinterpret_cast<const char *>( bytes.data() ), static_cast<std::streamsize>( bytes.size() ) );
    if ( !out )
        throw IoError( fmt::format( "failed writing '{}'", path.string() ) );
}

Checkpoint read_checkpoint( const std::filesystem::path &path )
{
    std::ifstream in( path, std::ios::binary );
    if ( !in )
        throw IoError( fmt::format( "cannot open checkpoint '{}'", path.string() ) );
    std::vector<std::uint8_t> bytes( ( std::istreambuf_iterator<char>( in ) ), std::istreambuf_iterator<char>() );
    return parse_checkpoint( bytes );
}

} // namespace ccmeta::nn
