// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#include <ccmeta/error.hpp>
#include <ccmeta/svg.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace ccmeta
{

namespace
{

constexpr const char *kPalette[] = { "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                     "#9467bd", "#8c564b", "#e377c2", "#17becf" };
constexpr const char *kUngrouped = "#b0b0b0";

const char *colour( int i )
{
    return i < 0 ? kUngrouped : kPalette[static_cast<std::size_t>( i ) % std::size( kPalette )];
}

std::string num( double v )
{
    return fmt::format( "{:.2f}", v );
}

std::string tick_label( double v, double step )
{
    const int decimals = step >= 1.0 ? 0 : static_cast<int>( std::ceil( -std::log10( step ) - 1e-9 ) );
    return fmt::format( "{:.{}f}", v, decimals );
}

struct Range
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add( double v )
    {
        if ( std::isfinite( v ) )
        {
            lo = std::min( lo, v );
            hi = std::max( hi, v );
        }
    }
    void settle()
    {
        if ( !std::isfinite( lo ) )
        {
            lo = 0.0;
            hi = 1.0;
        }
        if ( hi - lo < 1e-12 )
        {
            const double pad = std::max( 0.5, std::fabs( lo ) * 0.1 );
            lo -= pad;
            hi += pad;
        }
    }
};

// Plot area within a panel; maps data to pixels.
struct Frame
{
    double x0, y0, w, h;
    double xlo, xhi, ylo, yhi;

    double px( double x ) const { return x0 + ( x - xlo ) / ( xhi - xlo ) * w; }
    double py( double y ) const { return y0 + h - ( y - ylo ) / ( yhi - ylo ) * h; }
};

void axes( std::string &out, const Frame &f, const std::vector<double> &xt, const std::vector<double> &yt,
           bool y_labels )
{
    out += fmt::format( "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>\n",
                        num( f.x0 ), num( f.y0 ), num( f.w ), num( f.h ) );
    const double xs = xt.size() > 1 ? xt[1] - xt[0] : 1.0;
    const double ys = yt.size() > 1 ? yt[1] - yt[0] : 1.0;
    for ( double t: xt )
    {
        const double x = f.px( t );
        out += fmt::format( "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#ddd\"/>\n", num( x ),
                            num( f.y0 ), num( f.y0 + f.h ) );
        out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\">{}</text>\n", num( x ),
                            num( f.y0 + f.h + 15 ), tick_label( t, xs ) );
    }
    for ( double t: yt )
    {
        const double y = f.py( t );
        out += fmt::format( "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#ddd\"/>\n", num( f.x0 ), num( y ),
                            num( f.x0 + f.w ) );
        if ( y_labels )
            out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{}</text>\n",
                                num( f.x0 - 6 ), num( y + 4 ), tick_label( t, ys ) );
    }
}

std::string header( double w, double h, const std::string &title )
{
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += fmt::format( "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
                        "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\">\n",
                        num( w ), num( h ) );
    out += fmt::format( "<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", num( w ), num( h ) );
    out += fmt::format( "<text x=\"{}\" y=\"22\" font-size=\"15\" text-anchor=\"middle\">{}</text>\n", num( w / 2 ),
                        xml_escape( title ) );
    return out;
}

} // namespace

std::string xml_escape( const std::string &s )
{
    std::string out;
    for ( char c: s )
        switch ( c )
        {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    return out;
}

std::vector<double> nice_ticks( double lo, double hi, int target )
{
    if ( !std::isfinite( lo ) || !std::isfinite( hi ) || hi <= lo || target < 1 )
        throw ValidationError( "nice_ticks needs a finite, nonempty range" );
    const double raw  = ( hi - lo ) / target;
    const double mag  = std::pow( 10.0, std::floor( std::log10( raw ) ) );
    const double frac = raw / mag;
    const double step = ( frac <= 1.0 ? 1.0 : frac <= 2.0 ? 2.0 : frac <= 5.0 ? 5.0 : 10.0 ) * mag;
    std::vector<double> t;
    for ( double k = std::ceil( lo / step - 1e-9 ); k * step <= hi + step * 1e-9; k += 1.0 )
        t.push_back( k * step + 0.0 );
    return t;
}

std::string svg_line_chart( const std::string &title, const std::string &x_label, const std::string &y_label,
                            const std::vector<LineSeries> &series )
{
    Range xr, yr;
    for ( const auto &s: series )
    {
        if ( s.x.size() != s.y.size() || ( !s.err.empty() && s.err.size() != s.y.size() ) )
            throw ValidationError( fmt::format( "series '{}' has mismatched lengths", s.label ) );
        for ( std::size_t i = 0; i < s.x.size(); ++i )
        {
            xr.add( s.x[i] );
            const double e = s.err.empty() ? 0.0 : s.err[i];
            yr.add( s.y[i] - e );
            yr.add( s.y[i] + e );
        }
    }
    yr.add( 0.0 );
    xr.settle();
    yr.settle();
    const auto xt = nice_ticks( xr.lo, xr.hi );
    const auto yt = nice_ticks( yr.lo, yr.hi );

    const double W = 640, H = 420;
    Frame        f{ 70, 40, 400, 320, std::min( xr.lo, xt.front() ), std::max( xr.hi, xt.back() ),
                    std::min( yr.lo, yt.front() ), std::max( yr.hi, yt.back() ) };
    std::string  out = header( W, H, title );
    axes( out, f, xt, yt, true );
    out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                        num( f.x0 + f.w / 2 ), num( H - 18 ), xml_escape( x_label ) );
    out += fmt::format( "<text x=\"18\" y=\"{0}\" font-size=\"12\" text-anchor=\"middle\" "
                        "transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                        num( f.y0 + f.h / 2 ), xml_escape( y_label ) );

    for ( std::size_t si = 0; si < series.size(); ++si )
    {
        const auto &s = series[si];
        const char *c = colour( static_cast<int>( si ) );
        std::string pts;
        for ( std::size_t i = 0; i < s.x.size(); ++i )
            pts += fmt::format( "{}{},{}", i ? " " : "", num( f.px( s.x[i] ) ), num( f.py( s.y[i] ) ) );
        out += fmt::format( "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", pts, c );
        for ( std::size_t i = 0; i < s.x.size(); ++i )
        {
            const double x = f.px( s.x[i] );
            if ( !s.err.empty() && s.err[i] > 0.0 )
            {
                const double a = f.py( s.y[i] - s.err[i] ), b = f.py( s.y[i] + s.err[i] );
                out += fmt::format( "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"{3}\"/>\n", num( x ),
                                    num( a ), num( b ), c );
                out += fmt::format( "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"{3}\"/>\n",
                                    num( x - 4 ), num( x + 4 ), num( a ), c );
                out += fmt::format( "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"{3}\"/>\n",
                                    num( x - 4 ), num( x + 4 ), num( b ), c );
            }
            out += fmt::format( "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\"/>\n", num( x ),
                                num( f.py( s.y[i] ) ), c );
        }
        const double ly = f.y0 + 10 + 18.0 * static_cast<double>( si );
        out += fmt::format( "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{3}\" stroke-width=\"2\"/>\n",
                            num( f.x0 + f.w + 15 ), num( ly ), num( f.x0 + f.w + 35 ), c );
        out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n", num( f.x0 + f.w + 40 ),
                            num( ly + 4 ), xml_escape( s.label ) );
    }
    out += "</svg>\n";
    return out;
}

std::string svg_scatter( const std::string &title, const std::string &x_label, const std::string &y_label,
                         const std::vector<ScatterPanel> &panels, const std::vector<std::string> &group_labels )
{
    Range xr, yr;
    for ( const auto &p: panels )
        for ( const auto &pt: p.points )
        {
            xr.add( pt.x );
            yr.add( pt.y );
        }
    xr.settle();
    yr.settle();
    const auto xt = nice_ticks( xr.lo, xr.hi, 4 );
    const auto yt = nice_ticks( yr.lo, yr.hi, 5 );

    const double pw = 240, ph = 240, gap = 30, left = 70, top = 50;
    const double n  = static_cast<double>( std::max<std::size_t>( 1, panels.size() ) );
    const double W  = left + n * pw + ( n - 1 ) * gap + 150;
    const double H  = top + ph + 60;
    std::string  out = header( W, H, title );
    for ( std::size_t pi = 0; pi < panels.size(); ++pi )
    {
        const Frame f{ left + static_cast<double>( pi ) * ( pw + gap ),
                       top,
                       pw,
                       ph,
                       std::min( xr.lo, xt.front() ),
                       std::max( xr.hi, xt.back() ),
                       std::min( yr.lo, yt.front() ),
                       std::max( yr.hi, yt.back() ) };
        axes( out, f, xt, yt, pi == 0 );
        out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                            num( f.x0 + pw / 2 ), num( top - 6 ), xml_escape( panels[pi].title ) );
        out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
                            num( f.x0 + pw / 2 ), num( H - 18 ), xml_escape( x_label ) );
        for ( const auto &pt: panels[pi].points )
            out += fmt::format( "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.8\"/>\n",
                                num( f.px( pt.x ) ), num( f.py( pt.y ) ), colour( pt.group ) );
    }
    out += fmt::format( "<text x=\"18\" y=\"{0}\" font-size=\"12\" text-anchor=\"middle\" "
                        "transform=\"rotate(-90 18 {0})\">{1}</text>\n",
                        num( top + ph / 2 ), xml_escape( y_label ) );
    const double lx = left + n * pw + ( n - 1 ) * gap + 15;
    for ( std::size_t g = 0; g < group_labels.size(); ++g )
    {
        const double ly = top + 10 + 18.0 * static_cast<double>( g );
        out += fmt::format( "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"{}\"/>\n", num( lx ), num( ly ),
                            colour( static_cast<int>( g ) ) );
        out += fmt::format( "<text x=\"{}\" y=\"{}\" font-size=\"11\">{}</text>\n", num( lx + 10 ), num( ly + 4 ),
                            xml_escape( group_labels[g] ) );
    }
    out += "</svg>\n";
    return out;
}

} // namespace ccmeta
