// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the ccmeta Project.

#pragma once

#include <string>
#include <vector>

namespace ccmeta
{

std::string xml_escape( const std::string &s );

/// Tick positions covering [lo, hi] at a 1/2/5 x 10^k spacing.
std::vector<double> nice_ticks( double lo, double hi, int target = 6 );

struct LineSeries
{
    std::string         label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> err; // half-height of the error bar; empty for none
};

std::string svg_line_chart( const std::string &title, const std::string &x_label, const std::string &y_label,
                            const std::vector<LineSeries> &series );

struct ScatterPoint
{
    double x     = 0.0;
    double y     = 0.0;
    int    group = -1; // -1: not in any group
};

struct ScatterPanel
{
    std::string               title;
    std::vector<ScatterPoint> points;
};

/// Side-by-side scatter panels sharing axes; points coloured by group.
std::string svg_scatter( const std::string &title, const std::string &x_label, const std::string &y_label,
                         const std::vector<ScatterPanel> &panels, const std::vector<std::string> &group_labels );

} // namespace ccmeta
