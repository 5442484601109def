#pragma once

// Minimal deterministic SVG line plots.
//
// The renderer emits a fixed-size (640x420) standalone SVG document from
// numeric series. Output is a pure function of the input spec: coordinates
// are rounded to 0.01 px and tick labels use %.6g, so re-rendering the same
// data yields byte-identical files. No external assets are referenced.

#include <string>
#include <vector>

namespace iml {

// One polyline with optional symmetric vertical error bars.
// `x` and `y` must have equal size; `yerr` is either empty or the same size.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr;
};

struct PlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    std::vector<PlotSeries> series;
};

// Renders the spec as a standalone SVG document string.
// Throws input_error when the spec is empty or a series is malformed.
std::string render_line_plot(const PlotSpec& spec);

// Renders and writes to `path`; throws input_error when the file
// cannot be opened for writing.
void write_line_plot(const std::string& path, const PlotSpec& spec);

}  // namespace iml
