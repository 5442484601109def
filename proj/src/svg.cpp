#include "iml/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "iml/errors.hpp"

namespace iml {

namespace {

// canvas geometry (px)
constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 616.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 376.0;

const char* kSeriesColor[] = {"#1f6f8b", "#c05746", "#4a7c59", "#7d5ba6",
                              "#b8860b", "#5b5b5b"};
constexpr int kNumColors = 6;

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (const char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string label_num(double v) {
    // avoid "-0" labels from rounded ticks
    if (v == 0.0) v = 0.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

// widest finite span covered by the data, padded to avoid zero width
Range pad_range(double lo, double hi) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || lo > hi) return {0.0, 1.0};
    if (lo == hi) return {lo - 1.0, hi + 1.0};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

// ~5 round-valued ticks covering [lo, hi]
std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw_step = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    const double frac = raw_step / mag;
    double step;
    if (frac <= 1.5)
        step = 1.0;
    else if (frac <= 3.5)
        step = 2.0;
    else if (frac <= 7.5)
        step = 5.0;
    else
        step = 10.0;
    step *= mag;
    std::vector<double> ticks;
    const double first = std::ceil(lo / step) * step;
    for (double v = first; v <= hi + 0.5 * step; v += step) {
        double t = v;
        if (std::fabs(t) < 1e-12 * step) t = 0.0;
        ticks.push_back(t);
        if (ticks.size() > 12) break;  // numerical safety net
    }
    return ticks;
}

}  // namespace

std::string render_line_plot(const PlotSpec& spec) {
    if (spec.series.empty()) throw input_error("plot: no series to draw");
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
    double ylo = xlo, yhi = -xlo;
    for (const PlotSeries& s : spec.series) {
        if (s.x.size() != s.y.size())
            throw input_error("plot: series '" + s.label + "' has mismatched x/y sizes");
        if (!s.yerr.empty() && s.yerr.size() != s.y.size())
            throw input_error("plot: series '" + s.label + "' has mismatched yerr size");
        if (s.x.empty())
            throw input_error("plot: series '" + s.label + "' is empty");
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!(std::isfinite(s.x[i]) && std::isfinite(s.y[i])))
                throw input_error("plot: series '" + s.label + "' has non-finite values");
            const double e = s.yerr.empty() ? 0.0 : std::fabs(s.yerr[i]);
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i] - e);
            yhi = std::max(yhi, s.y[i] + e);
        }
    }
    const Range xr = pad_range(xlo, xhi);
    const Range yr = pad_range(ylo, yhi);
    const auto sx = [&](double v) {
        return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * (kRight - kLeft);
    };
    const auto sy = [&](double v) {
        return kBottom - (v - yr.lo) / (yr.hi - yr.lo) * (kBottom - kTop);
    };

    std::string svg;
    svg.reserve(1 << 14);
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "viewBox=\"0 0 640 420\" font-family=\"monospace\" font-size=\"12\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"420\" fill=\"#ffffff\"/>\n";

    // gridlines + tick labels
    for (const double t : nice_ticks(xr.lo, xr.hi)) {
        const std::string X = px(sx(t));
        svg += "<line x1=\"" + X + "\" y1=\"" + px(kTop) + "\" x2=\"" + X +
               "\" y2=\"" + px(kBottom) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + X + "\" y=\"" + px(kBottom + 16.0) +
               "\" text-anchor=\"middle\" fill=\"#333333\">" + label_num(t) + "</text>\n";
    }
    for (const double t : nice_ticks(yr.lo, yr.hi)) {
        const std::string Y = px(sy(t));
        svg += "<line x1=\"" + px(kLeft) + "\" y1=\"" + Y + "\" x2=\"" + px(kRight) +
               "\" y2=\"" + Y + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + px(kLeft - 6.0) + "\" y=\"" + px(sy(t) + 4.0) +
               "\" text-anchor=\"end\" fill=\"#333333\">" + label_num(t) + "</text>\n";
    }

    // axes frame
    svg += "<rect x=\"" + px(kLeft) + "\" y=\"" + px(kTop) + "\" width=\"" +
           px(kRight - kLeft) + "\" height=\"" + px(kBottom - kTop) +
           "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

    // series
    for (size_t si = 0; si < spec.series.size(); ++si) {
        const PlotSeries& s = spec.series[si];
        const char* color = kSeriesColor[si % kNumColors];
        if (!s.yerr.empty()) {
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (s.yerr[i] == 0.0) continue;
                const double X = sx(s.x[i]);
                const double Y0 = sy(s.y[i] - std::fabs(s.yerr[i]));
                const double Y1 = sy(s.y[i] + std::fabs(s.yerr[i]));
                svg += "<line x1=\"" + px(X) + "\" y1=\"" + px(Y0) + "\" x2=\"" + px(X) +
                       "\" y2=\"" + px(Y1) + "\" stroke=\"" + color +
                       "\" stroke-width=\"1\"/>\n";
                for (const double Y : {Y0, Y1})
                    svg += "<line x1=\"" + px(X - 3.0) + "\" y1=\"" + px(Y) + "\" x2=\"" +
                           px(X + 3.0) + "\" y2=\"" + px(Y) + "\" stroke=\"" + color +
                           "\" stroke-width=\"1\"/>\n";
            }
        }
        if (s.x.size() > 1) {
            svg += "<polyline fill=\"none\" stroke=\"";
            svg += color;
            svg += "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) {
                if (i) svg += ' ';
                svg += px(sx(s.x[i])) + "," + px(sy(s.y[i]));
            }
            svg += "\"/>\n";
        }
        for (size_t i = 0; i < s.x.size(); ++i)
            svg += "<circle cx=\"" + px(sx(s.x[i])) + "\" cy=\"" + px(sy(s.y[i])) +
                   "\" r=\"2.5\" fill=\"" + std::string(color) + "\"/>\n";
        if (!s.label.empty()) {
            const double LY = kTop + 16.0 + 16.0 * double(si);
            svg += "<line x1=\"" + px(kLeft + 10.0) + "\" y1=\"" + px(LY - 4.0) +
                   "\" x2=\"" + px(kLeft + 30.0) + "\" y2=\"" + px(LY - 4.0) +
                   "\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
            svg += "<text x=\"" + px(kLeft + 36.0) + "\" y=\"" + px(LY) +
                   "\" fill=\"#333333\">" + escape_xml(s.label) + "</text>\n";
        }
    }

    // title and axis labels
    if (!spec.title.empty())
        svg += "<text x=\"" + px(0.5 * kWidth) + "\" y=\"24\" text-anchor=\"middle\" "
               "font-size=\"14\" fill=\"#111111\">" + escape_xml(spec.title) + "</text>\n";
    if (!spec.xlabel.empty())
        svg += "<text x=\"" + px(0.5 * (kLeft + kRight)) + "\" y=\"" +
               px(kHeight - 8.0) + "\" text-anchor=\"middle\" fill=\"#333333\">" +
               escape_xml(spec.xlabel) + "</text>\n";
    if (!spec.ylabel.empty())
        svg += "<text x=\"16\" y=\"" + px(0.5 * (kTop + kBottom)) +
               "\" text-anchor=\"middle\" fill=\"#333333\" transform=\"rotate(-90 16 " +
               px(0.5 * (kTop + kBottom)) + ")\">" + escape_xml(spec.ylabel) +
               "</text>\n";

    svg += "</svg>\n";
    return svg;
}

void write_line_plot(const std::string& path, const PlotSpec& spec) {
    const std::string svg = render_line_plot(spec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("plot: cannot write '" + path + "'");
    out << svg;
}

}  // namespace iml
