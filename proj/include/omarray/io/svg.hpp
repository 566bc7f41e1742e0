#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace omarray::io
{

struct PlotSeries
{
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    // Optional per-vertex colour as fractions in [0, 1]; drawn as filled markers
    // (waveguide, optical, mechanical) -> (red, green, blue).
    std::vector<std::array<double, 3>> colors;
};

struct PlotSpec
{
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 640;
    int height = 420;
    std::vector<PlotSeries> series;
};

namespace detail
{
inline std::string fmt(const char *f, double v)
{
    char buf[48];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

inline std::string escape_xml(const std::string &s)
{
    std::string out;
    for (char c : s) {
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

inline int channel(double f)
{
    if (!std::isfinite(f))
        return 0;
    return static_cast<int>(std::lround(255.0 * std::clamp(f, 0.0, 1.0)));
}

inline std::string rgb(const std::array<double, 3> &c)
{
    return "rgb(" + std::to_string(channel(c[0])) + "," + std::to_string(channel(c[1])) + "," +
           std::to_string(channel(c[2])) + ")";
}

struct Range
{
    double lo = 0.0, hi = 1.0;
};

inline Range padded(double lo, double hi)
{
    if (!(hi > lo)) {
        const double w = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
        return {lo - w, hi + w};
    }
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}
} // namespace detail

// Self-contained SVG line plot. Coloured series also get one marker per vertex.
// Output depends only on the plot description, so identical input gives identical bytes.
inline std::string emit_plot(const PlotSpec &spec)
{
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    std::size_t points = 0;
    for (const auto &s : spec.series) {
        if (s.x.size() != s.y.size())
            throw ValidationError("plot series '" + s.name + "' has mismatched x and y lengths");
        if (!s.colors.empty() && s.colors.size() != s.x.size())
            throw ValidationError("plot series '" + s.name + "' has the wrong number of colours");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
            ++points;
        }
    }
    if (points == 0)
        throw ValidationError("cannot plot an empty table");

    const auto xr = detail::padded(xmin, xmax);
    const auto yr = detail::padded(ymin, ymax);
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return top + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

    static const char *palette[] = {"#1f3b73", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e", "#117a65"};
    std::string o;
    o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
         std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o += "<rect x=\"0\" y=\"0\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" fill=\"white\"/>\n";
    o += "<text x=\"" + detail::fmt("%.2f", left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         detail::escape_xml(spec.title) + "</text>\n";

    // Frame, ticks and labels.
    o += "<rect x=\"" + detail::fmt("%.2f", left) + "\" y=\"" + detail::fmt("%.2f", top) + "\" width=\"" +
         detail::fmt("%.2f", pw) + "\" height=\"" + detail::fmt("%.2f", ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    const int ticks = 5;
    for (int i = 0; i < ticks; ++i) {
        const double fx = xr.lo + (xr.hi - xr.lo) * i / (ticks - 1);
        const double fy = yr.lo + (yr.hi - yr.lo) * i / (ticks - 1);
        const double X = px(fx), Y = py(fy);
        o += "<line x1=\"" + detail::fmt("%.2f", X) + "\" y1=\"" + detail::fmt("%.2f", top + ph) + "\" x2=\"" +
             detail::fmt("%.2f", X) + "\" y2=\"" + detail::fmt("%.2f", top + ph + 5) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + detail::fmt("%.2f", X) + "\" y=\"" + detail::fmt("%.2f", top + ph + 18) +
             "\" text-anchor=\"middle\">" + detail::fmt("%.4g", fx) + "</text>\n";
        o += "<line x1=\"" + detail::fmt("%.2f", left - 5) + "\" y1=\"" + detail::fmt("%.2f", Y) + "\" x2=\"" +
             detail::fmt("%.2f", left) + "\" y2=\"" + detail::fmt("%.2f", Y) + "\" stroke=\"black\"/>\n";
        o += "<text x=\"" + detail::fmt("%.2f", left - 8) + "\" y=\"" + detail::fmt("%.2f", Y + 4) +
             "\" text-anchor=\"end\">" + detail::fmt("%.4g", fy) + "</text>\n";
    }
    o += "<text x=\"" + detail::fmt("%.2f", left + pw / 2) + "\" y=\"" + detail::fmt("%.2f", spec.height - 10.0) +
         "\" text-anchor=\"middle\">" + detail::escape_xml(spec.x_label) + "</text>\n";
    o += "<text x=\"16\" y=\"" + detail::fmt("%.2f", top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         detail::fmt("%.2f", top + ph / 2) + ")\">" + detail::escape_xml(spec.y_label) + "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto &s = spec.series[si];
        const std::string stroke = s.colors.empty() ? palette[si % 6] : "#808080";
        // Non-finite samples split the curve into separate polylines.
        std::string pts;
        auto flush = [&] {
            if (!pts.empty())
                o += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
            pts.clear();
        };
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
                flush();
                continue;
            }
            if (!pts.empty())
                pts += ' ';
            pts += detail::fmt("%.2f", px(s.x[i])) + "," + detail::fmt("%.2f", py(s.y[i]));
        }
        flush();
        if (!s.colors.empty())
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
                    continue;
                o += "<circle cx=\"" + detail::fmt("%.2f", px(s.x[i])) + "\" cy=\"" + detail::fmt("%.2f", py(s.y[i])) +
                     "\" r=\"2\" fill=\"" + detail::rgb(s.colors[i]) + "\"/>\n";
            }
        if (!s.name.empty()) {
            const double ly = top + 14.0 + 14.0 * si;
            o += "<text x=\"" + detail::fmt("%.2f", left + pw - 6) + "\" y=\"" + detail::fmt("%.2f", ly) +
                 "\" text-anchor=\"end\" fill=\"" + stroke + "\">" + detail::escape_xml(s.name) + "</text>\n";
        }
    }
    o += "</svg>\n";
    return o;
}

} // namespace omarray::io
