#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include "sdflow/errors.hpp"
#include "sdflow/geometry.hpp"

namespace sdflow {

struct SvgStyle {
    int width = 640;
    int height = 640;
    std::string stroke = "#1f5fa8";
    double stroke_width = 1.5;
    std::string title;
};

// Standalone SVG with the closed polygon. Vertex coordinates are written in
// data units inside a translate/scale group, so they can be parsed back and
// compared against the CSV snapshot verbatim.
inline std::string render_svg(const CurveState& curve, const SvgStyle& style) {
    detail::validate_curve(curve);
    double xmin = curve.nodes[0].x, xmax = xmin;
    double ymin = curve.nodes[0].y, ymax = ymin;
    for (const Vec2& p : curve.nodes) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double pad_x = 0.05 * std::max(xmax - xmin, 1e-30);
    const double pad_y = 0.05 * std::max(ymax - ymin, 1e-30);
    xmin -= pad_x;
    xmax += pad_x;
    ymin -= pad_y;
    ymax += pad_y;

    const int margin = 40;
    const double plot_w = style.width - 2.0 * margin;
    const double plot_h = style.height - 2.0 * margin;
    const double s = std::min(plot_w / (xmax - xmin), plot_h / (ymax - ymin));
    const double cx = 0.5 * (xmin + xmax);
    const double cy = 0.5 * (ymin + ymax);
    const double tx = 0.5 * style.width - s * cx;
    const double ty = 0.5 * style.height + s * cy;

    char buf[256];
    std::string out;
    out.reserve(64 * curve.size() + 1024);
    std::snprintf(buf, sizeof(buf),
                  "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" "
                  "height=\"%d\" viewBox=\"0 0 %d %d\">\n",
                  style.width, style.height, style.width, style.height);
    out += buf;
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"%g\" height=\"%g\" "
                  "fill=\"none\" stroke=\"#888\"/>\n",
                  margin, margin, plot_w, plot_h);
    out += buf;
    if (!style.title.empty())
        out += "<text x=\"" + std::to_string(style.width / 2) +
               "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"14\">" +
               style.title + "</text>\n";
    std::snprintf(buf, sizeof(buf),
                  "<g transform=\"translate(%.17g %.17g) scale(%.17g %.17g)\">\n",
                  tx, ty, s, -s);
    out += buf;
    out += "<polygon vector-effect=\"non-scaling-stroke\" fill=\"none\" stroke=\"" +
           style.stroke + "\" stroke-width=\"" + std::to_string(style.stroke_width) +
           "\" points=\"";
    for (std::size_t j = 0; j < curve.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%s%.17g,%.17g", j ? " " : "",
                      curve.nodes[j].x, curve.nodes[j].y);
        out += buf;
    }
    out += "\"/>\n</g>\n</svg>\n";
    return out;
}

inline void emit_svg(const std::string& path, const CurveState& curve,
                     const SvgStyle& style = {}) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << render_svg(curve, style);
    if (!out) throw io_error("write failed for " + path);
}

}  // namespace sdflow
