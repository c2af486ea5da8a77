#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sdflow/errors.hpp"
#include "sdflow/vec2.hpp"

namespace sdflow {

// Closed polygonal curve with M periodic nodes, counter-clockwise, together
// with the reference partition 0 = xi_0 < ... < xi_M = 1 of the periodic
// unit interval (uniform by default).
struct CurveState {
    std::vector<Vec2> nodes;
    std::vector<double> partition;

    CurveState() = default;
    explicit CurveState(std::vector<Vec2> pts) : nodes(std::move(pts)) {
        partition = uniform_partition(nodes.size());
    }
    CurveState(std::vector<Vec2> pts, std::vector<double> xi)
        : nodes(std::move(pts)), partition(std::move(xi)) {}

    std::size_t size() const { return nodes.size(); }
    // Width of element e (nodes e -> e+1 mod M), 0-based.
    double width(std::size_t e) const { return partition[e + 1] - partition[e]; }

    static std::vector<double> uniform_partition(std::size_t m) {
        std::vector<double> xi(m + 1);
        for (std::size_t j = 0; j <= m; ++j)
            xi[j] = static_cast<double>(j) / static_cast<double>(m);
        return xi;
    }
};

// Per-element frame: tangent from x_{j-1} to x_j, normal = tangent^perp
// (inward for counter-clockwise curves), Euclidean edge length, and the
// per-element constant derivative edge_vector = (x_j - x_{j-1}) / w_j.
struct EdgeFrame {
    Vec2 tangent;
    Vec2 normal;
    double length = 0.0;
    Vec2 edge_vector;
};

inline double polygon_area(const CurveState& curve);

namespace detail {

inline double mean_edge_length(const CurveState& curve) {
    double total = 0.0;
    const std::size_t m = curve.size();
    for (std::size_t j = 0; j < m; ++j)
        total += (curve.nodes[(j + 1) % m] - curve.nodes[j]).norm();
    return total / static_cast<double>(m);
}

inline double degeneracy_threshold(const CurveState& curve) {
    return 1e-12 * mean_edge_length(curve);
}

inline void validate_curve(const CurveState& curve) {
    const std::size_t m = curve.size();
    if (m < 3)
        throw invalid_curve_error("curve needs at least 3 nodes, got " +
                                  std::to_string(m));
    if (curve.partition.size() != m + 1)
        throw invalid_curve_error("partition size must be M+1");
    if (curve.partition.front() != 0.0 || curve.partition.back() != 1.0)
        throw invalid_curve_error("partition must span [0,1]");
    for (std::size_t j = 0; j < m; ++j) {
        if (!curve.nodes[j].finite())
            throw invalid_curve_error("non-finite node at index " +
                                      std::to_string(j));
        if (curve.partition[j + 1] <= curve.partition[j])
            throw invalid_curve_error("partition not strictly increasing at " +
                                      std::to_string(j));
    }
    const double eps = degeneracy_threshold(curve);
    for (std::size_t j = 0; j < m; ++j) {
        const double len = (curve.nodes[(j + 1) % m] - curve.nodes[j]).norm();
        if (!(len > eps))
            throw invalid_curve_error("repeated or near-coincident nodes on edge " +
                                      std::to_string(j));
    }
}

}  // namespace detail

inline double polygon_area(const CurveState& curve) {
    detail::validate_curve(curve);
    const std::size_t m = curve.size();
    double twice = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        twice += curve.nodes[j].cross(curve.nodes[(j + 1) % m]);
    return 0.5 * twice;
}

inline double perimeter(const CurveState& curve) {
    detail::validate_curve(curve);
    const std::size_t m = curve.size();
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        total += (curve.nodes[(j + 1) % m] - curve.nodes[j]).norm();
    return total;
}

// Mesh distribution function Psi = max edge length / min edge length, >= 1.
inline double mesh_ratio(const CurveState& curve) {
    detail::validate_curve(curve);
    const std::size_t m = curve.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double len = (curve.nodes[(j + 1) % m] - curve.nodes[j]).norm();
        lo = std::min(lo, len);
        hi = std::max(hi, len);
    }
    return hi / lo;
}

inline std::vector<EdgeFrame> edge_frames(const CurveState& curve) {
    const std::size_t m = curve.size();
    if (m < 3)
        throw invalid_curve_error("curve needs at least 3 nodes");
    const double eps = detail::degeneracy_threshold(curve);
    std::vector<EdgeFrame> frames(m);
    for (std::size_t e = 0; e < m; ++e) {
        const Vec2 chord = curve.nodes[(e + 1) % m] - curve.nodes[e];
        const double len = chord.norm();
        if (!(len > eps))
            throw degenerate_edge_error("edge " + std::to_string(e) +
                                            " is degenerate",
                                        static_cast<long>(e));
        EdgeFrame& f = frames[e];
        f.tangent = chord / len;
        f.normal = f.tangent.perp();
        f.length = len;
        f.edge_vector = chord / curve.width(e);
    }
    return frames;
}

// Reverses traversal order in place, keeping node 0 anchored, so that a
// clockwise input becomes counter-clockwise. Element widths reverse too.
inline void reverse_orientation(CurveState& curve) {
    const std::size_t m = curve.size();
    std::reverse(curve.nodes.begin() + 1, curve.nodes.end());
    std::vector<double> xi(m + 1);
    xi[0] = 0.0;
    for (std::size_t e = 0; e < m; ++e)
        xi[e + 1] = xi[e] + curve.width(m - 1 - e);
    xi[m] = 1.0;
    curve.partition = std::move(xi);
}

inline void normalize_orientation(CurveState& curve) {
    if (polygon_area(curve) < 0.0) reverse_orientation(curve);
}

inline CurveState make_ellipse(double a, double b, std::size_t m) {
    if (!(a > 0.0) || !(b > 0.0))
        throw invalid_parameter_error("ellipse semi-axes must be positive");
    if (m < 3) throw invalid_parameter_error("need at least 3 nodes");
    std::vector<Vec2> pts(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(j) /
                          static_cast<double>(m);
        pts[j] = {a * std::cos(th), b * std::sin(th)};
    }
    return CurveState(std::move(pts));
}

inline CurveState make_flower(double amplitude, int frequency, std::size_t m) {
    if (m < 3) throw invalid_parameter_error("need at least 3 nodes");
    std::vector<Vec2> pts(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double th = 2.0 * std::numbers::pi * static_cast<double>(j) /
                          static_cast<double>(m);
        const double r = 1.0 + amplitude * std::sin(frequency * th);
        if (!(r > 0.0))
            throw invalid_parameter_error(
                "flower radius non-positive at sample " + std::to_string(j));
        pts[j] = {r * std::cos(th), r * std::sin(th)};
    }
    return CurveState(std::move(pts));
}

// Samples a 2pi-periodic parametric curve at m points equidistributed in
// arclength (node 0 at theta = 0). The benchmark figures start from meshes
// with mesh ratio 1, which uniform-angle sampling does not give on
// non-circular shapes. Arclength is inverted on a dense chord table; nodes
// are then evaluated on the true curve.
template <class F>
CurveState sample_arclength(F&& point, std::size_t m) {
    if (m < 3) throw invalid_parameter_error("need at least 3 nodes");
    const std::size_t dense = std::max<std::size_t>(1 << 16, 256 * m);
    const double dth = 2.0 * std::numbers::pi / static_cast<double>(dense);
    std::vector<double> cum(dense + 1, 0.0);
    Vec2 prev = point(0.0);
    for (std::size_t i = 1; i <= dense; ++i) {
        const Vec2 cur = point(static_cast<double>(i) * dth);
        cum[i] = cum[i - 1] + (cur - prev).norm();
        prev = cur;
    }
    const double total = cum[dense];
    if (!(total > 0.0)) throw invalid_parameter_error("curve has zero length");

    std::vector<Vec2> pts(m);
    std::size_t i = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const double target =
            total * static_cast<double>(k) / static_cast<double>(m);
        while (i + 1 < dense && cum[i + 1] < target) ++i;
        const double seg = cum[i + 1] - cum[i];
        const double frac = seg > 0.0 ? (target - cum[i]) / seg : 0.0;
        pts[k] = point((static_cast<double>(i) + frac) * dth);
    }
    return CurveState(std::move(pts));
}

inline CurveState make_ellipse_arclength(double a, double b, std::size_t m) {
    if (!(a > 0.0) || !(b > 0.0))
        throw invalid_parameter_error("ellipse semi-axes must be positive");
    return sample_arclength(
        [a, b](double th) {
            return Vec2{a * std::cos(th), b * std::sin(th)};
        },
        m);
}

inline CurveState make_flower_arclength(double amplitude, int frequency,
                                        std::size_t m) {
    return sample_arclength(
        [amplitude, frequency](double th) {
            const double r = 1.0 + amplitude * std::sin(frequency * th);
            if (!(r > 0.0))
                throw invalid_parameter_error("flower radius non-positive");
            return Vec2{r * std::cos(th), r * std::sin(th)};
        },
        m);
}

inline void write_curve_csv(const std::string& path, const CurveState& curve) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out << "x,y\n";
    char buf[80];
    for (const Vec2& p : curve.nodes) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.x, p.y);
        out << buf;
    }
    if (!out) throw io_error("write failed for " + path);
}

// Reads a node list (header `x,y`, closure implied) and normalizes the
// orientation to counter-clockwise.
inline CurveState read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty curve file " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "x,y")
        throw io_error("expected header 'x,y' in " + path + ", got '" + line + "'");
    std::vector<Vec2> pts;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw io_error(path + ":" + std::to_string(row) + ": missing comma");
        std::size_t used = 0;
        Vec2 p;
        try {
            p.x = std::stod(line.substr(0, comma), &used);
            p.y = std::stod(line.substr(comma + 1), &used);
        } catch (const std::exception&) {
            throw io_error(path + ":" + std::to_string(row) + ": bad number");
        }
        if (!p.finite())
            throw io_error(path + ":" + std::to_string(row) + ": non-finite node");
        pts.push_back(p);
    }
    CurveState curve(std::move(pts));
    detail::validate_curve(curve);
    normalize_orientation(curve);
    return curve;
}

}  // namespace sdflow
