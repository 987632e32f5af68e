#pragma once

#include "layerpeel/color.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace layerpeel {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
    friend Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }
};

/// Closed polyline; the closing edge from back() to front() is implicit.
using Polygon = std::vector<Point>;

struct CubicSegment {
    Point p0, p1, p2, p3;

    friend bool operator==(const CubicSegment&, const CubicSegment&) = default;

    /// Straight segment encoded as a cubic with control points at thirds.
    static CubicSegment line(Point a, Point b);
    Point eval(double t) const;
    bool is_straight(double eps = 1e-9) const;
};

/// Closed sequence of cubics: segments[i].p3 == segments[i+1].p0 and the
/// last endpoint equals the first start point.
using Subpath = std::vector<CubicSegment>;

enum class FillRule { NonZero, EvenOdd };

struct PathShape {
    std::string id;
    ColorRGBA fill;
    FillRule fill_rule = FillRule::NonZero;
    std::vector<Subpath> subpaths;
};

struct ViewBox {
    double min_x = 0.0;
    double min_y = 0.0;
    double width = 0.0;
    double height = 0.0;

    friend bool operator==(const ViewBox&, const ViewBox&) = default;
};

/// Flat-color layered scene. paths[0] paints first (deepest); paths.back() is topmost.
struct SvgDoc {
    ViewBox viewbox;
    std::vector<PathShape> paths;

    const PathShape* find(std::string_view id) const;
    /// Copy of this document without the listed path ids; paint order is kept.
    SvgDoc without(const std::vector<std::string>& ids) const;
    /// Copy of this document keeping only the listed path ids; paint order is kept.
    SvgDoc only(const std::vector<std::string>& ids) const;
};

/// Checks the structural invariants (closed subpaths, finite coordinates,
/// unique ids, positive viewbox); throws std::invalid_argument on violation.
void validate(const SvgDoc& doc);

struct ParseOptions {
    /// Flattening tolerance used to outline strokes, expressed in pixels of
    /// the normalized canvas; converted to document units internally.
    double stroke_tolerance_px = 0.25;
    int normalized_size = 512;
};

/// Parses an SVG 1.1 flat-color subset into canonical cubic paths. Groups are
/// flattened, transforms baked, primitives converted, strokes outlined.
/// Throws MalformedXml or UnsupportedFeature.
SvgDoc parse_svg(std::string_view text, const ParseOptions& options = {});

/// Uniformly rescales and centers the document onto (0, 0, target, target).
SvgDoc normalize_viewbox(const SvgDoc& doc, int target = 512);

/// True when the document is kept (path count <= max_paths).
bool filter_by_path_count(const SvgDoc& doc, std::size_t max_paths = 30);

/// Adaptive subdivision of every subpath into closed polygons whose maximum
/// deviation from the curve is at most `tolerance` (same units as the path).
std::vector<Polygon> flatten_path(const PathShape& path, double tolerance);

/// Canonical emission: only <path> elements, absolute M/C/Z commands,
/// three-decimal coordinates.
std::string emit_svg_text(const SvgDoc& doc);

/// Single `<path .../>` element in canonical form (no indentation or newline).
std::string path_element(const PathShape& path);
/// `<svg ...>` opening tag carrying the viewBox.
std::string svg_open_tag(const ViewBox& viewbox);
std::string xml_escape(std::string_view text);

/// Applies an affine map (a c e / b d f) to every control point.
struct Affine {
    double a = 1, b = 0, c = 0, d = 1, e = 0, f = 0;

    Point apply(Point p) const { return {a * p.x + c * p.y + e, b * p.x + d * p.y + f}; }
    Affine then(const Affine& next) const;
    static Affine translate(double tx, double ty) { return {1, 0, 0, 1, tx, ty}; }
    static Affine scale(double sx, double sy) { return {sx, 0, 0, sy, 0, 0}; }
};

PathShape transformed(const PathShape& path, const Affine& m);

/// Rounds to the 0.001-unit grid used by canonical emission.
double quantize_coordinate(double v);
/// Copy with every control point on the emission grid. Coverage is always
/// computed on quantized geometry so emitted text re-renders identically.
PathShape quantized(const PathShape& path);

} // namespace layerpeel
