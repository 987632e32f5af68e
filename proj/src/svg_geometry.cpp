#include "layerpeel/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace layerpeel {

CubicSegment CubicSegment::line(Point a, Point b) {
    return {a, a + (b - a) * (1.0 / 3.0), a + (b - a) * (2.0 / 3.0), b};
}

Point CubicSegment::eval(double t) const {
    const double u = 1.0 - t;
    const double b0 = u * u * u;
    const double b1 = 3 * u * u * t;
    const double b2 = 3 * u * t * t;
    const double b3 = t * t * t;
    return {b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
            b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y};
}

namespace {

double distance_to_segment(Point p, Point a, Point b) {
    const Point ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
    const Point q = a + ab * t;
    return std::hypot(p.x - q.x, p.y - q.y);
}

constexpr int kMaxSubdivisionDepth = 24;

// The curve lies in the convex hull of its control points and distance to a
// segment is convex, so the control-point distance bounds the curve's
// deviation from the chord (and vice versa via the projection argument).
void subdivide(const CubicSegment& s, double tolerance, int depth, Polygon& out) {
    const double d = std::max(distance_to_segment(s.p1, s.p0, s.p3),
                              distance_to_segment(s.p2, s.p0, s.p3));
    if (d <= tolerance || depth >= kMaxSubdivisionDepth) {
        out.push_back(s.p3);
        return;
    }
    const Point p01 = (s.p0 + s.p1) * 0.5;
    const Point p12 = (s.p1 + s.p2) * 0.5;
    const Point p23 = (s.p2 + s.p3) * 0.5;
    const Point p012 = (p01 + p12) * 0.5;
    const Point p123 = (p12 + p23) * 0.5;
    const Point mid = (p012 + p123) * 0.5;
    subdivide({s.p0, p01, p012, mid}, tolerance, depth + 1, out);
    subdivide({mid, p123, p23, s.p3}, tolerance, depth + 1, out);
}

std::string format_number(double v) {
    char buf[64];
    // Printing the quantized value keeps text and quantized() in agreement.
    std::snprintf(buf, sizeof buf, "%.3f", quantize_coordinate(v));
    std::string s(buf);
    while (!s.empty() && s.back() == '0')
        s.pop_back();
    if (!s.empty() && s.back() == '.')
        s.pop_back();
    if (s == "-0")
        s = "0";
    return s;
}

} // namespace

bool CubicSegment::is_straight(double eps) const {
    return distance_to_segment(p1, p0, p3) <= eps && distance_to_segment(p2, p0, p3) <= eps;
}

Affine Affine::then(const Affine& n) const {
    // n * this
    return {n.a * a + n.c * b,         n.b * a + n.d * b,         n.a * c + n.c * d,
            n.b * c + n.d * d,         n.a * e + n.c * f + n.e,   n.b * e + n.d * f + n.f};
}

double quantize_coordinate(double v) {
    const double q = std::round(v * 1000.0) / 1000.0;
    return q == 0.0 ? 0.0 : q;
}

PathShape quantized(const PathShape& path) {
    PathShape out = path;
    for (auto& sp : out.subpaths)
        for (auto& seg : sp)
            for (Point* p : {&seg.p0, &seg.p1, &seg.p2, &seg.p3})
                *p = {quantize_coordinate(p->x), quantize_coordinate(p->y)};
    return out;
}

PathShape transformed(const PathShape& path, const Affine& m) {
    PathShape out = path;
    for (auto& sp : out.subpaths)
        for (auto& seg : sp) {
            seg.p0 = m.apply(seg.p0);
            seg.p1 = m.apply(seg.p1);
            seg.p2 = m.apply(seg.p2);
            seg.p3 = m.apply(seg.p3);
        }
    return out;
}

const PathShape* SvgDoc::find(std::string_view id) const {
    for (const auto& p : paths)
        if (p.id == id)
            return &p;
    return nullptr;
}

SvgDoc SvgDoc::without(const std::vector<std::string>& ids) const {
    std::unordered_set<std::string> drop(ids.begin(), ids.end());
    SvgDoc out{viewbox, {}};
    for (const auto& p : paths)
        if (!drop.count(p.id))
            out.paths.push_back(p);
    return out;
}

SvgDoc SvgDoc::only(const std::vector<std::string>& ids) const {
    std::unordered_set<std::string> keep(ids.begin(), ids.end());
    SvgDoc out{viewbox, {}};
    for (const auto& p : paths)
        if (keep.count(p.id))
            out.paths.push_back(p);
    return out;
}

void validate(const SvgDoc& doc) {
    if (!(doc.viewbox.width > 0.0) || !(doc.viewbox.height > 0.0))
        throw std::invalid_argument("viewbox must have positive size");
    std::unordered_set<std::string> ids;
    for (const auto& p : doc.paths) {
        if (!ids.insert(p.id).second)
            throw std::invalid_argument("duplicate path id: " + p.id);
        if (p.subpaths.empty())
            throw std::invalid_argument("path without subpaths: " + p.id);
        for (const auto& sp : p.subpaths) {
            if (sp.empty())
                throw std::invalid_argument("empty subpath in " + p.id);
            for (std::size_t i = 0; i < sp.size(); ++i) {
                const auto& s = sp[i];
                for (Point q : {s.p0, s.p1, s.p2, s.p3})
                    if (!std::isfinite(q.x) || !std::isfinite(q.y))
                        throw std::invalid_argument("non-finite coordinate in " + p.id);
                const Point next = sp[(i + 1) % sp.size()].p0;
                if (!(s.p3 == next))
                    throw std::invalid_argument("subpath not closed/continuous in " + p.id);
            }
        }
    }
}

SvgDoc normalize_viewbox(const SvgDoc& doc, int target) {
    if (target <= 0)
        throw std::invalid_argument("normalize_viewbox: target must be positive");
    const ViewBox& vb = doc.viewbox;
    const double t = static_cast<double>(target);
    const double s = t / std::max(vb.width, vb.height);
    const double ox = (t - vb.width * s) / 2.0 - vb.min_x * s;
    const double oy = (t - vb.height * s) / 2.0 - vb.min_y * s;
    const Affine m{s, 0, 0, s, ox, oy};

    SvgDoc out;
    out.viewbox = {0.0, 0.0, t, t};
    out.paths.reserve(doc.paths.size());
    for (const auto& p : doc.paths)
        out.paths.push_back(transformed(p, m));
    return out;
}

bool filter_by_path_count(const SvgDoc& doc, std::size_t max_paths) {
    return doc.paths.size() <= max_paths;
}

std::vector<Polygon> flatten_path(const PathShape& path, double tolerance) {
    if (!(tolerance > 0.0))
        throw std::invalid_argument("flatten_path: tolerance must be positive");
    std::vector<Polygon> out;
    out.reserve(path.subpaths.size());
    for (const auto& sp : path.subpaths) {
        if (sp.empty())
            continue;
        Polygon poly;
        poly.push_back(sp.front().p0);
        for (const auto& seg : sp)
            subdivide(seg, tolerance, 0, poly);
        // Closing vertex duplicates the start; the edge back is implicit.
        if (poly.size() > 1 && poly.back() == poly.front())
            poly.pop_back();
        out.push_back(std::move(poly));
    }
    return out;
}

std::string xml_escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char ch : text) {
        switch (ch) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

std::string path_element(const PathShape& p) {
    std::ostringstream os;
    os << "<path id=\"" << xml_escape(p.id) << "\" fill=\"" << to_hex(p.fill) << "\" fill-rule=\""
       << (p.fill_rule == FillRule::EvenOdd ? "evenodd" : "nonzero") << "\" d=\"";
    bool first = true;
    for (const auto& sp : p.subpaths) {
        if (sp.empty())
            continue;
        if (!first)
            os << ' ';
        first = false;
        os << "M" << format_number(sp.front().p0.x) << ' ' << format_number(sp.front().p0.y);
        for (const auto& s : sp)
            os << " C" << format_number(s.p1.x) << ' ' << format_number(s.p1.y) << ' '
               << format_number(s.p2.x) << ' ' << format_number(s.p2.y) << ' '
               << format_number(s.p3.x) << ' ' << format_number(s.p3.y);
        os << " Z";
    }
    os << "\"/>";
    return os.str();
}

std::string svg_open_tag(const ViewBox& vb) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << format_number(vb.min_x) << ' '
       << format_number(vb.min_y) << ' ' << format_number(vb.width) << ' ' << format_number(vb.height)
       << "\">";
    return os.str();
}

std::string emit_svg_text(const SvgDoc& doc) {
    std::string out = svg_open_tag(doc.viewbox) + "\n";
    for (const auto& p : doc.paths)
        out += "  " + path_element(p) + "\n";
    out += "</svg>\n";
    return out;
}

} // namespace layerpeel
