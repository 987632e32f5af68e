#include "layerpeel/caption.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace layerpeel {

namespace {

struct Box {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    void add(Point p) {
        x0 = std::min(x0, p.x);
        y0 = std::min(y0, p.y);
        x1 = std::max(x1, p.x);
        y1 = std::max(y1, p.y);
    }
    double size() const { return std::max(x1 - x0, y1 - y0); }
};

Box control_box(const PathShape& path) {
    Box b;
    for (const auto& sp : path.subpaths)
        for (const auto& s : sp) {
            b.add(s.p0);
            b.add(s.p1);
            b.add(s.p2);
            b.add(s.p3);
        }
    return b;
}

std::vector<Point> corner_vertices(const Subpath& sp) {
    std::vector<Point> v;
    for (const auto& s : sp)
        if (v.empty() || std::hypot(s.p0.x - v.back().x, s.p0.y - v.back().y) > 1e-9)
            v.push_back(s.p0);
    if (v.size() > 1 && std::hypot(v.front().x - v.back().x, v.front().y - v.back().y) <= 1e-9)
        v.pop_back();
    // Drop collinear vertices until stable.
    bool changed = true;
    while (changed && v.size() >= 3) {
        changed = false;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point a = v[(i + v.size() - 1) % v.size()], b = v[i], c = v[(i + 1) % v.size()];
            const Point u = b - a, w = c - b;
            const double lu = std::hypot(u.x, u.y), lw = std::hypot(w.x, w.y);
            if (lu == 0 || lw == 0 || std::abs(u.x * w.y - u.y * w.x) / (lu * lw) < 1e-3) {
                v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return v;
}

std::string classify_polygon(const std::vector<Point>& v) {
    if (v.size() < 3)
        return "shape";
    if (v.size() == 3)
        return "triangle";
    if (v.size() == 4) {
        for (std::size_t i = 0; i < 4; ++i) {
            const Point u = v[i] - v[(i + 3) % 4], w = v[(i + 1) % 4] - v[i];
            const double c = (u.x * w.x + u.y * w.y) / (std::hypot(u.x, u.y) * std::hypot(w.x, w.y));
            if (std::abs(c) > 0.02)
                return "polygon";
        }
        return "rectangle";
    }
    return "polygon";
}

std::string classify_curved(const PathShape& path, double size) {
    const auto polys = flatten_path(path, std::max(size * 0.002, 1e-6));
    const Polygon& p = polys.at(0);
    if (p.size() < 3)
        return "shape";
    // Area, centroid and central second moments of the filled polygon.
    double a = 0, cx = 0, cy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Point s = p[i], t = p[(i + 1) % p.size()];
        const double c = s.x * t.y - t.x * s.y;
        a += c;
        cx += (s.x + t.x) * c;
        cy += (s.y + t.y) * c;
        sxx += (s.x * s.x + s.x * t.x + t.x * t.x) * c;
        syy += (s.y * s.y + s.y * t.y + t.y * t.y) * c;
        sxy += (s.x * t.y + 2 * s.x * s.y + 2 * t.x * t.y + t.x * s.y) * c;
    }
    a *= 0.5;
    if (std::abs(a) < 1e-12)
        return "shape";
    cx /= 6 * a;
    cy /= 6 * a;
    const double ixx = sxx / (12 * a) - cx * cx;
    const double iyy = syy / (12 * a) - cy * cy;
    const double ixy = sxy / (24 * a) - cx * cy;
    const double tr = ixx + iyy, det = ixx * iyy - ixy * ixy;
    const double disc = std::sqrt(std::max(0.0, tr * tr / 4 - det));
    const double l1 = tr / 2 + disc, l2 = tr / 2 - disc;
    if (l2 <= 0)
        return "shape";
    // A filled ellipse with semi-axes (ra, rb) has axis variances ra^2/4, rb^2/4.
    const double ra = 2 * std::sqrt(l1), rb = 2 * std::sqrt(l2);
    const double theta = 0.5 * std::atan2(2 * ixy, ixx - iyy);
    const double ct = std::cos(theta), st = std::sin(theta);
    double worst = 0;
    for (const auto& q : p) {
        const double dx = q.x - cx, dy = q.y - cy;
        const double u = dx * ct + dy * st, v = -dx * st + dy * ct;
        worst = std::max(worst, std::abs(std::sqrt((u / ra) * (u / ra) + (v / rb) * (v / rb)) - 1));
    }
    if (worst > 0.06 || std::abs(std::abs(a) / (std::numbers::pi * ra * rb) - 1) > 0.03)
        return "shape";
    return ra / rb < 1.1 ? "circle" : "ellipse";
}

std::string plural(const std::string& cls) {
    if (cls == "ellipse")
        return "ellipses";
    return cls + "s";
}

} // namespace

std::string shape_class(const PathShape& path) {
    if (path.subpaths.size() != 1 || path.subpaths[0].empty())
        return "shape";
    const Box box = control_box(path);
    const double eps = std::max(box.size(), 1e-9) * 1e-6;
    bool straight = true;
    for (const auto& s : path.subpaths[0])
        straight = straight && s.is_straight(eps);
    if (straight)
        return classify_polygon(corner_vertices(path.subpaths[0]));
    return classify_curved(path, box.size());
}

std::string position_word(const PathShape& path, const ViewBox& vb) {
    Box b;
    for (const auto& poly : flatten_path(path, std::max(vb.width, vb.height) * 1e-3))
        for (const auto& p : poly)
            b.add(p);
    if (b.x1 < b.x0)
        return "center";
    const double fx = ((b.x0 + b.x1) / 2 - vb.min_x) / vb.width;
    const double fy = ((b.y0 + b.y1) / 2 - vb.min_y) / vb.height;
    const int col = std::clamp(static_cast<int>(std::floor(fx * 3)), 0, 2);
    const int row = std::clamp(static_cast<int>(std::floor(fy * 3)), 0, 2);
    static const char* const kWords[3][3] = {{"top-left", "top", "top-right"},
                                             {"left", "center", "right"},
                                             {"bottom-left", "bottom", "bottom-right"}};
    return kWords[row][col];
}

std::string path_phrase(const PathShape& path, const ViewBox& vb) {
    return "the " + nearest_css_color_name(path.fill) + " " + shape_class(path) + " at " + position_word(path, vb);
}

std::string geometric_caption(const std::vector<PathShape>& paths, const ViewBox& vb) {
    std::map<std::pair<std::string, std::string>, std::size_t> counts;
    std::vector<std::pair<std::string, std::string>> keys;
    for (const auto& p : paths) {
        keys.emplace_back(nearest_css_color_name(p.fill), shape_class(p));
        ++counts[keys.back()];
    }
    std::vector<std::string> phrases;
    std::map<std::pair<std::string, std::string>, bool> emitted;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& key = keys[i];
        if (counts[key] >= 3) {
            if (!emitted[key])
                phrases.push_back("the " + key.first + " " + plural(key.second));
            emitted[key] = true;
            continue;
        }
        phrases.push_back("the " + key.first + " " + key.second + " at " + position_word(paths[i], vb));
    }
    std::string out;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
        if (i)
            out += ", ";
        out += phrases[i];
    }
    return out;
}

} // namespace layerpeel
