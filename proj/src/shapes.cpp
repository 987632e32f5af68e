#include "layerpeel/shapes.hpp"

namespace layerpeel {

namespace {

constexpr double kKappa = 0.5522847498307936;

Subpath ring(const Polygon& v) {
    Subpath sp;
    for (std::size_t i = 0; i < v.size(); ++i)
        sp.push_back(CubicSegment::line(v[i], v[(i + 1) % v.size()]));
    return sp;
}

} // namespace

PathShape make_rect(std::string id, double x, double y, double w, double h, ColorRGBA fill) {
    return make_polygon(std::move(id), {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}, fill);
}

PathShape make_ellipse(std::string id, double cx, double cy, double rx, double ry, ColorRGBA fill) {
    const double kx = rx * kKappa, ky = ry * kKappa;
    const Point r{cx + rx, cy}, b{cx, cy + ry}, l{cx - rx, cy}, t{cx, cy - ry};
    Subpath sp{
        {r, {r.x, r.y + ky}, {b.x + kx, b.y}, b},
        {b, {b.x - kx, b.y}, {l.x, l.y + ky}, l},
        {l, {l.x, l.y - ky}, {t.x - kx, t.y}, t},
        {t, {t.x + kx, t.y}, {r.x, r.y - ky}, r},
    };
    PathShape p;
    p.id = std::move(id);
    p.fill = fill;
    p.subpaths.push_back(std::move(sp));
    return p;
}

PathShape make_polygon(std::string id, const Polygon& vertices, ColorRGBA fill, FillRule rule) {
    return make_compound(std::move(id), {vertices}, fill, rule);
}

PathShape make_compound(std::string id, const std::vector<Polygon>& rings, ColorRGBA fill, FillRule rule) {
    PathShape p;
    p.id = std::move(id);
    p.fill = fill;
    p.fill_rule = rule;
    for (const auto& r : rings)
        p.subpaths.push_back(ring(r));
    return p;
}

} // namespace layerpeel
