#pragma once

#include "layerpeel/svg.hpp"

#include <string>
#include <vector>

namespace layerpeel {

/// Builders for common flat-color primitives, in document units.
PathShape make_rect(std::string id, double x, double y, double w, double h, ColorRGBA fill);
/// Four-arc cubic approximation (kappa = 0.5522847498).
PathShape make_ellipse(std::string id, double cx, double cy, double rx, double ry, ColorRGBA fill);
inline PathShape make_circle(std::string id, double cx, double cy, double r, ColorRGBA fill) {
    return make_ellipse(std::move(id), cx, cy, r, r, fill);
}
PathShape make_polygon(std::string id, const Polygon& vertices, ColorRGBA fill,
                       FillRule rule = FillRule::NonZero);
/// One path whose subpaths are the given rings.
PathShape make_compound(std::string id, const std::vector<Polygon>& rings, ColorRGBA fill, FillRule rule);

} // namespace layerpeel
