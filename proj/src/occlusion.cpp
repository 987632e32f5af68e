#include "layerpeel/occlusion.hpp"

#include "layerpeel/error.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace layerpeel {

namespace {

struct Crossing {
    int row;
    double x;
    int dir;
};

std::vector<Polygon> to_pixel_polygons(const PathShape& path, int resolution, const ViewBox& vb) {
    const double sx = resolution / vb.width;
    const double sy = resolution / vb.height;
    const double tol = kFlattenTolerancePx / std::max(sx, sy);
    auto polys = flatten_path(quantized(path), tol);
    for (auto& poly : polys)
        for (auto& p : poly)
            p = {(p.x - vb.min_x) * sx, (p.y - vb.min_y) * sy};
    return polys;
}

} // namespace

BitMask scan_fill(const std::vector<Polygon>& polygons, FillRule rule, int width, int height) {
    BitMask mask(width, height);
    std::vector<Crossing> crossings;
    for (const auto& poly : polygons) {
        const std::size_t n = poly.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point a = poly[i];
            const Point b = poly[(i + 1) % n];
            if (a.y == b.y)
                continue;
            const double ylo = std::min(a.y, b.y);
            const double yhi = std::max(a.y, b.y);
            // Rows whose center yc = row + 0.5 satisfies ylo <= yc < yhi.
            const int r0 = std::max(0, static_cast<int>(std::ceil(ylo - 0.5)));
            const int r1 = std::min(height, static_cast<int>(std::ceil(yhi - 0.5)));
            const int dir = b.y > a.y ? 1 : -1;
            for (int r = r0; r < r1; ++r) {
                const double yc = r + 0.5;
                const double x = a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y);
                crossings.push_back({r, x, dir});
            }
        }
    }
    std::sort(crossings.begin(), crossings.end(), [](const Crossing& l, const Crossing& r) {
        return l.row != r.row ? l.row < r.row : l.x < r.x;
    });
    std::size_t i = 0;
    while (i < crossings.size()) {
        const int row = crossings[i].row;
        std::size_t j = i;
        while (j < crossings.size() && crossings[j].row == row)
            ++j;
        int winding = 0;
        for (std::size_t k = i; k + 1 < j; ++k) {
            winding += crossings[k].dir;
            const bool inside = rule == FillRule::NonZero ? winding != 0 : (winding & 1) != 0;
            if (!inside)
                continue;
            // Centers xc = px + 0.5 with x_k <= xc < x_{k+1}.
            const double xa = crossings[k].x;
            const double xb = crossings[k + 1].x;
            const double pa = std::ceil(xa - 0.5);
            const double pb = std::ceil(xb - 0.5);
            const int px0 = static_cast<int>(std::clamp(pa, 0.0, static_cast<double>(width)));
            const int px1 = static_cast<int>(std::clamp(pb, 0.0, static_cast<double>(width)));
            mask.fill_span(row, px0, px1);
        }
        i = j;
    }
    return mask;
}

BitMask coverage_mask(const PathShape& path, int resolution, const ViewBox& viewbox) {
    if (resolution <= 0)
        throw std::invalid_argument("coverage_mask: resolution must be positive");
    return scan_fill(to_pixel_polygons(path, resolution, viewbox), path.fill_rule, resolution, resolution);
}

std::vector<BitMask> coverage_masks(const SvgDoc& doc, int resolution) {
    std::vector<BitMask> masks;
    masks.reserve(doc.paths.size());
    for (const auto& p : doc.paths)
        masks.push_back(coverage_mask(p, resolution, doc.viewbox));
    return masks;
}

bool overlaps(const PathShape& a, const PathShape& b, const ViewBox& viewbox, int resolution) {
    return coverage_mask(a, resolution, viewbox).intersects(coverage_mask(b, resolution, viewbox));
}

std::vector<std::size_t> topmost_indices(const std::vector<BitMask>& masks) {
    std::vector<std::size_t> out;
    if (masks.empty())
        return out;
    // Union of everything strictly above index i, accumulated top-down.
    BitMask above(masks.front().width(), masks.front().height());
    std::vector<bool> top(masks.size(), false);
    for (std::size_t k = masks.size(); k-- > 0;) {
        top[k] = !masks[k].intersects(above);
        above |= masks[k];
    }
    for (std::size_t k = 0; k < masks.size(); ++k)
        if (top[k])
            out.push_back(k);
    return out;
}

TopmostSet topmost_set(const SvgDoc& doc, int resolution) {
    if (doc.paths.empty())
        throw EmptyDocument("topmost_set requires at least one path");
    const auto masks = coverage_masks(doc, resolution);
    TopmostSet out;
    out.panel_mask = BitMask(resolution, resolution);
    for (std::size_t k : topmost_indices(masks)) {
        out.path_ids.push_back(doc.paths[k].id);
        out.panel_mask |= masks[k];
    }
    return out;
}

} // namespace layerpeel
