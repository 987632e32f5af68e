#pragma once

#include "layerpeel/bitmask.hpp"
#include "layerpeel/svg.hpp"

#include <string>
#include <vector>

namespace layerpeel {

inline constexpr int kDefaultResolution = 512;
/// Curve flattening tolerance, in output pixels, used for all coverage tests.
inline constexpr double kFlattenTolerancePx = 0.25;

/// Hard-edged scanline fill of polygons given in pixel coordinates. A bit is
/// set iff its pixel center is inside under `rule`. Rows use a half-open
/// crossing rule (min_y <= yc < max_y) and a crossing at x counts for every
/// center with xc >= x.
BitMask scan_fill(const std::vector<Polygon>& pixel_polygons, FillRule rule, int width, int height);

/// Coverage of one path rasterized at resolution x resolution pixels over `viewbox`.
BitMask coverage_mask(const PathShape& path, int resolution, const ViewBox& viewbox);
inline BitMask coverage_mask(const PathShape& path, int resolution) {
    return coverage_mask(path, resolution, {0.0, 0.0, static_cast<double>(resolution), static_cast<double>(resolution)});
}

/// Coverage masks of every path in paint order.
std::vector<BitMask> coverage_masks(const SvgDoc& doc, int resolution = kDefaultResolution);

/// True iff the two paths share at least one covered pixel center.
bool overlaps(const PathShape& a, const PathShape& b, const ViewBox& viewbox, int resolution = kDefaultResolution);

struct TopmostSet {
    std::vector<std::string> path_ids; // paint order
    BitMask panel_mask;                // union of their coverage
};

/// Paths that no later (higher) path overlaps. Throws EmptyDocument.
TopmostSet topmost_set(const SvgDoc& doc, int resolution = kDefaultResolution);

/// Index form over precomputed coverage masks (paint order).
std::vector<std::size_t> topmost_indices(const std::vector<BitMask>& masks);

} // namespace layerpeel
