#pragma once

#include "layerpeel/raster.hpp"
#include "layerpeel/svg.hpp"

#include <string>
#include <vector>

namespace layerpeel {

/// One connected same-color component. Rings run along pixel edges with
/// integer vertices; outer rings have positive shoelace area in y-down
/// coordinates, holes negative.
struct TracedRegion {
    ColorRGBA color;
    Polygon outer;
    std::vector<Polygon> holes;
};

enum class ColorGrouping {
    Exact,    // group by exact RGB
    Bucketed, // 3 bits per channel, snapped to the bucket's modal color
};

/// Pixels with alpha >= 128 are content. Components are 4-connected;
/// background and holes are 8-connected. Order follows scanline discovery.
std::vector<TracedRegion> trace_regions(const RasterImage& region, ColorGrouping grouping = ColorGrouping::Exact);

/// Closed-ring Douglas-Peucker, split at the two farthest-apart vertices.
/// epsilon == 0 returns the ring unchanged. Each half keeps at least its
/// farthest interior vertex so thin rings never collapse.
/// Throws DegeneratePolygon for fewer than 3 vertices.
Polygon simplify(const Polygon& ring, double epsilon = 1.0);

/// Least-squares cubic fit of a closed ring with corners at turns sharper than
/// `corner_deg`. Display-quality only.
Subpath fit_beziers(const Polygon& ring, double corner_deg = 60.0, double tolerance = 1.0);

struct VectorizeOptions {
    double epsilon = 1.0;
    ColorGrouping grouping = ColorGrouping::Exact;
    bool fit_curves = false;
};

struct VectorLayer {
    int iteration_index = 0;
    std::vector<PathShape> shapes;
};

VectorLayer vectorize(const RasterImage& region, int iteration_index, const VectorizeOptions& options = {});

/// Paints the last-peeled layer first. Layers must be ordered by
/// iteration_index ascending.
SvgDoc emit_svg(const std::vector<VectorLayer>& layers, int canvas = 512);

/// Same content as emit_svg, with one <g data-iteration="k"> per layer.
std::string emit_layered_svg_text(const std::vector<VectorLayer>& layers, int canvas = 512);

double signed_area(const Polygon& ring);

} // namespace layerpeel
