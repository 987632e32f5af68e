#pragma once

#include "layerpeel/svg.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace layerpeel::testing {

struct RandomDocOptions {
    int min_paths = 3;
    int max_paths = 15;
    int canvas = 512;
    // Colors drawn without replacement from a palette whose members differ
    // pairwise (and from white) by more than 20 in some channel.
    bool contrast_colors = true;
};

/// Rects, circles and triangles with integer coordinates in random z-order.
SvgDoc random_doc(std::uint64_t seed, const RandomDocOptions& options = {});

/// 64 colors on the {0, 64, 128, 192} lattice.
const std::vector<ColorRGBA>& contrast_palette();

/// Per-pixel point-in-polygon over the flattened outline, restricted to the
/// path's bounding box. Row-major, one byte per pixel.
std::vector<std::uint8_t> oracle_coverage(const PathShape& path, int resolution, const ViewBox& viewbox);

/// Painter's render into a path-index buffer; p is topmost iff no pixel of p
/// is won by a higher path.
std::vector<std::string> oracle_topmost(const SvgDoc& doc, int resolution);

} // namespace layerpeel::testing

namespace layerpeel::testing {

/// Text of a shipped prompt asset.
std::string read_prompt_asset(const std::string& name);

/// The worked example response embedded in the graph_construct prompt,
/// from <image_description> through </caption>.
std::string cat_example_response();

/// Contents of the <layer_graph> block of that example.
std::string cat_example_graph_block();

} // namespace layerpeel::testing
