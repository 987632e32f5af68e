#pragma once

#include "layerpeel/svg.hpp"

#include <string>
#include <vector>

namespace layerpeel {

/// circle | ellipse | rectangle | triangle | polygon | shape
std::string shape_class(const PathShape& path);

/// top-left, top, top-right, left, center, right, bottom-left, bottom, bottom-right
std::string position_word(const PathShape& path, const ViewBox& viewbox);

/// "the <color> <class> at <position>"
std::string path_phrase(const PathShape& path, const ViewBox& viewbox);

/// Comma-separated phrases in paint order; three or more paths sharing color
/// name and class collapse to one plural phrase ("the blue rectangles").
std::string geometric_caption(const std::vector<PathShape>& paths, const ViewBox& viewbox);

} // namespace layerpeel
