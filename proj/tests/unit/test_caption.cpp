#include "layerpeel/caption.hpp"
#include "layerpeel/shapes.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace layerpeel;

namespace {

constexpr ColorRGBA kRed{255, 0, 0, 255};
constexpr ColorRGBA kBlue{0, 0, 255, 255};
const ViewBox kCanvas{0, 0, 512, 512};

} // namespace

TEST_SUITE("dataset_builder") {

TEST_CASE("shape classes of primitives") {
    CHECK(shape_class(make_circle("c", 256, 256, 80, kRed)) == "circle");
    CHECK(shape_class(make_ellipse("e", 256, 256, 120, 50, kRed)) == "ellipse");
    CHECK(shape_class(make_rect("r", 10, 10, 40, 90, kRed)) == "rectangle");
    CHECK(shape_class(make_polygon("t", {{0, 0}, {50, 0}, {20, 40}}, kRed)) == "triangle");
    CHECK(shape_class(make_polygon("d", {{50, 0}, {100, 50}, {50, 120}, {0, 50}}, kRed)) == "polygon");
    CHECK(shape_class(make_polygon("h", {{0, 0}, {40, 0}, {60, 30}, {40, 60}, {0, 60}, {-20, 30}}, kRed)) ==
          "polygon");
    // Collinear extra vertices do not change the class.
    CHECK(shape_class(make_polygon("r5", {{0, 0}, {20, 0}, {40, 0}, {40, 30}, {0, 30}}, kRed)) == "rectangle");
}

TEST_CASE("irregular curved outline is a generic shape") {
    // Five-lobed blob: radius varies by 35% around the center.
    Polygon ring;
    for (int i = 0; i < 200; ++i) {
        const double t = 2 * std::numbers::pi * i / 200;
        const double r = 100 * (1 + 0.35 * std::cos(5 * t));
        ring.push_back({256 + r * std::cos(t), 256 + r * std::sin(t)});
    }
    PathShape blob = make_polygon("b", ring, kRed);
    // Bend one segment so the path counts as curved.
    blob.subpaths[0][0].p1 = blob.subpaths[0][0].p1 + Point{0.5, 0.5};
    CHECK(shape_class(blob) == "shape");
    CHECK(shape_class(make_compound("two", {{{0, 0}, {10, 0}, {10, 10}}, {{20, 20}, {30, 20}, {30, 30}}},
                                    kRed, FillRule::NonZero)) == "shape");
}

TEST_CASE("position words follow a 3x3 grid of the bounding-box center") {
    CHECK(position_word(make_circle("c", 256, 256, 40, kRed), kCanvas) == "center");
    CHECK(position_word(make_rect("r", 0, 0, 50, 50, kRed), kCanvas) == "top-left");
    CHECK(position_word(make_rect("r", 460, 240, 50, 30, kRed), kCanvas) == "right");
    CHECK(position_word(make_rect("r", 230, 470, 50, 30, kRed), kCanvas) == "bottom");
}

TEST_CASE("captions") {
    CHECK(path_phrase(make_circle("c", 256, 256, 90, ColorRGBA{250, 5, 5, 255}), kCanvas) ==
          "the red circle at center");
    const std::vector<PathShape> squares{make_rect("a", 10, 10, 30, 30, kBlue), make_rect("b", 200, 10, 30, 30, kBlue),
                                         make_rect("c", 400, 400, 30, 30, kBlue)};
    CHECK(geometric_caption(squares, kCanvas) == "the blue rectangles");
    std::vector<PathShape> mixed{make_rect("a", 10, 10, 30, 30, kBlue), make_circle("c", 256, 256, 40, kRed)};
    CHECK(geometric_caption(mixed, kCanvas) == "the blue rectangle at top-left, the red circle at center");
}

}
