#include "layerpeel/error.hpp"
#include "layerpeel/occlusion.hpp"
#include "layerpeel/shapes.hpp"

#include "../support/scenes.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>

using namespace layerpeel;

namespace {

constexpr ColorRGBA kRed{255, 0, 0, 255};
constexpr ColorRGBA kGreen{0, 255, 0, 255};
constexpr ColorRGBA kBlue{0, 0, 255, 255};

SvgDoc doc_of(std::vector<PathShape> paths, double size = 512) {
    SvgDoc d;
    d.viewbox = {0, 0, size, size};
    d.paths = std::move(paths);
    return d;
}

std::vector<std::uint8_t> bytes_of(const BitMask& m) {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(m.width()) * m.height());
    m.for_each_set([&](int x, int y) { out[static_cast<std::size_t>(y) * m.width() + x] = 1; });
    return out;
}

} // namespace

TEST_SUITE("occlusion_oracle") {

TEST_CASE("square covering pixels [2,4)^2 at resolution 8") {
    const auto m = coverage_mask(make_rect("s", 2, 2, 2, 2, kRed), 8);
    CHECK(m.count() == 4);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            CHECK(m.get(x, y) == (x >= 2 && x < 4 && y >= 2 && y < 4));
}

TEST_CASE("zero-area path covers nothing") {
    CHECK(coverage_mask(make_polygon("z", {{1, 1}, {5, 5}, {3, 3}}, kRed), 8).count() == 0);
    CHECK(coverage_mask(make_rect("z", 3, 3, 0, 4, kRed), 8).count() == 0);
}

TEST_CASE("evenodd annulus leaves the hole unset") {
    auto ring = make_circle("o", 256, 256, 200, kRed);
    ring.subpaths.push_back(make_circle("i", 256, 256, 100, kRed).subpaths[0]);
    ring.fill_rule = FillRule::EvenOdd;
    const auto m = coverage_mask(ring, 512);
    CHECK_FALSE(m.get(256, 256));
    CHECK(m.get(256, 100));
    CHECK(bytes_of(m) == testing::oracle_coverage(ring, 512, {0, 0, 512, 512}));
    ring.fill_rule = FillRule::NonZero;
    CHECK(coverage_mask(ring, 512).get(256, 256));
}

TEST_CASE("coverage matches the point-in-polygon oracle on random shapes") {
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto doc = testing::random_doc(seed);
        for (const auto& p : doc.paths)
            CHECK(bytes_of(coverage_mask(p, 512, doc.viewbox)) == testing::oracle_coverage(p, 512, doc.viewbox));
    }
}

TEST_CASE("coverage respects the viewbox mapping") {
    // Same geometry expressed in a 64-unit viewbox covers the same pixels at 512.
    const auto small = make_rect("s", 8, 8, 16, 8, kRed);
    const auto big = make_rect("b", 64, 64, 128, 64, kRed);
    CHECK(coverage_mask(small, 512, {0, 0, 64, 64}) == coverage_mask(big, 512));
}

TEST_CASE("overlaps") {
    const ViewBox vb{0, 0, 512, 512};
    const auto a = make_rect("a", 0, 0, 10, 10, kRed);
    const auto b = make_rect("b", 100, 100, 10, 10, kRed);
    CHECK_FALSE(overlaps(a, b, vb));
    CHECK(overlaps(a, a, vb));
    const auto c = make_rect("c", 9.4, 9.4, 10.6, 10.6, kRed);
    // Pixel oracle: pixel (9, 9) has center 9.5, inside both squares.
    std::size_t shared = 0;
    const auto ca = testing::oracle_coverage(a, 512, vb), cc = testing::oracle_coverage(c, 512, vb);
    for (std::size_t i = 0; i < ca.size(); ++i)
        shared += ca[i] && cc[i];
    CHECK(shared == 1);
    CHECK(overlaps(a, c, vb));
    CHECK(overlaps(c, a, vb));
    // A sliver that covers no pixel center does not overlap.
    const auto sliver = make_rect("s", 9.6, 0, 0.3, 10, kRed);
    CHECK_FALSE(overlaps(a, sliver, vb));
}

TEST_CASE("topmost set examples") {
    SUBCASE("single path") {
        CHECK(topmost_set(doc_of({make_rect("only", 10, 10, 50, 50, kRed)})).path_ids == std::vector<std::string>{"only"});
    }
    SUBCASE("three stacked squares") {
        const auto doc = doc_of({make_rect("red", 100, 100, 200, 200, kRed), make_rect("green", 100, 100, 200, 200, kGreen),
                                 make_rect("blue", 100, 100, 200, 200, kBlue)});
        const auto t = topmost_set(doc);
        CHECK(t.path_ids == std::vector<std::string>{"blue"});
        CHECK(t.path_ids == testing::oracle_topmost(doc, 512));
    }
    SUBCASE("bar across the left circle") {
        const auto doc = doc_of({make_circle("left", 128, 256, 80, kRed), make_circle("right", 384, 256, 80, kGreen),
                                 make_rect("bar", 100, 0, 40, 512, kBlue)});
        const auto t = topmost_set(doc);
        CHECK(std::set<std::string>(t.path_ids.begin(), t.path_ids.end()) == std::set<std::string>{"bar", "right"});
        CHECK(t.panel_mask == (coverage_mask(doc.paths[1], 512) | coverage_mask(doc.paths[2], 512)));
    }
    SUBCASE("duplicate above hides the lower copy") {
        const auto doc = doc_of({make_rect("low", 5, 5, 20, 20, kRed), make_rect("high", 5, 5, 20, 20, kRed)});
        CHECK(topmost_set(doc).path_ids == std::vector<std::string>{"high"});
    }
    SUBCASE("empty document") {
        CHECK_THROWS_AS(topmost_set(doc_of({})), EmptyDocument);
    }
}

TEST_CASE("iterated topmost removal terminates and never repeats ids") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        SvgDoc doc = testing::random_doc(seed);
        const std::size_t n = doc.paths.size();
        std::size_t rounds = 0;
        while (!doc.paths.empty()) {
            const auto t = topmost_set(doc);
            REQUIRE_FALSE(t.path_ids.empty());
            doc = doc.without(t.path_ids);
            for (const auto& id : t.path_ids)
                CHECK(doc.find(id) == nullptr);
            ++rounds;
        }
        CHECK(rounds <= n);
    }
}

}
