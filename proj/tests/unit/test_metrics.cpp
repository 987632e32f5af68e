#include "layerpeel/error.hpp"
#include "layerpeel/metrics.hpp"
#include "layerpeel/shapes.hpp"

#include "../support/scenes.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace layerpeel;

namespace {

constexpr ColorRGBA kRed{255, 0, 0, 255};
constexpr ColorRGBA kBlue{0, 0, 255, 255};

// O(n^2) reference.
double brute_chamfer(const PointCloud& a, const PointCloud& b) {
    auto directed = [](const PointCloud& x, const PointCloud& y) {
        double s = 0;
        for (const auto& p : x.points) {
            double best = 1e300;
            for (const auto& q : y.points)
                best = std::min(best, std::sqrt((p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y)));
            s += best;
        }
        return s / static_cast<double>(x.points.size());
    };
    return directed(a, b) + directed(b, a);
}

PointCloud random_cloud(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(-50, 50);
    PointCloud c;
    for (int i = 0; i < n; ++i)
        c.points.push_back({u(rng), u(rng)});
    return c;
}

SvgDoc doc_of(std::vector<PathShape> paths) {
    SvgDoc d;
    d.viewbox = {0, 0, 512, 512};
    d.paths = std::move(paths);
    return d;
}

class ConstantService : public EmbeddingService {
public:
    double similarity(std::string_view, const RasterImage&) override { return 0.31; }
    double perceptual_distance(const RasterImage&, const RasterImage&) override { return 0.0; }
};

// Similarity = share of non-white pixels.
class InkService : public EmbeddingService {
public:
    double similarity(std::string_view, const RasterImage& img) override {
        std::size_t ink = 0;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x)
                ink += img.pixel(x, y) != ColorRGBA::white();
        return static_cast<double>(ink) / (img.width() * img.height());
    }
    double perceptual_distance(const RasterImage& a, const RasterImage& b) override { return mse(a, b); }
};

class DownService : public EmbeddingService {
public:
    double similarity(std::string_view, const RasterImage&) override { throw ServiceUnavailable("down"); }
    double perceptual_distance(const RasterImage&, const RasterImage&) override { throw ServiceUnavailable("down"); }
};

} // namespace

TEST_SUITE("eval_metrics") {

TEST_CASE("chamfer basics") {
    const PointCloud a{{{0, 0}}}, b{{{3, 4}}};
    CHECK(chamfer_distance(a, b) == doctest::Approx(10.0));
    const PointCloud sq = sample_outline(make_rect("s", 10, 10, 40, 40, kRed));
    CHECK(sq.points.size() == 256);
    CHECK(chamfer_distance(sq, sq) == 0.0);
    CHECK_THROWS_AS(chamfer_distance(PointCloud{}, sq), EmptyCloud);
    CHECK_THROWS_AS(sample_outline(make_rect("s", 0, 0, 1, 1, kRed), 8), std::invalid_argument);
}

TEST_CASE("outline samples are arc-length uniform") {
    const PointCloud c = sample_outline(make_rect("s", 0, 0, 64, 64, kRed), 256);
    // Perimeter 256: samples one unit apart.
    for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
        const Point d = c.points[i + 1] - c.points[i];
        CHECK(std::abs(d.x) + std::abs(d.y) == doctest::Approx(1.0));
    }
}

TEST_CASE("chamfer matches brute force on random clouds") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const PointCloud a = random_cloud(rng, 16 + static_cast<int>(rng() % 200));
        const PointCloud b = random_cloud(rng, 16 + static_cast<int>(rng() % 200));
        const double cd = chamfer_distance(a, b);
        REQUIRE(std::abs(cd - brute_chamfer(a, b)) < 1e-9);
        REQUIRE(std::abs(cd - chamfer_distance(b, a)) < 1e-9);
        // Lipschitz under translation.
        PointCloud moved = b;
        for (auto& p : moved.points)
            p = p + Point{1.5, -2.0};
        REQUIRE(chamfer_distance(a, moved) >= cd - 2 * 2.5 - 1e-12);
    }
    const PointCloud sq = sample_outline(make_rect("s", 0, 0, 1, 1, kRed));
    const PointCloud shifted = sample_outline(make_rect("t", 3, 0, 1, 1, kRed));
    CHECK(std::abs(chamfer_distance(sq, shifted) - brute_chamfer(sq, shifted)) < 1e-9);
}

TEST_CASE("path irregularity") {
    const SvgDoc truth = doc_of({make_rect("a", 10, 10, 40, 40, kRed), make_rect("b", 200, 200, 40, 40, kBlue),
                                 make_rect("c", 400, 50, 40, 40, kRed)});
    CHECK(path_irregularity(truth, truth) == 0.0);
    SvgDoc moved = truth;
    for (auto& p : moved.paths)
        p = transformed(p, Affine::translate(2, 0));
    const double one = brute_chamfer(sample_outline(truth.paths[0]), sample_outline(moved.paths[0]));
    CHECK(path_irregularity(moved, truth) == doctest::Approx(one).epsilon(1e-12));
    CHECK_THROWS_AS(path_irregularity(doc_of({}), truth), EmptyDocument);

    // Color-aware matching skips the geometrically closer wrong-color path.
    const SvgDoc gen = doc_of({make_rect("g", 200, 200, 40, 40, kRed)});
    CHECK(path_irregularity(gen, truth) == 0.0);
    IrregularityOptions ca;
    ca.color_aware = true;
    CHECK(path_irregularity(gen, truth, ca) > 100.0);
}

TEST_CASE("mse identities") {
    const RasterImage white(4, 4, ColorRGBA::white()), black(4, 4, ColorRGBA::black());
    CHECK(mse(white, white) == 0.0);
    CHECK(mse(white, black) == 1.0);
    RasterImage two(2, 2, ColorRGBA::white());
    two.set_pixel(1, 0, ColorRGBA{0, 0, 0, 255});
    CHECK(mse(two, RasterImage(2, 2, ColorRGBA::white())) == doctest::Approx(0.25));
    const RasterImage black2(2, 2, ColorRGBA::black());
    CHECK(mse(two, black2) == mse(black2, two));
    CHECK_THROWS_AS(mse(white, two), DimensionMismatch);
}

TEST_CASE("drop_paths") {
    const SvgDoc ten = testing::random_doc(5, {10, 10, 512, true});
    const SvgDoc d = drop_paths(ten, 0.3, 42);
    CHECK(d.paths.size() == 7);
    CHECK(drop_paths(ten, 0.3, 42).paths.size() == 7);
    std::vector<std::string> a, b;
    for (const auto& p : d.paths)
        a.push_back(p.id);
    for (const auto& p : drop_paths(ten, 0.3, 42).paths)
        b.push_back(p.id);
    CHECK(a == b);
    // Survivors keep paint order.
    std::size_t pos = 0;
    for (const auto& id : a) {
        while (pos < ten.paths.size() && ten.paths[pos].id != id)
            ++pos;
        CHECK(pos < ten.paths.size());
    }
    CHECK(drop_paths(testing::random_doc(6, {3, 3, 512, true}), 0.3, 1).paths.size() == 2);
    CHECK(drop_paths(ten, 0.0, 1).paths.size() == 10);
    CHECK_THROWS_AS(drop_paths(ten, 1.0, 1), std::invalid_argument);
}

TEST_CASE("semantics drop") {
    const SvgDoc doc = testing::random_doc(9);
    ConstantService constant;
    CHECK(semantics_drop(doc, "shapes", constant) == 0.0);
    InkService ink;
    SemanticsOptions control;
    control.fraction = 0.0;
    CHECK(semantics_drop(doc, "shapes", ink, control) == 0.0);
    CHECK(semantics_drop(doc, "shapes", ink) > 0.0);
    DownService down;
    CHECK_THROWS_AS(semantics_drop(doc, "shapes", down), ServiceUnavailable);
}

TEST_CASE("results table columns") {
    const std::vector<MetricRow> rows{{"ours", std::nullopt, 1.5, 0.25, std::nullopt}};
    CHECK(results_csv(rows) == "Method,Path Semantics,Path Irregularity,MSE,LPIPS\nours,,1.5,0.25,\n");
    const std::string j = results_json(rows);
    CHECK(j.find("\"Path Semantics\": null") != std::string::npos);
    CHECK(j.find("\"MSE\": 0.25") != std::string::npos);
}

TEST_CASE("directory evaluation pairs files by name") {
    namespace fs = std::filesystem;
    const fs::path g = fs::temp_directory_path() / "layerpeel_eval_gen";
    const fs::path t = fs::temp_directory_path() / "layerpeel_eval_truth";
    fs::remove_all(g);
    fs::remove_all(t);
    fs::create_directories(g);
    fs::create_directories(t);
    for (int i = 0; i < 3; ++i) {
        const std::string text = emit_svg_text(testing::random_doc(20 + i));
        std::ofstream(g / ("d" + std::to_string(i) + ".svg")) << text;
        std::ofstream(t / ("d" + std::to_string(i) + ".svg")) << text;
    }
    EvalReport r = evaluate_directories(g, t);
    CHECK(r.per_file.size() == 3);
    CHECK(*r.mean.path_irregularity == 0.0);
    CHECK(*r.mean.mse == 0.0);
    CHECK_FALSE(r.mean.path_semantics);

    InkService ink;
    EvalOptions with_service;
    with_service.service = &ink;
    r = evaluate_directories(g, t, with_service);
    CHECK(r.mean.path_semantics);
    CHECK(*r.mean.lpips == 0.0);

    std::ofstream(g / "extra.svg") << emit_svg_text(testing::random_doc(1));
    CHECK_THROWS_AS(evaluate_directories(g, t), UnpairedFile);
    fs::remove_all(g);
    fs::remove_all(t);
}

}
