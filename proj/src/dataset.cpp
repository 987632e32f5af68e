#include "layerpeel/dataset.hpp"

#include "layerpeel/caption.hpp"
#include "layerpeel/error.hpp"
#include "layerpeel/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace layerpeel {

using ordered_json = nlohmann::ordered_json;

Captioner geometric_captioner() {
    return [](const std::vector<PathShape>& topmost, const ViewBox& vb, const RasterImage&) {
        return geometric_caption(topmost, vb);
    };
}

RasterImage checkerboard(int width, int height) {
    RasterImage img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const std::uint8_t v = ((x / kCheckerCell + y / kCheckerCell) % 2 == 0) ? kCheckerLight : kCheckerDark;
            img.set_pixel(x, y, {v, v, v, 255});
        }
    return img;
}

namespace {

// 5x7 glyphs, one row per string, '#' = ink.
constexpr const char* kGlyphA[7] = {".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"};
constexpr const char* kGlyphB[7] = {"####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."};
constexpr int kGlyphScale = 4;
constexpr int kGlyphMargin = 8;

void draw_glyph(RasterImage& img, const char* const (&glyph)[7], int ox, int oy) {
    for (int r = 0; r < 7; ++r)
        for (int c = 0; c < 5; ++c) {
            if (glyph[r][c] != '#')
                continue;
            for (int dy = 0; dy < kGlyphScale; ++dy)
                for (int dx = 0; dx < kGlyphScale; ++dx)
                    img.set_pixel(ox + c * kGlyphScale + dx, oy + r * kGlyphScale + dy, ColorRGBA::black());
        }
}

void blit(RasterImage& dst, const RasterImage& src, int ox) {
    for (int y = 0; y < src.height(); ++y)
        for (int x = 0; x < src.width(); ++x)
            dst.set_pixel(ox + x, y, src.pixel(x, y));
}

} // namespace

RasterImage compose_panel(const SvgDoc& full, const TopmostSet& topmost, int half) {
    const RasterImage board = checkerboard(half, half);
    RasterImage out(2 * half, half, ColorRGBA::white());
    blit(out, composite_over(rasterize(full, half, ColorRGBA::transparent()), board), 0);
    blit(out, composite_over(rasterize(full.only(topmost.path_ids), half, ColorRGBA::transparent()), board), half);
    for (int y = 0; y < half; ++y) {
        out.set_pixel(half - 1, y, ColorRGBA::black());
        out.set_pixel(half, y, ColorRGBA::black());
    }
    draw_glyph(out, kGlyphA, kGlyphMargin, kGlyphMargin);
    draw_glyph(out, kGlyphB, half + kGlyphMargin, kGlyphMargin);
    return out;
}

std::vector<Triplet> build_triplets(const SvgDoc& doc, const std::string& svg_id, const TripletOptions& options) {
    if (doc.paths.empty())
        throw EmptyDocument("document " + svg_id + " has no paths");
    const Captioner caption = options.captioner ? options.captioner : geometric_captioner();
    std::vector<Triplet> out;
    SvgDoc current = doc;
    RasterImage src = rasterize(current, options.resolution);
    for (int k = 0; !current.paths.empty(); ++k) {
        const TopmostSet top = topmost_set(current, options.resolution);
        SvgDoc rest = current.without(top.path_ids);
        Triplet t;
        t.src = std::move(src);
        t.tar = rasterize(rest, options.resolution);
        if (options.with_panels)
            t.panel = compose_panel(current, top, options.resolution);

        std::vector<PathShape> top_paths = current.only(top.path_ids).paths;
        const std::string text = caption(top_paths, current.viewbox, t.panel);
        if (text.empty())
            throw std::runtime_error("captioner returned an empty caption for " + svg_id);

        const std::string base = svg_id + "/step_" + std::to_string(k) + "_";
        t.record.svg_id = svg_id;
        t.record.step_index = k;
        t.record.edit_prompt = "remove " + text;
        t.record.src_image_path = base + "src.png";
        t.record.tar_image_path = base + "tar.png";
        t.record.panel_image_path = options.with_panels ? base + "panel.png" : "";
        t.record.removed_path_ids = top.path_ids;
        t.record.changed_pixels = count_differing_pixels(t.src, t.tar);
        src = t.tar;
        current = std::move(rest);
        out.push_back(std::move(t));
    }
    return out;
}

std::map<std::string, std::string> assign_splits(std::vector<std::string> ids, const SplitSizes& sizes,
                                                 std::uint64_t seed) {
    std::sort(ids.begin(), ids.end());
    std::mt19937_64 rng(seed);
    // Explicit Fisher-Yates: std::shuffle is not specified bit-for-bit.
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(ids[i - 1], ids[j]);
    }
    const std::size_t total = sizes.train + sizes.val + sizes.test;
    std::size_t n_val = sizes.val, n_test = sizes.test;
    if (ids.size() < total && total > 0) {
        const double f = static_cast<double>(ids.size()) / static_cast<double>(total);
        n_val = static_cast<std::size_t>(std::llround(sizes.val * f));
        n_test = static_cast<std::size_t>(std::llround(sizes.test * f));
    }
    std::map<std::string, std::string> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        out[ids[i]] = i < n_val ? "val" : i < n_val + n_test ? "test" : "train";
    return out;
}

std::string record_to_json_line(const TripletRecord& r) {
    ordered_json o;
    o["svg_id"] = r.svg_id;
    o["step_index"] = r.step_index;
    o["edit_prompt"] = r.edit_prompt;
    o["src_image_path"] = r.src_image_path;
    o["tar_image_path"] = r.tar_image_path;
    o["panel_image_path"] = r.panel_image_path;
    o["removed_path_ids"] = r.removed_path_ids;
    o["changed_pixels"] = r.changed_pixels;
    return o.dump() + "\n";
}

std::string corpus_to_json(const CorpusManifest& m) {
    ordered_json o;
    o["accepted_count"] = m.accepted.size();
    o["rejected_count"] = m.rejected.size();
    o["total_triplets"] = m.total_triplets;
    ordered_json rejected = ordered_json::array();
    for (const auto& r : m.rejected)
        rejected.push_back({{"file", r.file}, {"reason", r.reason}});
    o["rejected"] = std::move(rejected);
    ordered_json per_svg = ordered_json::object();
    for (const auto& id : m.accepted) {
        const auto split = m.split.find(id);
        const auto count = m.triplet_counts.find(id);
        per_svg[id] = {{"split", split == m.split.end() ? "" : split->second},
                       {"triplets", count == m.triplet_counts.end() ? 0 : count->second}};
    }
    o["svgs"] = std::move(per_svg);
    return o.dump(2) + "\n";
}

namespace {

struct FileResult {
    std::string svg_id;
    std::string file;
    std::string reject_reason; // empty when accepted
    std::vector<TripletRecord> records;
};

std::string read_text(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

FileResult process_file(const std::filesystem::path& file, const std::filesystem::path& out_dir,
                        const CorpusConfig& cfg) {
    FileResult r;
    r.svg_id = file.stem().string();
    r.file = file.filename().string();
    try {
        const SvgDoc parsed = parse_svg(read_text(file));
        if (!filter_by_path_count(parsed, cfg.max_paths)) {
            r.reject_reason = "path_count: " + std::to_string(parsed.paths.size()) + " > " + std::to_string(cfg.max_paths);
            return r;
        }
        if (parsed.paths.empty()) {
            r.reject_reason = "empty_document";
            return r;
        }
        const SvgDoc doc = normalize_viewbox(parsed, cfg.resolution);
        TripletOptions opts = cfg.triplets;
        opts.resolution = cfg.resolution;
        const auto triplets = build_triplets(doc, r.svg_id, opts);
        std::filesystem::create_directories(out_dir / r.svg_id);
        for (const auto& t : triplets) {
            write_png(out_dir / t.record.src_image_path, t.src);
            write_png(out_dir / t.record.tar_image_path, t.tar);
            if (opts.with_panels)
                write_png(out_dir / t.record.panel_image_path, t.panel);
            r.records.push_back(t.record);
        }
    } catch (const std::exception& e) {
        r.records.clear();
        r.reject_reason = std::string("error: ") + e.what();
    }
    return r;
}

} // namespace

CorpusManifest build_corpus(const std::filesystem::path& input_dir, const std::filesystem::path& output_dir,
                            const CorpusConfig& cfg) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input_dir))
        if (e.is_regular_file() && e.path().extension() == ".svg")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    fs::create_directories(output_dir);

    std::vector<FileResult> results(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++)
            results[i] = process_file(files[i], output_dir, cfg);
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(files.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    CorpusManifest m;
    std::string lines;
    for (const auto& r : results) {
        if (!r.reject_reason.empty()) {
            m.rejected.push_back({r.file, r.reject_reason});
            continue;
        }
        m.accepted.push_back(r.svg_id);
        m.triplet_counts[r.svg_id] = r.records.size();
        m.total_triplets += r.records.size();
        for (const auto& rec : r.records)
            lines += record_to_json_line(rec);
    }
    m.split = assign_splits(m.accepted, cfg.split, cfg.seed);

    std::ofstream(output_dir / "manifest.jsonl", std::ios::binary) << lines;
    std::ofstream(output_dir / "corpus.json", std::ios::binary) << corpus_to_json(m);
    return m;
}

} // namespace layerpeel
