#include "layerpeel/peel.hpp"

#include "layerpeel/caption.hpp"
#include "layerpeel/error.hpp"
#include "layerpeel/occlusion.hpp"
#include "layerpeel/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace layerpeel {

using ordered_json = nlohmann::ordered_json;

AnnotatorOutput Annotator::annotate(const RasterImage& image, const std::optional<LayerGraph>& prev_graph) {
    if (concurrent_safe())
        return do_annotate(image, prev_graph);
    std::lock_guard lock(mutex_);
    return do_annotate(image, prev_graph);
}

RasterImage Remover::remove(const RemoveRequest& request) {
    if (concurrent_safe())
        return do_remove(request);
    std::lock_guard lock(mutex_);
    return do_remove(request);
}

void Remover::commit() {
    std::lock_guard lock(mutex_);
    do_commit();
}

std::string_view to_string(Termination t) {
    switch (t) {
    case Termination::Blank:
        return "blank";
    case Termination::MaxIterations:
        return "max_iterations";
    case Termination::Stalled:
        return "stalled";
    case Termination::BackendFailure:
        return "backend_failure";
    }
    return "unknown";
}

std::vector<VectorLayer> PeelTrace::layers() const {
    std::vector<VectorLayer> out;
    out.reserve(steps.size());
    for (const auto& s : steps)
        out.push_back(s.layer);
    return out;
}

std::uint64_t derive_seed(std::uint64_t base, int step, int attempt) {
    // splitmix64 finalizer over the packed (base, step, attempt) triple.
    std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(step) * 1024 +
                                                      static_cast<std::uint64_t>(attempt) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <class F>
auto call_backend(const char* who, F&& f) {
    try {
        return f();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw BackendError(std::string(who) + ": " + e.what());
    }
}

struct PixelRect {
    int x0, y0, x1, y1; // half-open
};

PixelRect to_pixels(const BBoxNorm& b, int w, int h) {
    return {static_cast<int>(std::floor(b.x0 * w)), static_cast<int>(std::floor(b.y0 * h)),
            static_cast<int>(std::ceil(b.x1 * w)), static_cast<int>(std::ceil(b.y1 * h))};
}

std::vector<std::string> mask_warnings(const BitMask& mask, const std::vector<InstanceAnnotation>& instances) {
    std::vector<std::string> out;
    if (instances.empty())
        return out;
    std::vector<PixelRect> rects;
    for (const auto& inst : instances)
        rects.push_back(to_pixels(inst.box, mask.width(), mask.height()));

    int stray = 0;
    std::size_t stray_pixels = 0;
    for (const auto& comp : connected_components(mask, true)) {
        bool inside = false;
        comp.for_each_set([&](int x, int y) {
            for (const auto& r : rects)
                inside = inside || (x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1);
        });
        if (!inside) {
            ++stray;
            stray_pixels += comp.count();
        }
    }
    if (stray > 0)
        out.push_back(std::to_string(stray) + " mask component(s) (" + std::to_string(stray_pixels) +
                      " px) outside every instance box");

    for (std::size_t i = 0; i < rects.size(); ++i) {
        const auto& r = rects[i];
        std::size_t in_box = 0;
        for (int y = std::max(r.y0, 0); y < std::min(r.y1, mask.height()); ++y)
            for (int x = std::max(r.x0, 0); x < std::min(r.x1, mask.width()); ++x)
                in_box += mask.get(x, y);
        const double area = static_cast<double>(r.x1 - r.x0) * (r.y1 - r.y0);
        if (in_box < 0.05 * area)
            out.push_back("instance " + std::to_string(i) + " (" + instances[i].label + "): mask covers " +
                          std::to_string(in_box) + " px of a " + std::to_string(static_cast<long>(area)) +
                          " px box; removal may be near-invisible");
    }
    return out;
}

} // namespace

PeelStep peel_once(const RasterImage& image, const std::optional<LayerGraph>& prev_graph, Annotator& annotator,
                   Remover& remover, const PeelConfig& config, int step_index) {
    if (is_blank(image, config.blank_tolerance))
        throw std::invalid_argument("peel_once needs a non-blank image");
    const DiffThreshold rho(config.rho);

    PeelStep step;
    step.index = step_index;
    step.input_image = image;

    auto t0 = Clock::now();
    step.annotator_output = call_backend("annotator", [&] { return annotator.annotate(image, prev_graph); });
    step.timings.annotate_ms = ms_since(t0);
    const AnnotatorOutput& ann = step.annotator_output;
    step.edit_prompt = "remove " + ann.global_caption;

    std::vector<std::string> labels;
    std::vector<BBoxNorm> boxes;
    for (const auto& inst : ann.instances) {
        labels.push_back(inst.label);
        boxes.push_back(snap_outward(inst.box, config.token_grid_rows, config.token_grid_cols));
    }
    step.layout = layout_for_prompts(ann.global_caption, labels, config.token_grid_rows, config.token_grid_cols);
    const AttentionPlan plan = build_joint_mask(step.layout, boxes, config.plan);
    step.plan_summary = plan_summary(step.layout, plan);

    RemoveRequest req;
    req.image = &image;
    req.edit_prompt = step.edit_prompt;
    req.instances = ann.instances;
    req.layout = step.layout;
    req.plan = &plan;
    req.sampler = config.sampler;
    req.step_index = step_index;

    t0 = Clock::now();
    for (int attempt = 0;; ++attempt) {
        req.attempt = attempt;
        req.sampler.seed = derive_seed(config.sampler.seed, step_index, attempt);
        step.output_image = call_backend("remover", [&] { return remover.remove(req); });
        if (step.output_image.width() != image.width() || step.output_image.height() != image.height())
            throw DimensionMismatch("remover returned a differently sized image");
        step.mask = diff_mask(image, step.output_image, rho);
        if (config.close_mask)
            step.mask = close_mask(step.mask);
        step.attempts = attempt + 1;
        step.sampler_seed = req.sampler.seed;
        if (step.mask.any())
            break;
        if (attempt >= config.stall_retries)
            throw StallDetected("step " + std::to_string(step_index) + ": remover changed no pixel after " +
                                std::to_string(attempt + 1) + " attempt(s)");
    }
    step.timings.remove_ms = ms_since(t0);

    t0 = Clock::now();
    step.layer = vectorize(extract_region(image, step.mask), step_index, config.vectorize);
    step.timings.vectorize_ms = ms_since(t0);
    step.warnings = mask_warnings(step.mask, ann.instances);
    return step;
}

namespace {

FailureRecord failure_of(const std::exception& e) {
    FailureRecord f;
    f.message = e.what();
    if (const auto* p = dynamic_cast<const ProtocolError*>(&e)) {
        f.kind = "ProtocolError";
        f.raw_payload = p->raw_payload();
    } else if (dynamic_cast<const Timeout*>(&e)) {
        f.kind = "Timeout";
    } else if (dynamic_cast<const Unauthorized*>(&e)) {
        f.kind = "Unauthorized";
    } else if (dynamic_cast<const ServerError*>(&e)) {
        f.kind = "ServerError";
    } else if (dynamic_cast<const StallDetected*>(&e)) {
        f.kind = "StallDetected";
    } else if (dynamic_cast<const BackendError*>(&e)) {
        f.kind = "BackendError";
    } else {
        f.kind = "Error";
    }
    return f;
}

} // namespace

PeelTrace run(const RasterImage& image, Annotator& annotator, Remover& remover, const PeelConfig& config) {
    if (image.width() != config.resolution || image.height() != config.resolution)
        throw DimensionMismatch("input is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                                ", expected " + std::to_string(config.resolution) + " square");
    PeelTrace trace;
    RasterImage current = image;
    std::optional<LayerGraph> prev_graph;
    while (true) {
        if (is_blank(current, config.blank_tolerance)) {
            trace.termination = Termination::Blank;
            break;
        }
        if (static_cast<int>(trace.steps.size()) >= config.max_iterations) {
            trace.termination = Termination::MaxIterations;
            break;
        }
        try {
            PeelStep step = peel_once(current, prev_graph, annotator, remover, config,
                                      static_cast<int>(trace.steps.size()));
            remover.commit();
            current = step.output_image;
            prev_graph = step.annotator_output.graph;
            trace.steps.push_back(std::move(step));
        } catch (const StallDetected& e) {
            trace.termination = Termination::Stalled;
            trace.failure = failure_of(e);
            break;
        } catch (const Error& e) {
            trace.termination = Termination::BackendFailure;
            trace.failure = failure_of(e);
            break;
        }
    }
    trace.final_doc = emit_svg(trace.layers(), config.resolution);
    return trace;
}

// ---------------------------------------------------------------------------
// Oracle backends

OracleScene::OracleScene(SvgDoc truth, int resolution) : truth_(std::move(truth)), resolution_(resolution) {}

void OracleScene::remove_paths(const std::vector<std::string>& ids) { truth_ = truth_.without(ids); }

AnnotatorOutput oracle_annotate(const SvgDoc& truth, int resolution) {
    if (truth.paths.empty())
        throw EmptyDocument("oracle annotator: no paths left");
    const std::size_t n = truth.paths.size();
    const std::vector<BitMask> masks = coverage_masks(truth, resolution);

    std::vector<std::string> ids(n);
    for (std::size_t i = 0; i < n; ++i)
        ids[i] = truth.paths[i].id.empty() ? "path" + std::to_string(i) : truth.paths[i].id;

    // Node ids per path: the path itself, or one per visible fragment.
    std::vector<std::vector<std::string>> node_ids(n);
    BitMask above(resolution, resolution);
    std::vector<GraphNode> nodes_rev;
    std::vector<GraphEdge> edges;
    for (std::size_t k = n; k-- > 0;) {
        const PathShape& p = truth.paths[k];
        const std::string phrase = path_phrase(p, truth.viewbox);
        const std::string color = nearest_css_color_name(p.fill);
        std::size_t fragments = 1;
        if (masks[k].intersects(above)) {
            BitMask visible = masks[k];
            visible.subtract(above);
            const std::size_t vis = connected_components(visible).size();
            if (vis >= 2 && vis > connected_components(masks[k]).size())
                fragments = vis;
        }
        if (fragments == 1) {
            node_ids[k] = {ids[k]};
        } else {
            for (std::size_t f = 1; f <= fragments; ++f)
                node_ids[k].push_back(ids[k] + "#" + std::to_string(f));
            for (std::size_t f = 1; f < fragments; ++f)
                edges.push_back({node_ids[k][f - 1], node_ids[k][f], Relationship::InterruptedShape});
        }
        for (std::size_t f = node_ids[k].size(); f-- > 0;) {
            GraphNode node{node_ids[k][f], phrase, color, std::nullopt};
            if (fragments > 1) {
                node.description += " (part " + std::to_string(f + 1) + ")";
                node.part_of_object = ids[k];
            }
            nodes_rev.push_back(std::move(node));
        }
        above |= masks[k];
    }
    std::vector<GraphNode> nodes(nodes_rev.rbegin(), nodes_rev.rend());

    // i occludes j when i is the next path above j at some pixel.
    for (std::size_t j = 0; j < n; ++j) {
        if (!masks[j].any())
            continue;
        BitMask between(resolution, resolution);
        for (std::size_t i = j + 1; i < n; ++i) {
            BitMask shared = masks[i] & masks[j];
            shared.subtract(between);
            if (shared.any())
                for (const auto& s : node_ids[i])
                    for (const auto& t : node_ids[j])
                        edges.push_back({s, t, Relationship::Occludes});
            between |= masks[i];
        }
    }

    AnnotatorOutput out;
    out.graph = make_graph(std::move(nodes), std::move(edges));
    for (std::size_t i : topmost_indices(masks)) {
        const auto b = masks[i].bounds();
        if (!b)
            continue;
        const double r = resolution;
        out.instances.push_back(
            {{b->x0 / r, b->y0 / r, (b->x1 + 1) / r, (b->y1 + 1) / r}, path_phrase(truth.paths[i], truth.viewbox)});
    }
    for (std::size_t i = 0; i < out.instances.size(); ++i)
        out.global_caption += (i ? ", " : "") + out.instances[i].label;
    return out;
}

AnnotatorOutput OracleAnnotator::do_annotate(const RasterImage&, const std::optional<LayerGraph>&) {
    return oracle_annotate(scene_->truth(), scene_->resolution());
}

RasterImage OracleRemover::do_remove(const RemoveRequest&) {
    const TopmostSet top = topmost_set(scene_->truth(), scene_->resolution());
    pending_ = top.path_ids;
    return rasterize(scene_->truth().without(pending_), scene_->resolution());
}

void OracleRemover::do_commit() {
    scene_->remove_paths(pending_);
    pending_.clear();
}

OracleBackends make_oracle_backends(SvgDoc truth, int resolution) {
    OracleBackends b;
    b.scene = std::make_shared<OracleScene>(std::move(truth), resolution);
    b.annotator = std::make_unique<OracleAnnotator>(b.scene);
    b.remover = std::make_unique<OracleRemover>(b.scene);
    return b;
}

// ---------------------------------------------------------------------------
// Trace persistence

namespace {

std::string step_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "step_%03d", index);
    return buf;
}

ordered_json step_json(const PeelStep& s) {
    ordered_json o;
    o["index"] = s.index;
    o["edit_prompt"] = s.edit_prompt;
    o["global_caption"] = s.annotator_output.global_caption;
    o["instances"] = ordered_json::array();
    for (const auto& inst : s.annotator_output.instances)
        o["instances"].push_back(
            {{"box", {inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1}}, {"label", inst.label}});
    o["graph"] = ordered_json::parse(serialize_graph(s.annotator_output.graph));
    o["layout"] = ordered_json::parse(layout_to_json(s.layout));
    ordered_json summary = ordered_json::array();
    std::size_t start = 0;
    while (start < s.plan_summary.size()) {
        const std::size_t nl = s.plan_summary.find('\n', start);
        summary.push_back(s.plan_summary.substr(start, nl - start));
        start = nl == std::string::npos ? s.plan_summary.size() : nl + 1;
    }
    o["plan_summary"] = std::move(summary);
    o["attempts"] = s.attempts;
    o["sampler_seed"] = s.sampler_seed;
    o["mask_pixels"] = s.mask.count();
    o["layer_paths"] = s.layer.shapes.size();
    o["warnings"] = s.warnings;
    return o;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot write " + path.string());
    f << text;
}

} // namespace

std::string step_to_json(const PeelStep& step) { return step_json(step).dump(2) + "\n"; }

std::string trace_timings_json(const PeelTrace& trace) {
    ordered_json steps = ordered_json::array();
    for (const auto& s : trace.steps)
        steps.push_back({{"index", s.index},
                         {"annotate_ms", s.timings.annotate_ms},
                         {"remove_ms", s.timings.remove_ms},
                         {"vectorize_ms", s.timings.vectorize_ms}});
    return ordered_json{{"steps", std::move(steps)}}.dump(2) + "\n";
}

std::string trace_manifest_json(const PeelTrace& trace, const PeelConfig& config) {
    ordered_json o;
    o["termination"] = std::string(to_string(trace.termination));
    o["step_count"] = trace.steps.size();
    o["resolution"] = config.resolution;
    o["rho"] = config.rho;
    o["max_iterations"] = config.max_iterations;
    o["simplify_epsilon"] = config.vectorize.epsilon;
    o["final_paths"] = trace.final_doc.paths.size();
    if (trace.failure)
        o["failure"] = {{"kind", trace.failure->kind},
                        {"message", trace.failure->message},
                        {"raw_payload", trace.failure->raw_payload}};
    else
        o["failure"] = nullptr;
    ordered_json steps = ordered_json::array();
    for (const auto& s : trace.steps)
        steps.push_back({{"index", s.index},
                         {"json", step_name(s.index) + ".json"},
                         {"warnings", s.warnings.size()}});
    o["steps"] = std::move(steps);
    return o.dump(2) + "\n";
}

void write_trace(const PeelTrace& trace, const PeelConfig& config, const std::filesystem::path& dir, bool force) {
    namespace fs = std::filesystem;
    std::vector<fs::path> targets{dir / "final.svg", dir / "manifest.json", dir / "timings.json"};
    for (const auto& s : trace.steps)
        for (const char* suffix : {"_src.png", "_out.png", "_mask.png", ".json"})
            targets.push_back(dir / (step_name(s.index) + suffix));
    if (!force)
        for (const auto& t : targets)
            if (fs::exists(t))
                throw OutputExists(t.string() + " already exists (use force to overwrite)");
    fs::create_directories(dir);
    for (const auto& s : trace.steps) {
        const std::string base = step_name(s.index);
        write_png(dir / (base + "_src.png"), s.input_image);
        write_png(dir / (base + "_out.png"), s.output_image);
        write_mask_png(dir / (base + "_mask.png"), s.mask);
        write_text(dir / (base + ".json"), step_to_json(s));
    }
    write_text(dir / "final.svg", emit_layered_svg_text(trace.layers(), config.resolution));
    write_text(dir / "manifest.json", trace_manifest_json(trace, config));
    write_text(dir / "timings.json", trace_timings_json(trace));
}

} // namespace layerpeel
