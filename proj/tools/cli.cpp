#include "cli.hpp"

#include "layerpeel/attention.hpp"
#include "layerpeel/dataset.hpp"
#include "layerpeel/error.hpp"
#include "layerpeel/gateway.hpp"
#include "layerpeel/metrics.hpp"
#include "layerpeel/peel.hpp"
#include "layerpeel/png_io.hpp"
#include "layerpeel/svg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace layerpeel::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

void validate(const RunConfig& c, bool needs_remote) {
    auto range = [](const char* name, double v, double lo, double hi) {
        if (!(v >= lo && v <= hi)) {
            std::ostringstream os;
            os << name << " must lie in [" << lo << ", " << hi << "], got " << v;
            throw ConfigError(os.str());
        }
    };
    range("resolution", c.resolution, 16, 4096);
    range("rho", c.rho, 0, 255);
    range("max-iters", c.max_iterations, 1, 10000);
    range("epsilon", c.epsilon, 0, 64);
    range("jobs", c.jobs, 1, 256);
    range("timeout-ms", c.timeout_ms, 1, 3600000);
    range("max-retries", c.max_retries, 0, 20);
    if (c.backend != "oracle" && c.backend != "remote")
        throw ConfigError("backend must be oracle or remote, got '" + c.backend + "'");
    if (needs_remote && c.backend == "remote" && (c.annotator_url.empty() || c.remover_url.empty()))
        throw ConfigError("remote backend needs --annotator-url and --remover-url");
}

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f)
        throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text, bool force) {
    if (fs::exists(p) && !force)
        throw OutputExists(p.string() + " exists; pass --force to replace it");
    std::ofstream f(p, std::ios::binary);
    if (!f)
        throw ConfigError("cannot write " + p.string());
    f << text;
}

EndpointConfig endpoint(const RunConfig& c, const std::string& url) {
    EndpointConfig e;
    e.base_url = url;
    e.timeout_ms = c.timeout_ms;
    e.max_retries = c.max_retries;
    return with_env_credentials(e);
}

bool is_svg_input(const fs::path& p, const std::string& bytes) {
    if (p.extension() == ".svg")
        return true;
    const std::span<const std::uint8_t> head(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size());
    return !looks_like_png(head);
}

int cmd_peel(const RunConfig& c, const fs::path& input, fs::path out_dir, std::ostream& out) {
    validate(c, true);
    const std::string bytes = read_file(input);
    std::optional<SvgDoc> truth;
    RasterImage image;
    if (is_svg_input(input, bytes)) {
        truth = normalize_viewbox(parse_svg(bytes), c.resolution);
        image = rasterize(*truth, c.resolution);
    } else {
        if (c.backend == "oracle")
            throw ConfigError("oracle backend needs vector truth; pass an SVG input");
        image = decode_png({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
        if (image.width() != c.resolution || image.height() != c.resolution)
            throw ConfigError("input is " + std::to_string(image.width()) + "x" + std::to_string(image.height()) +
                              ", expected " + std::to_string(c.resolution) + " square");
    }

    PeelConfig pc;
    pc.resolution = c.resolution;
    pc.rho = c.rho;
    pc.max_iterations = c.max_iterations;
    pc.vectorize.epsilon = c.epsilon;
    pc.sampler.seed = c.seed;

    std::unique_ptr<Annotator> annotator;
    std::unique_ptr<Remover> remover;
    OracleBackends oracle;
    if (c.backend == "oracle") {
        oracle = make_oracle_backends(*truth, c.resolution);
        annotator = std::move(oracle.annotator);
        remover = std::move(oracle.remover);
    } else {
        annotator = std::make_unique<RemoteAnnotator>(endpoint(c, c.annotator_url));
        remover = std::make_unique<RemoteRemover>(endpoint(c, c.remover_url));
    }

    if (out_dir.empty())
        out_dir = input.stem().string() + "_trace";
    // Fail before spending model calls on a run that cannot be saved.
    if (!c.force && fs::exists(out_dir / "manifest.json"))
        throw OutputExists((out_dir / "manifest.json").string() + " exists; pass --force or pick a fresh directory");

    const PeelTrace trace = run(image, *annotator, *remover, pc);
    write_trace(trace, pc, out_dir, c.force);
    out << trace.steps.size() << " step(s), termination " << to_string(trace.termination) << ", final SVG "
        << (out_dir / "final.svg").string() << "\n";
    switch (trace.termination) {
    case Termination::Blank:
        return kSuccess;
    case Termination::BackendFailure:
        throw BackendError(trace.failure ? trace.failure->kind + ": " + trace.failure->message : "backend failure");
    default:
        return kNotBlank;
    }
}

int cmd_dataset(const RunConfig& c, const fs::path& input_dir, const fs::path& output_dir, bool panels,
                int max_paths, std::ostream& out) {
    validate(c, false);
    if (!fs::is_directory(input_dir))
        throw ConfigError(input_dir.string() + " is not a directory");
    for (const char* name : {"manifest.jsonl", "corpus.json"})
        if (!c.force && fs::exists(output_dir / name))
            throw OutputExists((output_dir / name).string() + " exists; pass --force to rebuild");
    if (max_paths < 1)
        throw ConfigError("max-paths must be at least 1");
    CorpusConfig cc;
    cc.seed = c.seed;
    cc.jobs = c.jobs;
    cc.resolution = c.resolution;
    cc.max_paths = static_cast<std::size_t>(max_paths);
    cc.triplets.with_panels = panels;
    const CorpusManifest m = build_corpus(input_dir, output_dir, cc);
    out << m.accepted.size() << " accepted, " << m.rejected.size() << " rejected, " << m.total_triplets
        << " triplet(s)\n";
    for (const auto& r : m.rejected)
        out << "  rejected " << r.file << ": " << r.reason << "\n";
    return kSuccess;
}

int cmd_eval(const RunConfig& c, const fs::path& generated, const fs::path& truth, const std::string& format,
             const fs::path& out_file, std::ostream& out) {
    validate(c, false);
    for (const auto& d : {generated, truth})
        if (!fs::is_directory(d))
            throw ConfigError(d.string() + " is not a directory");
    std::unique_ptr<RemoteEmbeddingService> service;
    EvalOptions eo;
    eo.resolution = c.resolution;
    eo.jobs = c.jobs;
    eo.semantics.seed = c.seed;
    if (!c.embed_url.empty()) {
        service = std::make_unique<RemoteEmbeddingService>(endpoint(c, c.embed_url));
        eo.service = service.get();
    }
    EvalReport report = evaluate_directories(generated, truth, eo);
    std::vector<MetricRow> rows = std::move(report.per_file);
    rows.push_back(report.mean);
    const std::string text = format == "json" ? results_json(rows) : results_csv(rows);
    if (out_file.empty())
        out << text;
    else
        write_file(out_file, text, c.force);
    return kSuccess;
}

TokenLayout read_layout(const std::string& text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded())
        throw InvalidJson("layout file is not JSON");
    if (j.is_object() && j.contains("global_prompt")) {
        try {
            return layout_for_prompts(j.at("global_prompt").get<std::string>(),
                                      j.value("labels", std::vector<std::string>{}), j.at("grid_rows").get<int>(),
                                      j.at("grid_cols").get<int>());
        } catch (const json::exception& e) {
            throw SchemaViolation(std::string("layout file: ") + e.what());
        }
    }
    return layout_from_json(text);
}

std::vector<BBoxNorm> read_boxes(const std::string& text) {
    const json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        throw InvalidJson("boxes file must be a JSON list");
    std::vector<BBoxNorm> out;
    for (const auto& e : j) {
        const json& b = e.is_object() && e.contains("box") ? e["box"] : e;
        if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const json& v) { return v.is_number(); }))
            throw SchemaViolation("each box is [x0, y0, x1, y1] or {\"box\": [x0, y0, x1, y1]}");
        out.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()});
    }
    return out;
}

int cmd_plan(const RunConfig& c, const fs::path& layout_file, const fs::path& boxes_file, bool instance_global,
             const fs::path& out_file, std::ostream& out) {
    const TokenLayout layout = read_layout(read_file(layout_file));
    const std::vector<BBoxNorm> boxes = read_boxes(read_file(boxes_file));
    PlanOptions po;
    po.instance_attends_global = instance_global;
    const AttentionPlan plan = build_joint_mask(layout, boxes, po);
    const std::string serialized = serialize_plan(layout, plan);
    if (out_file.empty())
        out << serialized << "\n";
    else
        write_file(out_file, serialized + "\n", c.force);
    out << plan_summary(layout, plan);
    return kSuccess;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Layer-by-layer decomposition of flat-color vector drawings", "layerpeel"};
    app.set_config("--config", "", "key = value file; flags override its values");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig c;
    app.add_option("--backend", c.backend, "oracle or remote")->check(CLI::IsMember({"oracle", "remote"}));
    app.add_option("--rho", c.rho, "per-channel diff threshold");
    app.add_option("--resolution", c.resolution, "square raster size");
    app.add_option("--max-iters", c.max_iterations, "peel iteration cap");
    app.add_option("--epsilon", c.epsilon, "contour simplification tolerance (px)");
    app.add_option("--seed", c.seed, "single source of randomness");
    app.add_option("--jobs", c.jobs, "files processed concurrently");
    app.add_option("--annotator-url", c.annotator_url);
    app.add_option("--remover-url", c.remover_url);
    app.add_option("--embed-url", c.embed_url, "similarity and perceptual-distance service");
    app.add_option("--timeout-ms", c.timeout_ms, "per-request timeout");
    app.add_option("--max-retries", c.max_retries, "retries after 5xx or transport failures");
    app.add_flag("--force", c.force, "replace existing outputs");

    std::string peel_input, peel_out;
    auto* peel = app.add_subcommand("peel", "peel an SVG or PNG into layers");
    peel->add_option("input", peel_input, "SVG or PNG file")->required();
    peel->add_option("-o,--out", peel_out, "trace directory (default <stem>_trace)");

    std::string ds_in, ds_out;
    bool no_panels = false;
    int max_paths = 30;
    auto* dataset = app.add_subcommand("dataset", "build removal triplets from a directory of SVGs");
    dataset->add_option("input_dir", ds_in)->required();
    dataset->add_option("output_dir", ds_out)->required();
    dataset->add_flag("--no-panels", no_panels, "skip the side-by-side panel images");
    dataset->add_option("--max-paths", max_paths, "reject documents with more paths");

    std::string ev_gen, ev_truth, ev_format = "csv", ev_out;
    auto* eval = app.add_subcommand("eval", "compare generated SVGs with ground truth");
    eval->add_option("generated_dir", ev_gen)->required();
    eval->add_option("truth_dir", ev_truth)->required();
    eval->add_option("--format", ev_format)->check(CLI::IsMember({"csv", "json"}));
    eval->add_option("-o,--out", ev_out, "results file (default stdout)");

    std::string pl_layout, pl_boxes, pl_out;
    bool instance_global = false;
    auto* plan = app.add_subcommand("plan-attention", "build and summarize an attention plan");
    plan->add_option("layout_file", pl_layout, "layout JSON or {global_prompt, labels, grid_rows, grid_cols}")
        ->required();
    plan->add_option("boxes_file", pl_boxes, "JSON list of [x0, y0, x1, y1]")->required();
    plan->add_flag("--instance-attends-global", instance_global);
    plan->add_option("-o,--out", pl_out, "plan file (default stdout)");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kSuccess : kConfigError;
    }

    try {
        if (*peel)
            return cmd_peel(c, peel_input, peel_out, out);
        if (*dataset)
            return cmd_dataset(c, ds_in, ds_out, !no_panels, max_paths, out);
        if (*eval)
            return cmd_eval(c, ev_gen, ev_truth, ev_format, ev_out, out);
        return cmd_plan(c, pl_layout, pl_boxes, instance_global, pl_out, out);
    } catch (const BackendError& e) {
        err << "backend error: " << e.what() << "\n";
        return kBackendError;
    } catch (const ServiceUnavailable& e) {
        err << "backend error: " << e.what() << "\n";
        return kBackendError;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Error& e) {
        // Invalid inputs: malformed files, unpaired evaluations, refused overwrites.
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
}

} // namespace layerpeel::cli
