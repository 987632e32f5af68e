// Runs the nine acceptance criteria and prints one PASS/FAIL line each.
// Exit status is the number of failing criteria.

#include "layerpeel/attention.hpp"
#include "layerpeel/dataset.hpp"
#include "layerpeel/error.hpp"
#include "layerpeel/gateway.hpp"
#include "layerpeel/layer_graph.hpp"
#include "layerpeel/metrics.hpp"
#include "layerpeel/occlusion.hpp"
#include "layerpeel/peel.hpp"
#include "layerpeel/png_io.hpp"
#include "layerpeel/raster.hpp"
#include "layerpeel/shapes.hpp"
#include "layerpeel/svg.hpp"

#include "attention_reference.hpp"
#include "scenes.hpp"
#include "stub_server.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace layerpeel;

namespace {

// Pinned thresholds.
constexpr int kResolution = 512;
constexpr int kTopmostDocs = 1000;
constexpr double kTopmostBudgetS = 120.0;
constexpr int kRoundTripDocs = 100;
constexpr double kRoundTripBudgetS = 60.0;
constexpr double kMinIdenticalAtEps1 = 0.995;
constexpr int kDiffDocs = 50;
constexpr int kRho = 20;
constexpr int kChainDocs = 20;
constexpr int kAttentionCases = 200;
constexpr int kGraphFuzzInputs = 10000;
constexpr int kChamferPairs = 100;
constexpr double kChamferTol = 1e-9;
constexpr double kDropFraction = 0.3;
constexpr std::size_t kMaxPaths = 30;
constexpr int kExpectedRetries = 2;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

int failures = 0;

void report(int n, const std::string& title, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass)
        ++failures;
    std::printf("criterion %d: %s  %s (%s)\n", n, o.pass ? "PASS" : "FAIL", title.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::set<std::string> as_set(const std::vector<std::string>& v) { return {v.begin(), v.end()}; }

PeelTrace oracle_peel(const SvgDoc& doc, double epsilon) {
    auto b = make_oracle_backends(doc, kResolution);
    PeelConfig cfg;
    cfg.resolution = kResolution;
    cfg.rho = kRho;
    cfg.vectorize.epsilon = epsilon;
    return run(rasterize(doc, kResolution), *b.annotator, *b.remover, cfg);
}

Outcome topmost_equivalence() {
    const auto t0 = Clock::now();
    int bad = 0;
    for (int i = 0; i < kTopmostDocs; ++i) {
        const SvgDoc doc = testing::random_doc(10000 + i, {3, 15, kResolution, false});
        if (as_set(topmost_set(doc, kResolution).path_ids) != as_set(testing::oracle_topmost(doc, kResolution)))
            ++bad;
    }
    const double s = seconds_since(t0);
    return {bad == 0 && s < kTopmostBudgetS,
            fmt("%d/%d mismatches, %.1f s, budget %.0f s", bad, kTopmostDocs, s, kTopmostBudgetS)};
}

Outcome round_trip() {
    const auto t0 = Clock::now();
    int exact_fail = 0, eps_fail = 0;
    double worst = 1.0;
    const double total = double(kResolution) * kResolution;
    for (int i = 0; i < kRoundTripDocs; ++i) {
        const SvgDoc doc = testing::random_doc(20000 + i);
        const RasterImage original = rasterize(doc, kResolution);
        const SvgDoc exact = parse_svg(emit_svg_text(oracle_peel(doc, 0.0).final_doc));
        if (rasterize(exact, kResolution) != original)
            ++exact_fail;
        const SvgDoc approx = parse_svg(emit_svg_text(oracle_peel(doc, 1.0).final_doc));
        const double same = 1.0 - double(count_differing_pixels(rasterize(approx, kResolution), original)) / total;
        worst = std::min(worst, same);
        if (same < kMinIdenticalAtEps1)
            ++eps_fail;
    }
    const double s = seconds_since(t0);
    return {exact_fail == 0 && eps_fail == 0 && s < kRoundTripBudgetS,
            fmt("eps 0: %d/%d not identical; eps 1: worst %.4f%% identical (min %.1f%%), %d below; %.1f s, budget "
                "%.0f s",
                exact_fail, kRoundTripDocs, 100 * worst, 100 * kMinIdenticalAtEps1, eps_fail, s, kRoundTripBudgetS)};
}

Outcome diff_mask_exactness() {
    int checked = 0, skipped = 0, bad = 0;
    for (int i = 0; i < kDiffDocs; ++i) {
        const SvgDoc doc = testing::random_doc(30000 + i, {3, 15, kResolution, true});
        const PeelTrace trace = oracle_peel(doc, 1.0);
        SvgDoc remaining = doc;
        for (const auto& step : trace.steps) {
            const auto removed = testing::oracle_topmost(remaining, kResolution);
            BitMask expected(kResolution, kResolution);
            for (const auto& id : removed) {
                const auto cov = testing::oracle_coverage(*remaining.find(id), kResolution, remaining.viewbox);
                for (int y = 0; y < kResolution; ++y)
                    for (int x = 0; x < kResolution; ++x)
                        if (cov[static_cast<std::size_t>(y) * kResolution + x])
                            expected.set(x, y);
            }
            remaining = remaining.without(removed);

            bool contrasted = true;
            for (int y = 0; y < kResolution && contrasted; ++y)
                for (int x = 0; x < kResolution; ++x) {
                    if (!expected.get(x, y))
                        continue;
                    const ColorRGBA a = step.input_image.pixel(x, y), b = step.output_image.pixel(x, y);
                    const int d = std::max({std::abs(a.r - b.r), std::abs(a.g - b.g), std::abs(a.b - b.b)});
                    if (d <= kRho) {
                        contrasted = false;
                        break;
                    }
                }
            if (!contrasted) {
                ++skipped;
                continue;
            }
            ++checked;
            if (!(step.mask == expected))
                ++bad;
        }
    }
    return {bad == 0 && checked > 0,
            fmt("%d/%d steps differ, %d low-contrast steps skipped, rho %d", bad, checked, skipped, kRho)};
}

Outcome dataset_chaining() {
    int chain_bad = 0, count_bad = 0, rebuild_bad = 0, triplets = 0;
    for (int i = 0; i < kChainDocs; ++i) {
        const SvgDoc doc = testing::random_doc(40000 + i);
        TripletOptions opts;
        opts.resolution = kResolution;
        opts.with_panels = false;
        const auto trips = build_triplets(doc, "doc" + std::to_string(i), opts);
        triplets += static_cast<int>(trips.size());
        for (std::size_t j = 0; j + 1 < trips.size(); ++j)
            if (!(trips[j].tar == trips[j + 1].src))
                ++chain_bad;
        if (trips.size() != oracle_peel(doc, 1.0).steps.size())
            ++count_bad;
        RasterImage canvas(kResolution, kResolution, ColorRGBA::white());
        for (auto it = trips.rbegin(); it != trips.rend(); ++it)
            canvas = composite_over(
                rasterize(doc.only(it->record.removed_path_ids), kResolution, ColorRGBA::transparent()), canvas);
        if (!(canvas == rasterize(doc, kResolution)))
            ++rebuild_bad;
    }
    return {chain_bad == 0 && count_bad == 0 && rebuild_bad == 0,
            fmt("%d triplets over %d docs; chain breaks %d, count mismatches %d, rebuild failures %d", triplets,
                kChainDocs, chain_bad, count_bad, rebuild_bad)};
}

// A box covering cell centers [c0, c1] x [r0, r1] with random slack.
BBoxNorm random_box(std::mt19937_64& rng, int rows, int cols, int c0, int c1, int r0, int r1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto lo = [&](int c, int n) { return (c + 0.5 * u(rng)) / n; };
    auto hi = [&](int c, int n) { return (c + 0.5 + 0.5 * u(rng)) / n + 1e-12; };
    return {lo(c0, cols), lo(r0, rows), std::min(1.0, hi(c1, cols)), std::min(1.0, hi(r1, rows))};
}

Outcome attention_conformance() {
    std::mt19937_64 rng(50000);
    auto pick = [&](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
    long long entries = 0, mismatches = 0;
    int monotone_bad = 0;
    for (int c = 0; c < kAttentionCases; ++c) {
        const int grid = (c % 2 == 0) ? 4 : 8;
        const int n = (c / 2) % 4;
        TokenLayout l;
        l.global_span = {0, pick(1, 4)};
        int cursor = l.global_span.length;
        for (int i = 0; i < n; ++i) {
            l.instance_spans.push_back({cursor, pick(1, 3)});
            cursor += l.instance_spans.back().length;
        }
        cursor += pick(0, 2); // unassigned gap tokens
        l.grid_rows = l.grid_cols = grid;
        l.image_offset = cursor;
        l.total_tokens = cursor + grid * grid;

        std::vector<BBoxNorm> boxes, shrunk;
        for (int i = 0; i < n; ++i) {
            int c0 = pick(0, grid - 1), c1 = pick(0, grid - 1), r0 = pick(0, grid - 1), r1 = pick(0, grid - 1);
            if (c0 > c1)
                std::swap(c0, c1);
            if (r0 > r1)
                std::swap(r0, r1);
            const BBoxNorm b = random_box(rng, grid, grid, c0, c1, r0, r1);
            boxes.push_back(b);
            // Shrink to a sub-range of cells inside b.
            const int sc0 = pick(c0, c1), sc1 = pick(sc0, c1), sr0 = pick(r0, r1), sr1 = pick(sr0, r1);
            BBoxNorm s = random_box(rng, grid, grid, sc0, sc1, sr0, sr1);
            s.x0 = std::max(s.x0, b.x0);
            s.y0 = std::max(s.y0, b.y0);
            s.x1 = std::min(s.x1, b.x1);
            s.y1 = std::min(s.y1, b.y1);
            shrunk.push_back(s);
        }
        const bool allow_global = pick(0, 3) == 0;
        const AttentionPlan plan = build_joint_mask(l, boxes, {allow_global});
        for (int q = 0; q < l.total_tokens; ++q)
            for (int k = 0; k < l.total_tokens; ++k) {
                ++entries;
                if (plan.at(q, k) != testing::reference_allowed(l, boxes, q, k, allow_global))
                    ++mismatches;
            }
        const AttentionPlan small = build_joint_mask(l, shrunk, {allow_global});
        for (int q = 0; q < l.total_tokens; ++q)
            for (int k = 0; k < l.total_tokens; ++k)
                if (small.at(q, k) && !plan.at(q, k)) {
                    ++monotone_bad;
                    q = l.total_tokens;
                    break;
                }
    }
    return {mismatches == 0 && monotone_bad == 0,
            fmt("%lld/%lld entries differ from the reference over %d cases; %d shrinkage violations", mismatches,
                entries, kAttentionCases, monotone_bad)};
}

Outcome graph_conformance() {
    const LayerGraph g = parse_graph(testing::cat_example_graph_block());
    const std::set<std::string> expected{"N3", "N9", "N10", "N11", "N12", "N15", "N16", "N17"};
    const bool top_ok = as_set(non_occluded_nodes(g)) == expected;
    const std::string once = serialize_graph(g);
    const bool stable = serialize_graph(parse_graph(once)) == once;

    std::mt19937_64 rng(60000);
    const std::string alphabet = "{}[]\":,/ \nNoccludesinterrupted_shape0123456789abc";
    int rejected = 0, accepted = 0, crashed = 0;
    for (int i = 0; i < kGraphFuzzInputs; ++i) {
        std::string s = once;
        const int edits = 1 + static_cast<int>(rng() % 8);
        for (int e = 0; e < edits && !s.empty(); ++e) {
            const std::size_t pos = rng() % s.size();
            switch (rng() % 4) {
            case 0:
                s[pos] = alphabet[rng() % alphabet.size()];
                break;
            case 1:
                s.erase(pos, 1 + rng() % 16);
                break;
            case 2:
                s.insert(pos, 1, alphabet[rng() % alphabet.size()]);
                break;
            default:
                s.resize(pos);
            }
        }
        try {
            parse_graph(s);
            ++accepted;
        } catch (const Error&) {
            ++rejected;
        } catch (...) {
            ++crashed;
        }
    }
    return {top_ok && stable && crashed == 0,
            fmt("non-occluded set %s, serialization %s; fuzz: %d rejected with typed errors, %d still valid, %d "
                "untyped failures",
                top_ok ? "exact" : "WRONG", stable ? "byte-stable" : "UNSTABLE", rejected, accepted, crashed)};
}

double brute_chamfer(const PointCloud& a, const PointCloud& b) {
    auto one_way = [](const PointCloud& x, const PointCloud& y) {
        double sum = 0;
        for (const auto& p : x.points) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& q : y.points)
                best = std::min(best, std::hypot(p.x - q.x, p.y - q.y));
            sum += best;
        }
        return sum / double(x.points.size());
    };
    return one_way(a, b) + one_way(b, a);
}

Outcome metric_identities() {
    const SvgDoc doc = testing::random_doc(70000);
    const PointCloud x = sample_outline(doc.paths[0]);
    const bool cd_zero = chamfer_distance(x, x) == 0.0;
    const bool pi_zero = path_irregularity(doc, doc) == 0.0;
    const RasterImage black(64, 64, ColorRGBA::black()), white(64, 64, ColorRGBA::white());
    const bool mse_ok = mse(black, black) == 0.0 && mse(black, white) == 1.0;

    std::mt19937_64 rng(70001);
    std::uniform_real_distribution<double> u(-100, 100);
    double worst = 0;
    for (int i = 0; i < kChamferPairs; ++i) {
        PointCloud a, b;
        a.points.resize(1 + rng() % 300);
        b.points.resize(1 + rng() % 300);
        for (auto& p : a.points)
            p = {u(rng), u(rng)};
        for (auto& p : b.points)
            p = {u(rng), u(rng)};
        worst = std::max(worst, std::abs(chamfer_distance(a, b) - brute_chamfer(a, b)));
    }

    int drop_bad = 0;
    for (int n = 1; n <= 30; ++n) {
        const SvgDoc d = testing::random_doc(71000 + n, {n, n, kResolution, true});
        const SvgDoc a = drop_paths(d, kDropFraction, 7), b = drop_paths(d, kDropFraction, 7);
        const auto expect_removed = static_cast<std::size_t>(std::lround(kDropFraction * n));
        if (d.paths.size() - a.paths.size() != expect_removed || emit_svg_text(a) != emit_svg_text(b))
            ++drop_bad;
    }
    const bool ok = cd_zero && pi_zero && mse_ok && worst <= kChamferTol && drop_bad == 0;
    return {ok, fmt("CD(x,x)=0 %s, PI(X,X)=0 %s, MSE extremes %s; CD vs brute force max |diff| %.2e (tol %.0e) "
                    "over %d pairs; drop_paths failures %d/30",
                    cd_zero ? "yes" : "no", pi_zero ? "yes" : "no", mse_ok ? "ok" : "WRONG", worst, kChamferTol,
                    kChamferPairs, drop_bad)};
}

SvgDoc n_squares(int n) {
    SvgDoc d;
    d.viewbox = {0, 0, 512, 512};
    for (int i = 0; i < n; ++i)
        d.paths.push_back(make_rect("s" + std::to_string(i), 8 * i, 8 * i, 10, 10, {0, 0, 192, 255}));
    return d;
}

Outcome corpus_filters() {
    const bool reject31 = !filter_by_path_count(n_squares(31), kMaxPaths);
    const bool accept30 = filter_by_path_count(n_squares(30), kMaxPaths);

    // Through the corpus builder as well.
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "layerpeel_acceptance_filters";
    fs::remove_all(root);
    fs::create_directories(root / "in");
    std::ofstream(root / "in" / "a30.svg") << emit_svg_text(n_squares(30));
    std::ofstream(root / "in" / "b31.svg") << emit_svg_text(n_squares(31));
    CorpusConfig cc;
    cc.triplets.with_panels = false;
    const CorpusManifest m = build_corpus(root / "in", root / "out", cc);
    const bool corpus_ok = m.accepted == std::vector<std::string>{"a30"} && m.rejected.size() == 1 &&
                           m.rejected[0].reason.rfind("path_count", 0) == 0;
    fs::remove_all(root);

    std::mt19937_64 rng(80000);
    std::uniform_real_distribution<double> off(-1000, 1000), size(1, 5000);
    int norm_bad = 0;
    for (int i = 0; i < 200; ++i) {
        SvgDoc d = n_squares(3);
        d.viewbox = {off(rng), off(rng), size(rng), size(rng)};
        const SvgDoc once = normalize_viewbox(d, kResolution);
        const SvgDoc twice = normalize_viewbox(once, kResolution);
        if (!(once.viewbox == ViewBox{0, 0, 512, 512}) || emit_svg_text(once) != emit_svg_text(twice))
            ++norm_bad;
    }
    return {reject31 && accept30 && corpus_ok && norm_bad == 0,
            fmt("31 paths rejected %s, 30 accepted %s, corpus builder %s; normalization failures %d/200",
                reject31 ? "yes" : "no", accept30 ? "yes" : "no", corpus_ok ? "agrees" : "DISAGREES", norm_bad)};
}

Outcome gateway_robustness() {
    EndpointConfig cfg;
    cfg.timeout_ms = 5000;
    cfg.max_retries = 3;
    cfg.backoff_initial_ms = 5;

    std::ifstream f(testing::fixture_dir() / "replay_session.jsonl", std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    const auto fixture = testing::fixtures_from_jsonl(ss.str());
    const SvgDoc doc = testing::replay_fixture_doc();
    const RasterImage input = rasterize(doc, kResolution);

    auto replay = [&](std::vector<testing::StubReply> extra_faults) {
        testing::StubServer server;
        for (auto& fault : extra_faults)
            server.enqueue("/remove", fault);
        for (const auto& e : fixture)
            server.enqueue(e.path, e.reply);
        cfg.base_url = server.url();
        RemoteAnnotator ann(cfg);
        RemoteRemover rem(cfg);
        PeelTrace t = run(input, ann, rem);
        std::vector<std::string> steps;
        for (const auto& s : t.steps)
            steps.push_back(step_to_json(s));
        return std::tuple{emit_svg_text(t.final_doc), steps, t.termination, rem.endpoint().stats().retries};
    };
    const auto [svg_a, steps_a, term_a, retries_a] = replay({});
    const auto [svg_b, steps_b, term_b, retries_b] = replay({});
    const bool deterministic = term_a == Termination::Blank && svg_a == svg_b && steps_a == steps_b;
    const PeelTrace reference = oracle_peel(doc, 1.0);
    const bool matches_oracle = svg_a == emit_svg_text(reference.final_doc);

    const auto [svg_c, steps_c, term_c, retries_c] = replay({{500, "injected"}, {503, "injected"}});
    const bool retried = term_c == Termination::Blank && retries_c == kExpectedRetries && svg_c == svg_a;

    testing::StubServer bad;
    const std::string garbage = "<layer_graph>{\"nodes\": [</layer_graph><caption>x</caption>";
    bad.enqueue("/annotate", {200, nlohmann::json{{"protocol_version", 1}, {"text", garbage}}.dump()});
    cfg.base_url = bad.url();
    RemoteAnnotator ann(cfg);
    RemoteRemover rem(cfg);
    const PeelTrace failed = run(input, ann, rem);
    const bool typed = failed.termination == Termination::BackendFailure && failed.failure &&
                       failed.failure->kind == "ProtocolError" && failed.failure->raw_payload == garbage;

    return {deterministic && matches_oracle && retried && typed,
            fmt("replay %s and %s the oracle; 2 injected 5xx -> %llu retries, run %s; malformed graph -> %s",
                deterministic ? "deterministic" : "NONDETERMINISTIC", matches_oracle ? "matches" : "DIFFERS FROM",
                static_cast<unsigned long long>(retries_c), term_c == Termination::Blank ? "completed" : "failed",
                typed ? "ProtocolError with raw payload" : "WRONG failure record")};
}

} // namespace

int main() {
    report(1, "topmost set equals painter's-algorithm oracle", topmost_equivalence);
    report(2, "oracle peel round trip", round_trip);
    report(3, "diff mask equals removed coverage", diff_mask_exactness);
    report(4, "dataset chaining identity", dataset_chaining);
    report(5, "attention plan rule conformance", attention_conformance);
    report(6, "layer graph conformance", graph_conformance);
    report(7, "metric identities", metric_identities);
    report(8, "corpus filters and normalization", corpus_filters);
    report(9, "gateway robustness", gateway_robustness);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures;
}
