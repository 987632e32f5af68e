#include "layerpeel/metrics.hpp"

#include "layerpeel/caption.hpp"
#include "layerpeel/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace layerpeel {

PointCloud sample_outline(const PathShape& path, int samples) {
    if (samples < 16)
        throw std::invalid_argument("outline sampling needs at least 16 samples");
    double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
    for (const auto& sp : path.subpaths)
        for (const auto& s : sp)
            for (Point p : {s.p0, s.p1, s.p2, s.p3}) {
                lo_x = std::min(lo_x, p.x);
                lo_y = std::min(lo_y, p.y);
                hi_x = std::max(hi_x, p.x);
                hi_y = std::max(hi_y, p.y);
            }
    if (hi_x < lo_x)
        throw EmptyCloud("path " + path.id + " has no outline");
    const double tol = std::max(std::max(hi_x - lo_x, hi_y - lo_y) * 1e-3, 1e-9);

    // Closed polylines laid end to end; samples at k * L / n along the chain.
    std::vector<std::pair<Point, Point>> edges;
    std::vector<double> cumulative{0.0};
    for (const auto& ring : flatten_path(path, tol))
        for (std::size_t i = 0; i < ring.size(); ++i) {
            const Point a = ring[i], b = ring[(i + 1) % ring.size()];
            edges.emplace_back(a, b);
            cumulative.push_back(cumulative.back() + std::hypot(b.x - a.x, b.y - a.y));
        }
    if (edges.empty())
        throw EmptyCloud("path " + path.id + " has no outline");
    const double total = cumulative.back();
    PointCloud out;
    out.points.reserve(static_cast<std::size_t>(samples));
    std::size_t e = 0;
    for (int k = 0; k < samples; ++k) {
        const double s = total * k / samples;
        while (e + 1 < edges.size() && cumulative[e + 1] <= s)
            ++e;
        const double len = cumulative[e + 1] - cumulative[e];
        const double t = len > 0 ? (s - cumulative[e]) / len : 0.0;
        const auto& [a, b] = edges[e];
        out.points.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
    }
    return out;
}

namespace {

// Mean distance from each point of `from` to its nearest point in `to`.
// Sweep over `to` sorted by x; exact, pruned by |dx| >= best.
double directed_mean(const std::vector<Point>& from, std::vector<Point> to) {
    std::sort(to.begin(), to.end(), [](Point a, Point b) { return a.x < b.x; });
    double sum = 0;
    for (const Point q : from) {
        const auto mid = std::lower_bound(to.begin(), to.end(), q.x, [](Point p, double x) { return p.x < x; });
        double best = std::numeric_limits<double>::infinity();
        for (auto it = mid; it != to.end(); ++it) {
            const double dx = it->x - q.x;
            if (dx >= best)
                break;
            best = std::min(best, std::sqrt(dx * dx + (it->y - q.y) * (it->y - q.y)));
        }
        for (auto it = mid; it != to.begin();) {
            --it;
            const double dx = q.x - it->x;
            if (dx >= best)
                break;
            best = std::min(best, std::sqrt(dx * dx + (it->y - q.y) * (it->y - q.y)));
        }
        sum += best;
    }
    return sum / static_cast<double>(from.size());
}

} // namespace

double chamfer_distance(const PointCloud& a, const PointCloud& b) {
    if (a.points.empty() || b.points.empty())
        throw EmptyCloud("chamfer distance of an empty cloud");
    return directed_mean(a.points, b.points) + directed_mean(b.points, a.points);
}

double path_irregularity(const SvgDoc& generated, const SvgDoc& truth, const IrregularityOptions& options) {
    if (generated.paths.empty() || truth.paths.empty())
        throw EmptyDocument("path irregularity needs non-empty documents");
    std::vector<PointCloud> truth_clouds;
    for (const auto& p : truth.paths)
        truth_clouds.push_back(sample_outline(p, options.samples_per_path));
    double sum = 0;
    for (const auto& g : generated.paths) {
        const PointCloud cloud = sample_outline(g, options.samples_per_path);
        bool same_color_exists = false;
        if (options.color_aware)
            for (const auto& t : truth.paths)
                same_color_exists = same_color_exists || t.fill == g.fill;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < truth.paths.size(); ++i) {
            if (same_color_exists && truth.paths[i].fill != g.fill)
                continue;
            best = std::min(best, chamfer_distance(cloud, truth_clouds[i]));
        }
        sum += best;
    }
    return sum / static_cast<double>(generated.paths.size());
}

double mse(const RasterImage& a, const RasterImage& b) {
    if (a.width() != b.width() || a.height() != b.height())
        throw DimensionMismatch("mse of differently sized images");
    const auto& da = a.data();
    const auto& db = b.data();
    double sum = 0;
    for (std::size_t i = 0; i < da.size(); i += 4)
        for (std::size_t c = 0; c < 3; ++c) {
            const double d = (static_cast<double>(da[i + c]) - static_cast<double>(db[i + c])) / 255.0;
            sum += d * d;
        }
    return sum / (static_cast<double>(a.width()) * a.height() * 3);
}

SvgDoc drop_paths(const SvgDoc& doc, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0))
        throw std::invalid_argument("drop fraction must be in [0, 1)");
    const std::size_t n = doc.paths.size();
    const std::size_t k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    const std::set<std::size_t> dropped(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    SvgDoc out;
    out.viewbox = doc.viewbox;
    for (std::size_t i = 0; i < n; ++i)
        if (!dropped.count(i))
            out.paths.push_back(doc.paths[i]);
    return out;
}

double semantics_drop(const SvgDoc& doc, std::string_view caption, EmbeddingService& service,
                      const SemanticsOptions& options) {
    if (options.trials <= 0)
        throw std::invalid_argument("semantics_drop needs at least one trial");
    try {
        const double full = service.similarity(caption, rasterize(doc, options.resolution));
        double sum = 0;
        for (int t = 0; t < options.trials; ++t) {
            const SvgDoc dropped = drop_paths(doc, options.fraction, options.seed + static_cast<std::uint64_t>(t));
            sum += full - service.similarity(caption, rasterize(dropped, options.resolution));
        }
        return sum / options.trials;
    } catch (const ServiceUnavailable&) {
        throw;
    } catch (const BackendError& e) {
        throw ServiceUnavailable(e.what());
    }
}

namespace {

const char* const kColumns[] = {"Path Semantics", "Path Irregularity", "MSE", "LPIPS"};

std::vector<std::optional<double>> values_of(const MetricRow& r) {
    return {r.path_semantics, r.path_irregularity, r.mse, r.lpips};
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

std::string results_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    os << "Method";
    for (const char* c : kColumns)
        os << ',' << c;
    os << '\n';
    for (const auto& r : rows) {
        os << csv_field(r.name);
        for (const auto& v : values_of(r)) {
            os << ',';
            if (v) {
                char buf[64];
                std::snprintf(buf, sizeof buf, "%.6g", *v);
                os << buf;
            }
        }
        os << '\n';
    }
    return os.str();
}

std::string results_json(const std::vector<MetricRow>& rows) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json o;
        o["Method"] = r.name;
        const auto vals = values_of(r);
        for (std::size_t i = 0; i < vals.size(); ++i)
            o[kColumns[i]] = vals[i] ? nlohmann::ordered_json(*vals[i]) : nlohmann::ordered_json(nullptr);
        arr.push_back(std::move(o));
    }
    return arr.dump(2) + "\n";
}

namespace {

std::set<std::string> svg_names(const std::filesystem::path& dir) {
    std::set<std::string> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".svg")
            out.insert(e.path().filename().string());
    return out;
}

SvgDoc load(const std::filesystem::path& p, int resolution) {
    std::ifstream f(p, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return normalize_viewbox(parse_svg(ss.str()), resolution);
}

} // namespace

EvalReport evaluate_directories(const std::filesystem::path& generated_dir, const std::filesystem::path& truth_dir,
                                const EvalOptions& options) {
    const auto gen = svg_names(generated_dir);
    const auto truth = svg_names(truth_dir);
    for (const auto& g : gen)
        if (!truth.count(g))
            throw UnpairedFile(g + " has no ground-truth counterpart");
    for (const auto& t : truth)
        if (!gen.count(t))
            throw UnpairedFile(t + " has no generated counterpart");

    EvalReport report;
    report.mean.name = "mean";
    const std::vector<std::string> names(gen.begin(), gen.end());
    report.per_file.resize(names.size());
    auto evaluate_one = [&](const std::string& name) {
        const SvgDoc g = load(generated_dir / name, options.resolution);
        const SvgDoc t = load(truth_dir / name, options.resolution);
        MetricRow row;
        row.name = name;
        row.path_irregularity = path_irregularity(g, t, options.irregularity);
        const RasterImage rg = rasterize(g, options.resolution);
        const RasterImage rt = rasterize(t, options.resolution);
        row.mse = mse(rg, rt);
        if (options.service) {
            try {
                SemanticsOptions so = options.semantics;
                so.resolution = options.resolution;
                // Caption from the ground truth: the text the generated drawing should still depict.
                row.path_semantics = semantics_drop(g, geometric_caption(t.paths, t.viewbox), *options.service, so);
                row.lpips = options.service->perceptual_distance(rg, rt);
            } catch (const BackendError&) {
                // Absent, never fabricated.
            } catch (const ServiceUnavailable&) {
            }
        }
        return row;
    };

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < names.size(); i = next++) {
            try {
                report.per_file[i] = evaluate_one(names[i]);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = names.size();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(names.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);

    auto mean_of = [&](std::optional<double> MetricRow::*field) -> std::optional<double> {
        if (report.per_file.empty())
            return std::nullopt;
        double sum = 0;
        for (const auto& r : report.per_file) {
            if (!(r.*field))
                return std::nullopt;
            sum += *(r.*field);
        }
        return sum / static_cast<double>(report.per_file.size());
    };
    report.mean.path_semantics = mean_of(&MetricRow::path_semantics);
    report.mean.path_irregularity = mean_of(&MetricRow::path_irregularity);
    report.mean.mse = mean_of(&MetricRow::mse);
    report.mean.lpips = mean_of(&MetricRow::lpips);
    return report;
}

} // namespace layerpeel
