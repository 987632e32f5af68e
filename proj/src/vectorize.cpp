#include "layerpeel/vectorize.hpp"

#include "layerpeel/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>

namespace layerpeel {

double signed_area(const Polygon& ring) {
    double a = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& p = ring[i];
        const Point& q = ring[(i + 1) % n];
        a += p.x * q.y - q.x * p.y;
    }
    return 0.5 * a;
}

// ---------------------------------------------------------------------------
// Tracing

namespace {

enum Dir : std::uint8_t { E = 0, S = 1, W = 2, N = 3 };
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};
// Pixel owning an edge that leaves vertex (vx, vy) in direction d; the owner
// lies to the right of travel.
constexpr int kOwnDx[4] = {0, -1, -1, 0};
constexpr int kOwnDy[4] = {0, 0, -1, -1};
// Pixel on the left of that edge, which must not belong to the component.
constexpr int kLeftDx[4] = {0, 0, -1, -1};
constexpr int kLeftDy[4] = {-1, 0, 0, -1};

class Tracer {
public:
    Tracer(int w, int h, const std::vector<int>& labels)
        : w_(w), h_(h), labels_(labels), visited_(static_cast<std::size_t>(w + 1) * (h + 1), 0) {}

    bool in(int x, int y, int label) const {
        return x >= 0 && y >= 0 && x < w_ && y < h_ && labels_[static_cast<std::size_t>(y) * w_ + x] == label;
    }

    bool is_edge(int vx, int vy, int d, int label) const {
        return in(vx + kOwnDx[d], vy + kOwnDy[d], label) && !in(vx + kLeftDx[d], vy + kLeftDy[d], label);
    }

    bool visited(int vx, int vy, int d) const {
        return visited_[static_cast<std::size_t>(vy) * (w_ + 1) + vx] & (1u << d);
    }

    Polygon trace(int vx0, int vy0, int d0, int label) {
        Polygon ring;
        int vx = vx0, vy = vy0, d = d0;
        int prev_dir = -1;
        while (true) {
            visited_[static_cast<std::size_t>(vy) * (w_ + 1) + vx] |= static_cast<std::uint8_t>(1u << d);
            if (d != prev_dir)
                ring.push_back({static_cast<double>(vx), static_cast<double>(vy)});
            const int ox = vx + kOwnDx[d], oy = vy + kOwnDy[d];
            vx += kDx[d];
            vy += kDy[d];
            prev_dir = d;
            // Candidate continuations: right turn, straight, left turn. At a
            // saddle both a right and a left turn exist; keep the same pixel.
            int next = -1;
            for (int turn : {1, 0, 3}) {
                const int nd = (d + turn) & 3;
                if (!is_edge(vx, vy, nd, label))
                    continue;
                if (next < 0) {
                    next = nd;
                    if (vx + kOwnDx[nd] == ox && vy + kOwnDy[nd] == oy)
                        break;
                } else if (vx + kOwnDx[nd] == ox && vy + kOwnDy[nd] == oy) {
                    next = nd;
                    break;
                }
            }
            if (next < 0)
                throw std::logic_error("trace_regions: open boundary");
            d = next;
            if (vx == vx0 && vy == vy0 && d == d0)
                break;
        }
        // The start vertex is a corner unless the loop arrives heading d0.
        if (prev_dir == d0 && ring.size() > 1)
            ring.erase(ring.begin());
        return ring;
    }

private:
    int w_, h_;
    const std::vector<int>& labels_;
    std::vector<std::uint8_t> visited_;
};

std::uint32_t pack_rgb(const ColorRGBA& c) { return (std::uint32_t(c.r) << 16) | (std::uint32_t(c.g) << 8) | c.b; }

} // namespace

std::vector<TracedRegion> trace_regions(const RasterImage& region, ColorGrouping grouping) {
    const int w = region.width(), h = region.height();
    std::vector<TracedRegion> out;
    if (w == 0 || h == 0)
        return out;
    const std::size_t npx = static_cast<std::size_t>(w) * h;

    std::vector<std::int32_t> key(npx, -1);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const ColorRGBA c = region.pixel(x, y);
            if (c.a < 128)
                continue;
            std::int32_t k = grouping == ColorGrouping::Exact
                                 ? static_cast<std::int32_t>(pack_rgb(c))
                                 : static_cast<std::int32_t>(((c.r >> 5) << 6) | ((c.g >> 5) << 3) | (c.b >> 5));
            key[static_cast<std::size_t>(y) * w + x] = k;
        }

    std::vector<int> labels(npx, -1);
    std::vector<std::vector<std::size_t>> members;
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < npx; ++start) {
        if (key[start] < 0 || labels[start] >= 0)
            continue;
        const int label = static_cast<int>(members.size());
        members.emplace_back();
        auto& list = members.back();
        labels[start] = label;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            list.push_back(i);
            const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
            const std::size_t nb[4] = {i - 1, i + 1, i - w, i + w};
            const bool ok[4] = {x > 0, x + 1 < w, y > 0, y + 1 < h};
            for (int k = 0; k < 4; ++k)
                if (ok[k] && labels[nb[k]] < 0 && key[nb[k]] == key[start]) {
                    labels[nb[k]] = label;
                    stack.push_back(nb[k]);
                }
        }
        std::sort(list.begin(), list.end());
    }

    Tracer tracer(w, h, labels);
    out.reserve(members.size());
    for (std::size_t label = 0; label < members.size(); ++label) {
        const auto& list = members[label];
        TracedRegion reg;
        if (grouping == ColorGrouping::Exact) {
            reg.color = region.pixel(static_cast<int>(list.front() % w), static_cast<int>(list.front() / w));
        } else {
            std::map<std::uint32_t, std::size_t> counts;
            for (std::size_t i : list)
                ++counts[pack_rgb(region.pixel(static_cast<int>(i % w), static_cast<int>(i / w)))];
            auto best = counts.begin();
            for (auto it = counts.begin(); it != counts.end(); ++it)
                if (it->second > best->second)
                    best = it;
            reg.color = {std::uint8_t(best->first >> 16), std::uint8_t(best->first >> 8), std::uint8_t(best->first), 255};
        }
        reg.color.a = 255;

        std::vector<Polygon> positive;
        const int lab = static_cast<int>(label);
        for (std::size_t i : list) {
            const int x = static_cast<int>(i % w), y = static_cast<int>(i / w);
            const int starts[4][3] = {{x, y, E}, {x + 1, y, S}, {x + 1, y + 1, W}, {x, y + 1, N}};
            for (const auto& s : starts) {
                if (!tracer.is_edge(s[0], s[1], s[2], lab) || tracer.visited(s[0], s[1], s[2]))
                    continue;
                Polygon ring = tracer.trace(s[0], s[1], s[2], lab);
                if (signed_area(ring) > 0)
                    positive.push_back(std::move(ring));
                else
                    reg.holes.push_back(std::move(ring));
            }
        }
        // One outer ring per 4-connected component; extra positive rings are
        // kept as additional subpaths should they ever occur.
        reg.outer = std::move(positive.front());
        for (std::size_t k = 1; k < positive.size(); ++k)
            reg.holes.push_back(std::move(positive[k]));
        out.push_back(std::move(reg));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Simplification

namespace {

double seg_dist(Point p, Point a, Point b) {
    const Point ab = b - a;
    const double len2 = ab.x * ab.x + ab.y * ab.y;
    double t = 0.0;
    if (len2 > 0.0)
        t = std::clamp(((p.x - a.x) * ab.x + (p.y - a.y) * ab.y) / len2, 0.0, 1.0);
    const Point q = a + ab * t;
    return std::hypot(p.x - q.x, p.y - q.y);
}

double cross3(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

std::pair<std::size_t, std::size_t> farthest_pair(const Polygon& ring) {
    std::vector<std::size_t> idx(ring.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return ring[a].x != ring[b].x ? ring[a].x < ring[b].x : (ring[a].y != ring[b].y ? ring[a].y < ring[b].y : a < b);
    });
    std::vector<std::size_t> hull;
    for (int pass = 0; pass < 2; ++pass) {
        const std::size_t base = hull.size();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t i = pass == 0 ? idx[k] : idx[idx.size() - 1 - k];
            while (hull.size() >= base + 2 && cross3(ring[hull[hull.size() - 2]], ring[hull.back()], ring[i]) <= 0)
                hull.pop_back();
            hull.push_back(i);
        }
        hull.pop_back();
    }
    std::pair<std::size_t, std::size_t> best{0, ring.size() / 2};
    double best_d = -1.0;
    for (std::size_t a = 0; a < hull.size(); ++a)
        for (std::size_t b = a + 1; b < hull.size(); ++b) {
            const Point d = ring[hull[a]] - ring[hull[b]];
            const double d2 = d.x * d.x + d.y * d.y;
            if (d2 > best_d) {
                best_d = d2;
                best = std::minmax(hull[a], hull[b]);
            }
        }
    if (best.first == best.second)
        best = {0, ring.size() / 2};
    return best;
}

// Marks kept vertices on the cyclic chain from..to (both kept by the caller).
void dp_chain(const Polygon& ring, std::size_t from, std::size_t to, double eps, std::vector<bool>& keep) {
    const std::size_t n = ring.size();
    auto span = [&](std::size_t a, std::size_t b) { return (b + n - a) % n; };
    if (span(from, to) < 2)
        return;

    // The farthest interior vertex of each half is always kept.
    {
        std::size_t far = (from + 1) % n;
        double far_d = -1.0;
        for (std::size_t k = (from + 1) % n; k != to; k = (k + 1) % n) {
            const double d = seg_dist(ring[k], ring[from], ring[to]);
            if (d > far_d) {
                far_d = d;
                far = k;
            }
        }
        keep[far] = true;
    }

    std::vector<std::pair<std::size_t, std::size_t>> work{{from, to}};
    while (!work.empty()) {
        auto [a, b] = work.back();
        work.pop_back();
        if (span(a, b) < 2)
            continue;
        // Split at a forced vertex inside (a, b) first so segments never skip it.
        std::size_t split = n;
        for (std::size_t k = (a + 1) % n; k != b; k = (k + 1) % n)
            if (keep[k]) {
                split = k;
                break;
            }
        if (split == n) {
            double far_d = -1.0;
            for (std::size_t k = (a + 1) % n; k != b; k = (k + 1) % n) {
                const double d = seg_dist(ring[k], ring[a], ring[b]);
                if (d > far_d) {
                    far_d = d;
                    split = k;
                }
            }
            if (far_d <= eps)
                continue;
            keep[split] = true;
        }
        work.push_back({a, split});
        work.push_back({split, b});
    }
}

} // namespace

Polygon simplify(const Polygon& ring, double epsilon) {
    if (ring.size() < 3)
        throw DegeneratePolygon("simplify requires at least 3 vertices");
    if (!(epsilon >= 0.0))
        throw std::invalid_argument("simplify: epsilon must be non-negative");
    if (epsilon == 0.0)
        return ring;
    const auto [i, j] = farthest_pair(ring);
    std::vector<bool> keep(ring.size(), false);
    keep[i] = keep[j] = true;
    dp_chain(ring, i, j, epsilon, keep);
    dp_chain(ring, j, i, epsilon, keep);
    Polygon out;
    for (std::size_t k = 0; k < ring.size(); ++k)
        if (keep[k])
            out.push_back(ring[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Curve fitting

namespace {

Point normalized(Point v) {
    const double l = std::hypot(v.x, v.y);
    return l > 0 ? v * (1.0 / l) : Point{0, 0};
}

double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }

CubicSegment fit_one(const std::vector<Point>& pts, const std::vector<double>& u, Point t1, Point t2) {
    const Point p0 = pts.front(), p3 = pts.back();
    double c00 = 0, c01 = 0, c11 = 0, x0 = 0, x1 = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const double t = u[k], s = 1 - t;
        const double b0 = s * s * s, b1 = 3 * t * s * s, b2 = 3 * t * t * s, b3 = t * t * t;
        const Point a1 = t1 * b1, a2 = t2 * b2;
        c00 += dot(a1, a1);
        c01 += dot(a1, a2);
        c11 += dot(a2, a2);
        const Point tmp = pts[k] - (p0 * (b0 + b1) + p3 * (b2 + b3));
        x0 += dot(a1, tmp);
        x1 += dot(a2, tmp);
    }
    const double det = c00 * c11 - c01 * c01;
    const double seg = std::hypot(p3.x - p0.x, p3.y - p0.y);
    double al = seg / 3, ar = seg / 3;
    if (std::abs(det) > 1e-12) {
        const double l = (x0 * c11 - x1 * c01) / det;
        const double r = (c00 * x1 - c01 * x0) / det;
        if (l > 1e-6 * seg && r > 1e-6 * seg) {
            al = l;
            ar = r;
        }
    }
    return {p0, p0 + t1 * al, p3 + t2 * ar, p3};
}

void fit_run(const std::vector<Point>& pts, Point t1, Point t2, double tol, int depth, Subpath& out) {
    if (pts.size() <= 2 || depth > 12) {
        out.push_back(CubicSegment::line(pts.front(), pts.back()));
        return;
    }
    std::vector<double> u(pts.size(), 0.0);
    for (std::size_t k = 1; k < pts.size(); ++k)
        u[k] = u[k - 1] + std::hypot(pts[k].x - pts[k - 1].x, pts[k].y - pts[k - 1].y);
    if (u.back() <= 0) {
        out.push_back(CubicSegment::line(pts.front(), pts.back()));
        return;
    }
    for (double& v : u)
        v /= u.back();
    const CubicSegment c = fit_one(pts, u, t1, t2);
    double worst = 0;
    std::size_t worst_k = pts.size() / 2;
    for (std::size_t k = 1; k + 1 < pts.size(); ++k) {
        const Point q = c.eval(u[k]);
        const double d = std::hypot(q.x - pts[k].x, q.y - pts[k].y);
        if (d > worst) {
            worst = d;
            worst_k = k;
        }
    }
    if (worst <= tol) {
        out.push_back(c);
        return;
    }
    const Point tc = normalized(pts[worst_k - 1] - pts[worst_k + 1]);
    fit_run({pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(worst_k) + 1}, t1, tc, tol, depth + 1, out);
    fit_run({pts.begin() + static_cast<std::ptrdiff_t>(worst_k), pts.end()}, tc * -1.0, t2, tol, depth + 1, out);
}

} // namespace

Subpath fit_beziers(const Polygon& ring, double corner_deg, double tolerance) {
    if (ring.size() < 3)
        throw DegeneratePolygon("fit_beziers requires at least 3 vertices");
    const std::size_t n = ring.size();
    const double cos_limit = std::cos(corner_deg * std::numbers::pi / 180.0);
    std::vector<std::size_t> corners;
    for (std::size_t k = 0; k < n; ++k) {
        const Point din = normalized(ring[k] - ring[(k + n - 1) % n]);
        const Point dout = normalized(ring[(k + 1) % n] - ring[k]);
        if (dot(din, dout) < cos_limit)
            corners.push_back(k);
    }
    if (corners.empty())
        corners = {0, n / 2};
    else if (corners.size() == 1)
        corners.push_back((corners[0] + n / 2) % n);
    std::sort(corners.begin(), corners.end());

    Subpath out;
    for (std::size_t c = 0; c < corners.size(); ++c) {
        const std::size_t a = corners[c];
        const std::size_t b = corners[(c + 1) % corners.size()];
        std::vector<Point> pts;
        for (std::size_t k = a;; k = (k + 1) % n) {
            pts.push_back(ring[k]);
            if (k == b && pts.size() > 1)
                break;
        }
        if (pts.size() <= 2) {
            out.push_back(CubicSegment::line(pts.front(), pts.back()));
            continue;
        }
        const Point t1 = normalized(pts[1] - pts[0]);
        const Point t2 = normalized(pts[pts.size() - 2] - pts.back());
        fit_run(pts, t1, t2, tolerance, 0, out);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layers

namespace {

Subpath ring_to_subpath(const Polygon& ring) {
    Subpath sp;
    sp.reserve(ring.size());
    for (std::size_t k = 0; k < ring.size(); ++k)
        sp.push_back(CubicSegment::line(ring[k], ring[(k + 1) % ring.size()]));
    return sp;
}

} // namespace

VectorLayer vectorize(const RasterImage& region, int iteration_index, const VectorizeOptions& options) {
    VectorLayer layer;
    layer.iteration_index = iteration_index;
    const auto regions = trace_regions(region, options.grouping);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        PathShape shape;
        shape.id = "layer" + std::to_string(iteration_index) + "-" + std::to_string(k);
        shape.fill = regions[k].color;
        shape.fill_rule = FillRule::EvenOdd;
        auto add = [&](const Polygon& ring) {
            const Polygon r = simplify(ring, options.epsilon);
            shape.subpaths.push_back(options.fit_curves ? fit_beziers(r) : ring_to_subpath(r));
        };
        add(regions[k].outer);
        for (const auto& hole : regions[k].holes)
            add(hole);
        layer.shapes.push_back(std::move(shape));
    }
    return layer;
}

SvgDoc emit_svg(const std::vector<VectorLayer>& layers, int canvas) {
    SvgDoc doc;
    doc.viewbox = {0.0, 0.0, static_cast<double>(canvas), static_cast<double>(canvas)};
    for (auto it = layers.rbegin(); it != layers.rend(); ++it)
        for (const auto& s : it->shapes)
            doc.paths.push_back(s);
    return doc;
}

std::string emit_layered_svg_text(const std::vector<VectorLayer>& layers, int canvas) {
    const ViewBox vb{0.0, 0.0, static_cast<double>(canvas), static_cast<double>(canvas)};
    std::string out = svg_open_tag(vb) + "\n";
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
        out += "  <g data-iteration=\"" + std::to_string(it->iteration_index) + "\">\n";
        for (const auto& s : it->shapes)
            out += "    " + path_element(s) + "\n";
        out += "  </g>\n";
    }
    out += "</svg>\n";
    return out;
}

} // namespace layerpeel
