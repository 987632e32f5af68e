#include "layerpeel/error.hpp"
#include "layerpeel/svg.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <unordered_set>

namespace layerpeel {

namespace {

namespace pt = boost::property_tree;

// Subpath as parsed, before implicit closing for fill.
struct RawSubpath {
    std::vector<CubicSegment> segments;
    bool closed = false;
};

enum class PaintKind { None, Color, CurrentColor };

struct Paint {
    PaintKind kind = PaintKind::None;
    ColorRGBA color;
};

struct Style {
    Paint fill{PaintKind::Color, ColorRGBA::black()};
    FillRule fill_rule = FillRule::NonZero;
    Paint stroke{PaintKind::None, {}};
    double stroke_width = 1.0;
    ColorRGBA current_color = ColorRGBA::black();
};

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    for (auto& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string local_name(const std::string& name) {
    auto pos = name.find(':');
    return pos == std::string::npos ? name : name.substr(pos + 1);
}

// ---------------------------------------------------------------------------
// Number scanning shared by path data, points lists, and transforms.
// ---------------------------------------------------------------------------
class NumberScanner {
public:
    explicit NumberScanner(std::string_view s) : s_(s) {}

    void skip_separators() {
        while (pos_ < s_.size() && (std::isspace(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == ','))
            ++pos_;
    }

    bool at_end() {
        skip_separators();
        return pos_ >= s_.size();
    }

    bool at_number() {
        skip_separators();
        if (pos_ >= s_.size())
            return false;
        char c = s_[pos_];
        return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
    }

    char peek() {
        skip_separators();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    char take() { return s_[pos_++]; }

    double number() {
        skip_separators();
        std::size_t start = pos_;
        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-'))
            ++pos_;
        bool digits = false;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
            ++pos_;
            digits = true;
        }
        if (pos_ < s_.size() && s_[pos_] == '.') {
            ++pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                ++pos_;
                digits = true;
            }
        }
        if (!digits)
            throw MalformedXml("expected number in \"" + std::string(s_) + "\"");
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-'))
                ++pos_;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                    ++pos_;
            } else {
                pos_ = save;
            }
        }
        double v = std::stod(std::string(s_.substr(start, pos_ - start)));
        if (!std::isfinite(v))
            throw MalformedXml("non-finite number");
        return v;
    }

    // Arc flags may be written without separators ("a1 1 0 00 1 1").
    bool flag() {
        skip_separators();
        if (pos_ < s_.size() && (s_[pos_] == '0' || s_[pos_] == '1'))
            return s_[pos_++] == '1';
        throw MalformedXml("expected arc flag");
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

double parse_length(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty())
        throw MalformedXml("empty length");
    std::size_t end = s.size();
    if (s.size() > 2 && lower(s.substr(s.size() - 2)) == "px")
        end -= 2;
    std::string num = s.substr(0, end);
    NumberScanner sc(num);
    double v = sc.number();
    if (!sc.at_end())
        throw UnsupportedFeature("unsupported length unit: " + s);
    return v;
}

// ---------------------------------------------------------------------------
// Colors and paints
// ---------------------------------------------------------------------------
std::optional<ColorRGBA> parse_color(const std::string& raw) {
    std::string s = lower(trim(raw));
    if (s.empty())
        return std::nullopt;
    if (s[0] == '#') {
        std::string h = s.substr(1);
        auto hex = [&](char c) -> int {
            if (c >= '0' && c <= '9') return c - '0';
            if (c >= 'a' && c <= 'f') return c - 'a' + 10;
            throw UnsupportedFeature("bad hex color: " + s);
        };
        if (h.size() == 3 || h.size() == 4) {
            ColorRGBA c{std::uint8_t(hex(h[0]) * 17), std::uint8_t(hex(h[1]) * 17), std::uint8_t(hex(h[2]) * 17), 255};
            if (h.size() == 4)
                c.a = std::uint8_t(hex(h[3]) * 17);
            return c;
        }
        if (h.size() == 6 || h.size() == 8) {
            ColorRGBA c{std::uint8_t(hex(h[0]) * 16 + hex(h[1])), std::uint8_t(hex(h[2]) * 16 + hex(h[3])),
                        std::uint8_t(hex(h[4]) * 16 + hex(h[5])), 255};
            if (h.size() == 8)
                c.a = std::uint8_t(hex(h[6]) * 16 + hex(h[7]));
            return c;
        }
        throw UnsupportedFeature("bad hex color: " + s);
    }
    if (s.rfind("rgb(", 0) == 0 || s.rfind("rgba(", 0) == 0) {
        auto open = s.find('(');
        auto close = s.find(')');
        if (close == std::string::npos)
            throw UnsupportedFeature("bad rgb() color: " + s);
        std::string inner = s.substr(open + 1, close - open - 1);
        std::replace(inner.begin(), inner.end(), '/', ',');
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream is(inner);
        while (std::getline(is, cur, ','))
            parts.push_back(trim(cur));
        if (parts.size() == 1) {
            // space-separated CSS4 syntax
            std::istringstream ws(parts[0]);
            parts.clear();
            while (ws >> cur)
                parts.push_back(cur);
        }
        if (parts.size() != 3 && parts.size() != 4)
            throw UnsupportedFeature("bad rgb() color: " + s);
        auto channel = [&](const std::string& p) -> std::uint8_t {
            double v;
            if (!p.empty() && p.back() == '%')
                v = std::stod(p.substr(0, p.size() - 1)) * 2.55;
            else
                v = std::stod(p);
            return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        };
        ColorRGBA c{channel(parts[0]), channel(parts[1]), channel(parts[2]), 255};
        if (parts.size() == 4) {
            const std::string& p = parts[3];
            double a = (!p.empty() && p.back() == '%') ? std::stod(p.substr(0, p.size() - 1)) / 100.0 : std::stod(p);
            c.a = static_cast<std::uint8_t>(std::clamp(std::lround(a * 255.0), 0L, 255L));
        }
        return c;
    }
    return css_named_color(s);
}

// Returns nullopt for "inherit".
std::optional<Paint> parse_paint(const std::string& raw) {
    std::string s = lower(trim(raw));
    if (s == "inherit")
        return std::nullopt;
    if (s == "none" || s == "transparent")
        return Paint{PaintKind::None, {}};
    if (s == "currentcolor")
        return Paint{PaintKind::CurrentColor, {}};
    if (s.rfind("url(", 0) == 0)
        throw UnsupportedFeature("paint server reference: " + s);
    auto c = parse_color(s);
    if (!c)
        throw UnsupportedFeature("unresolvable paint: " + s);
    if (c->a == 0)
        return Paint{PaintKind::None, {}};
    if (c->a != 255)
        throw UnsupportedFeature("semi-transparent paint: " + s);
    return Paint{PaintKind::Color, *c};
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------
Affine parse_transform(const std::string& text) {
    Affine m;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])) || text[pos] == ','))
            ++pos;
        if (pos >= text.size())
            break;
        std::size_t open = text.find('(', pos);
        std::size_t close = text.find(')', pos);
        if (open == std::string::npos || close == std::string::npos || close < open)
            throw MalformedXml("bad transform: " + text);
        std::string name = trim(text.substr(pos, open - pos));
        std::string args_text = text.substr(open + 1, close - open - 1);
        std::vector<double> args;
        NumberScanner sc(args_text);
        while (!sc.at_end())
            args.push_back(sc.number());
        pos = close + 1;

        Affine t;
        const double deg = std::numbers::pi / 180.0;
        if (name == "matrix" && args.size() == 6) {
            t = {args[0], args[1], args[2], args[3], args[4], args[5]};
        } else if (name == "translate" && (args.size() == 1 || args.size() == 2)) {
            t = Affine::translate(args[0], args.size() == 2 ? args[1] : 0.0);
        } else if (name == "scale" && (args.size() == 1 || args.size() == 2)) {
            t = Affine::scale(args[0], args.size() == 2 ? args[1] : args[0]);
        } else if (name == "rotate" && (args.size() == 1 || args.size() == 3)) {
            const double a = args[0] * deg;
            Affine r{std::cos(a), std::sin(a), -std::sin(a), std::cos(a), 0, 0};
            if (args.size() == 3)
                r = Affine::translate(-args[1], -args[2]).then(r).then(Affine::translate(args[1], args[2]));
            t = r;
        } else if (name == "skewX" && args.size() == 1) {
            t = {1, 0, std::tan(args[0] * deg), 1, 0, 0};
        } else if (name == "skewY" && args.size() == 1) {
            t = {1, std::tan(args[0] * deg), 0, 1, 0, 0};
        } else {
            throw MalformedXml("bad transform: " + text);
        }
        // Transform lists apply right-to-left to points.
        m = t.then(m);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Path data
// ---------------------------------------------------------------------------
CubicSegment quad_to_cubic(Point p0, Point q, Point p1) {
    return {p0, p0 + (q - p0) * (2.0 / 3.0), p1 + (q - p1) * (2.0 / 3.0), p1};
}

// Endpoint-parameterized elliptical arc to cubics, split into <= 90 degree pieces.
void arc_to_cubics(Point p0, double rx, double ry, double phi_deg, bool large_arc, bool sweep, Point p1,
                   std::vector<CubicSegment>& out) {
    if (p0 == p1)
        return;
    rx = std::abs(rx);
    ry = std::abs(ry);
    if (rx == 0.0 || ry == 0.0) {
        out.push_back(CubicSegment::line(p0, p1));
        return;
    }
    const double phi = phi_deg * std::numbers::pi / 180.0;
    const double cp = std::cos(phi), sp = std::sin(phi);
    const double dx = (p0.x - p1.x) / 2.0, dy = (p0.y - p1.y) / 2.0;
    const double x1p = cp * dx + sp * dy;
    const double y1p = -sp * dx + cp * dy;
    double lambda = (x1p * x1p) / (rx * rx) + (y1p * y1p) / (ry * ry);
    if (lambda > 1.0) {
        const double s = std::sqrt(lambda);
        rx *= s;
        ry *= s;
    }
    const double num = rx * rx * ry * ry - rx * rx * y1p * y1p - ry * ry * x1p * x1p;
    const double den = rx * rx * y1p * y1p + ry * ry * x1p * x1p;
    double coef = den > 0.0 ? std::sqrt(std::max(0.0, num / den)) : 0.0;
    if (large_arc == sweep)
        coef = -coef;
    const double cxp = coef * rx * y1p / ry;
    const double cyp = -coef * ry * x1p / rx;
    const double cx = cp * cxp - sp * cyp + (p0.x + p1.x) / 2.0;
    const double cy = sp * cxp + cp * cyp + (p0.y + p1.y) / 2.0;

    auto angle = [](double ux, double uy, double vx, double vy) {
        const double dot = ux * vx + uy * vy;
        const double len = std::hypot(ux, uy) * std::hypot(vx, vy);
        double a = std::acos(std::clamp(dot / len, -1.0, 1.0));
        if (ux * vy - uy * vx < 0)
            a = -a;
        return a;
    };
    const double theta1 = angle(1, 0, (x1p - cxp) / rx, (y1p - cyp) / ry);
    double dtheta = angle((x1p - cxp) / rx, (y1p - cyp) / ry, (-x1p - cxp) / rx, (-y1p - cyp) / ry);
    if (!sweep && dtheta > 0)
        dtheta -= 2 * std::numbers::pi;
    else if (sweep && dtheta < 0)
        dtheta += 2 * std::numbers::pi;

    const int n = std::max(1, static_cast<int>(std::ceil(std::abs(dtheta) / (std::numbers::pi / 2) - 1e-9)));
    const double delta = dtheta / n;
    const double k = 4.0 / 3.0 * std::tan(delta / 4.0);
    auto point_at = [&](double t) {
        const double x = rx * std::cos(t), y = ry * std::sin(t);
        return Point{cp * x - sp * y + cx, sp * x + cp * y + cy};
    };
    auto deriv_at = [&](double t) {
        const double x = -rx * std::sin(t), y = ry * std::cos(t);
        return Point{cp * x - sp * y, sp * x + cp * y};
    };
    Point start = p0;
    for (int i = 0; i < n; ++i) {
        const double t0 = theta1 + delta * i;
        const double t1 = t0 + delta;
        Point end = (i == n - 1) ? p1 : point_at(t1);
        out.push_back({start, start + deriv_at(t0) * k, end - deriv_at(t1) * k, end});
        start = end;
    }
}

std::vector<RawSubpath> parse_path_data(const std::string& d) {
    std::vector<RawSubpath> out;
    NumberScanner sc(d);
    Point cur{}, start{};
    Point last_ctrl{};
    char last_cmd = 0;
    char cmd = 0;
    RawSubpath* current = nullptr;

    auto begin_subpath = [&](Point p) {
        out.push_back({});
        current = &out.back();
        start = cur = p;
    };
    auto ensure_subpath = [&]() {
        if (!current)
            begin_subpath(cur);
    };

    while (!sc.at_end()) {
        char c = sc.peek();
        if (std::isalpha(static_cast<unsigned char>(c)) && c != 'e' && c != 'E') {
            cmd = sc.take();
        } else if (cmd == 0) {
            throw MalformedXml("path data must start with a command");
        } else if (cmd == 'M') {
            cmd = 'L';
        } else if (cmd == 'm') {
            cmd = 'l';
        } else if (cmd == 'Z' || cmd == 'z') {
            throw MalformedXml("numbers after closepath");
        }
        const bool rel = std::islower(static_cast<unsigned char>(cmd));
        const Point base = rel ? cur : Point{0, 0};
        auto pt = [&]() {
            double x = sc.number();
            double y = sc.number();
            return Point{x, y} + base;
        };
        switch (std::toupper(static_cast<unsigned char>(cmd))) {
        case 'M': {
            Point p = pt();
            begin_subpath(p);
            break;
        }
        case 'L': {
            ensure_subpath();
            Point p = pt();
            current->segments.push_back(CubicSegment::line(cur, p));
            cur = p;
            break;
        }
        case 'H': {
            ensure_subpath();
            double x = sc.number() + (rel ? cur.x : 0.0);
            Point p{x, cur.y};
            current->segments.push_back(CubicSegment::line(cur, p));
            cur = p;
            break;
        }
        case 'V': {
            ensure_subpath();
            double y = sc.number() + (rel ? cur.y : 0.0);
            Point p{cur.x, y};
            current->segments.push_back(CubicSegment::line(cur, p));
            cur = p;
            break;
        }
        case 'C': {
            ensure_subpath();
            Point c1 = pt(), c2 = pt(), p = pt();
            current->segments.push_back({cur, c1, c2, p});
            last_ctrl = c2;
            cur = p;
            break;
        }
        case 'S': {
            ensure_subpath();
            Point c1 = (last_cmd == 'C' || last_cmd == 'S') ? cur * 2.0 - last_ctrl : cur;
            Point c2 = pt(), p = pt();
            current->segments.push_back({cur, c1, c2, p});
            last_ctrl = c2;
            cur = p;
            break;
        }
        case 'Q': {
            ensure_subpath();
            Point q = pt(), p = pt();
            current->segments.push_back(quad_to_cubic(cur, q, p));
            last_ctrl = q;
            cur = p;
            break;
        }
        case 'T': {
            ensure_subpath();
            Point q = (last_cmd == 'Q' || last_cmd == 'T') ? cur * 2.0 - last_ctrl : cur;
            Point p = pt();
            current->segments.push_back(quad_to_cubic(cur, q, p));
            last_ctrl = q;
            cur = p;
            break;
        }
        case 'A': {
            ensure_subpath();
            double rx = sc.number(), ry = sc.number(), rot = sc.number();
            bool large = sc.flag(), sweep = sc.flag();
            Point p = pt();
            arc_to_cubics(cur, rx, ry, rot, large, sweep, p, current->segments);
            cur = p;
            break;
        }
        case 'Z': {
            if (current) {
                if (!(cur == start))
                    current->segments.push_back(CubicSegment::line(cur, start));
                current->closed = true;
            }
            cur = start;
            current = nullptr;
            break;
        }
        default:
            throw MalformedXml(std::string("unknown path command: ") + cmd);
        }
        last_cmd = static_cast<char>(std::toupper(static_cast<unsigned char>(cmd)));
    }
    return out;
}

std::vector<Point> parse_points(const std::string& text) {
    std::vector<Point> pts;
    NumberScanner sc(text);
    while (!sc.at_end()) {
        double x = sc.number();
        if (sc.at_end())
            break; // odd count: last coordinate ignored per SVG error handling
        double y = sc.number();
        pts.push_back({x, y});
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Stroke outlining: union of per-segment quads and per-vertex discs, all
// wound the same way so the nonzero rule yields their union.
// ---------------------------------------------------------------------------
double signed_area(const Polygon& poly) {
    double a = 0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Point& p = poly[i];
        const Point& q = poly[(i + 1) % poly.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return a / 2.0;
}

Polygon disc(Point c, double r, double tolerance) {
    int n = 8;
    if (r > tolerance)
        n = std::clamp(static_cast<int>(std::ceil(std::numbers::pi / std::acos(1.0 - tolerance / r))), 8, 256);
    Polygon p;
    p.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double t = 2 * std::numbers::pi * i / n;
        p.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
    }
    return p;
}

std::vector<Polygon> outline_stroke(const std::vector<RawSubpath>& subpaths, double width, double tolerance) {
    std::vector<Polygon> pieces;
    const double h = width / 2.0;
    for (const auto& sp : subpaths) {
        if (sp.segments.empty())
            continue;
        PathShape tmp;
        tmp.subpaths.push_back(sp.segments);
        Polygon line = flatten_path(tmp, tolerance).front();
        if (sp.closed && !line.empty())
            line.push_back(line.front());
        else if (!sp.closed && !(sp.segments.back().p3 == line.back()))
            line.push_back(sp.segments.back().p3);
        // A lone point still gets a round cap.
        pieces.push_back(disc(line.front(), h, tolerance));
        for (std::size_t i = 0; i + 1 < line.size(); ++i) {
            const Point a = line[i], b = line[i + 1];
            const double len = std::hypot(b.x - a.x, b.y - a.y);
            if (len == 0.0)
                continue;
            const Point n{-(b.y - a.y) / len * h, (b.x - a.x) / len * h};
            pieces.push_back({a + n, b + n, b - n, a - n});
            pieces.push_back(disc(b, h, tolerance));
        }
    }
    for (auto& p : pieces)
        if (signed_area(p) < 0)
            std::reverse(p.begin(), p.end());
    return pieces;
}

Subpath polygon_to_subpath(const Polygon& poly, const Affine& m) {
    Subpath sp;
    for (std::size_t i = 0; i < poly.size(); ++i)
        sp.push_back(CubicSegment::line(m.apply(poly[i]), m.apply(poly[(i + 1) % poly.size()])));
    return sp;
}

// ---------------------------------------------------------------------------
// Document walk
// ---------------------------------------------------------------------------
const std::unordered_set<std::string>& unsupported_elements() {
    static const std::unordered_set<std::string> names = {
        "linearGradient", "radialGradient", "pattern", "filter", "mask", "clipPath", "image", "text",
        "tspan", "textPath", "use", "symbol", "style", "foreignObject", "marker", "animate",
        "animateTransform", "animateMotion", "set", "svg", "meshgradient", "hatch", "script", "switch"};
    return names;
}

const std::unordered_set<std::string>& ignored_elements() {
    static const std::unordered_set<std::string> names = {"title", "desc", "metadata"};
    return names;
}

class Walker {
public:
    Walker(SvgDoc& doc, double stroke_tolerance) : doc_(doc), stroke_tol_(stroke_tolerance) {}

    void walk_children(const pt::ptree& node, const Style& style, const Affine& ctm) {
        for (const auto& [name, child] : node) {
            if (name == "<xmlattr>" || name == "<xmlcomment>" || name == "<xmltext>")
                continue;
            walk_element(name, child, style, ctm);
        }
    }

    void check_defs(const pt::ptree& node) {
        for (const auto& [name, child] : node) {
            if (name == "<xmlattr>" || name == "<xmlcomment>" || name == "<xmltext>")
                continue;
            if (name.find(':') != std::string::npos)
                continue;
            if (unsupported_elements().count(name))
                throw UnsupportedFeature("unsupported element in defs: <" + name + ">");
            check_defs(child);
        }
    }

private:
    static std::map<std::string, std::string> attributes(const pt::ptree& node) {
        std::map<std::string, std::string> attrs;
        if (auto a = node.get_child_optional("<xmlattr>"))
            for (const auto& [k, v] : *a)
                attrs[k] = v.data();
        // Inline style declarations override presentation attributes.
        if (auto it = attrs.find("style"); it != attrs.end()) {
            std::istringstream is(it->second);
            std::string decl;
            while (std::getline(is, decl, ';')) {
                auto colon = decl.find(':');
                if (colon == std::string::npos)
                    continue;
                std::string key = trim(decl.substr(0, colon));
                std::string val = trim(decl.substr(colon + 1));
                if (!key.empty())
                    attrs[key] = val;
            }
        }
        return attrs;
    }

    static bool apply_opacity(const std::map<std::string, std::string>& attrs, const char* key, bool& zero) {
        auto it = attrs.find(key);
        if (it == attrs.end())
            return false;
        double v = parse_length(it->second);
        if (v <= 0.0) {
            zero = true;
            return true;
        }
        if (v < 1.0)
            throw UnsupportedFeature(std::string("semi-transparency via ") + key);
        return true;
    }

    // Returns false when the element renders nothing.
    static bool update_style(const std::map<std::string, std::string>& attrs, Style& st) {
        for (const char* key : {"filter", "mask", "clip-path"})
            if (auto it = attrs.find(key); it != attrs.end() && lower(trim(it->second)) != "none")
                throw UnsupportedFeature(std::string("unsupported attribute: ") + key);
        if (auto it = attrs.find("display"); it != attrs.end() && trim(it->second) == "none")
            return false;
        if (auto it = attrs.find("visibility"); it != attrs.end()) {
            auto v = trim(it->second);
            if (v == "hidden" || v == "collapse")
                return false;
        }
        if (auto it = attrs.find("color"); it != attrs.end()) {
            auto p = parse_paint(it->second);
            if (p && p->kind == PaintKind::Color)
                st.current_color = p->color;
        }
        if (auto it = attrs.find("fill"); it != attrs.end())
            if (auto p = parse_paint(it->second))
                st.fill = *p;
        if (auto it = attrs.find("stroke"); it != attrs.end())
            if (auto p = parse_paint(it->second))
                st.stroke = *p;
        if (auto it = attrs.find("fill-rule"); it != attrs.end()) {
            auto v = trim(it->second);
            if (v == "evenodd")
                st.fill_rule = FillRule::EvenOdd;
            else if (v == "nonzero")
                st.fill_rule = FillRule::NonZero;
        }
        if (auto it = attrs.find("stroke-width"); it != attrs.end())
            st.stroke_width = parse_length(it->second);
        bool zero = false;
        apply_opacity(attrs, "opacity", zero);
        if (zero)
            return false;
        bool fill_zero = false, stroke_zero = false;
        apply_opacity(attrs, "fill-opacity", fill_zero);
        apply_opacity(attrs, "stroke-opacity", stroke_zero);
        if (fill_zero)
            st.fill.kind = PaintKind::None;
        if (stroke_zero)
            st.stroke.kind = PaintKind::None;
        return true;
    }

    static double attr_length(const std::map<std::string, std::string>& attrs, const char* key, double def = 0.0) {
        auto it = attrs.find(key);
        return it == attrs.end() ? def : parse_length(it->second);
    }

    std::vector<RawSubpath> shape_geometry(const std::string& name, const std::map<std::string, std::string>& a) {
        std::vector<RawSubpath> out;
        auto closed_poly = [&](const std::vector<Point>& pts, bool closed) {
            RawSubpath sp;
            for (std::size_t i = 0; i + 1 < pts.size(); ++i)
                sp.segments.push_back(CubicSegment::line(pts[i], pts[i + 1]));
            if (closed && pts.size() > 1 && !(pts.back() == pts.front()))
                sp.segments.push_back(CubicSegment::line(pts.back(), pts.front()));
            sp.closed = closed;
            if (!sp.segments.empty())
                out.push_back(std::move(sp));
        };
        auto ellipse = [&](double cx, double cy, double rx, double ry) {
            RawSubpath sp;
            arc_to_cubics({cx + rx, cy}, rx, ry, 0, false, true, {cx, cy + ry}, sp.segments);
            arc_to_cubics({cx, cy + ry}, rx, ry, 0, false, true, {cx - rx, cy}, sp.segments);
            arc_to_cubics({cx - rx, cy}, rx, ry, 0, false, true, {cx, cy - ry}, sp.segments);
            arc_to_cubics({cx, cy - ry}, rx, ry, 0, false, true, {cx + rx, cy}, sp.segments);
            sp.closed = true;
            out.push_back(std::move(sp));
        };

        if (name == "path") {
            auto it = a.find("d");
            if (it != a.end())
                out = parse_path_data(it->second);
        } else if (name == "rect") {
            double x = attr_length(a, "x"), y = attr_length(a, "y");
            double w = attr_length(a, "width"), h = attr_length(a, "height");
            if (w <= 0 || h <= 0)
                return out;
            bool has_rx = a.count("rx"), has_ry = a.count("ry");
            double rx = attr_length(a, "rx"), ry = attr_length(a, "ry");
            if (has_rx && !has_ry) ry = rx;
            if (has_ry && !has_rx) rx = ry;
            rx = std::clamp(rx, 0.0, w / 2);
            ry = std::clamp(ry, 0.0, h / 2);
            if (rx <= 0 || ry <= 0) {
                closed_poly({{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}}, true);
            } else {
                RawSubpath sp;
                auto line = [&](Point p, Point q) {
                    if (!(p == q))
                        sp.segments.push_back(CubicSegment::line(p, q));
                };
                line({x + rx, y}, {x + w - rx, y});
                arc_to_cubics({x + w - rx, y}, rx, ry, 0, false, true, {x + w, y + ry}, sp.segments);
                line({x + w, y + ry}, {x + w, y + h - ry});
                arc_to_cubics({x + w, y + h - ry}, rx, ry, 0, false, true, {x + w - rx, y + h}, sp.segments);
                line({x + w - rx, y + h}, {x + rx, y + h});
                arc_to_cubics({x + rx, y + h}, rx, ry, 0, false, true, {x, y + h - ry}, sp.segments);
                line({x, y + h - ry}, {x, y + ry});
                arc_to_cubics({x, y + ry}, rx, ry, 0, false, true, {x + rx, y}, sp.segments);
                sp.closed = true;
                out.push_back(std::move(sp));
            }
        } else if (name == "circle") {
            double r = attr_length(a, "r");
            if (r > 0)
                ellipse(attr_length(a, "cx"), attr_length(a, "cy"), r, r);
        } else if (name == "ellipse") {
            double rx = attr_length(a, "rx"), ry = attr_length(a, "ry");
            if (rx > 0 && ry > 0)
                ellipse(attr_length(a, "cx"), attr_length(a, "cy"), rx, ry);
        } else if (name == "line") {
            closed_poly({{attr_length(a, "x1"), attr_length(a, "y1")}, {attr_length(a, "x2"), attr_length(a, "y2")}},
                        false);
        } else if (name == "polygon" || name == "polyline") {
            auto it = a.find("points");
            if (it != a.end())
                closed_poly(parse_points(it->second), name == "polygon");
        }
        return out;
    }

    std::string unique_id(std::string base) {
        if (base.empty())
            base = "path" + std::to_string(auto_counter_++);
        std::string id = base;
        int k = 2;
        while (used_ids_.count(id))
            id = base + "_" + std::to_string(k++);
        used_ids_.insert(id);
        return id;
    }

    void walk_element(const std::string& raw_name, const pt::ptree& node, const Style& parent, const Affine& ctm) {
        if (raw_name.find(':') != std::string::npos)
            return; // editor metadata such as sodipodi:namedview
        const std::string& name = raw_name;
        if (ignored_elements().count(name))
            return;
        if (name == "defs") {
            check_defs(node);
            return;
        }
        if (unsupported_elements().count(name))
            throw UnsupportedFeature("unsupported element: <" + name + ">");

        const auto attrs = attributes(node);
        Style st = parent;
        if (!update_style(attrs, st))
            return;
        Affine m = ctm;
        if (auto it = attrs.find("transform"); it != attrs.end())
            m = parse_transform(it->second).then(ctm);

        if (name == "g" || name == "a") {
            walk_children(node, st, m);
            return;
        }
        static const std::unordered_set<std::string> shapes = {"path",    "rect",     "circle", "ellipse",
                                                               "line",    "polygon",  "polyline"};
        if (!shapes.count(name))
            throw UnsupportedFeature("unsupported element: <" + name + ">");

        auto raw = shape_geometry(name, attrs);
        std::string id_attr;
        if (auto it = attrs.find("id"); it != attrs.end())
            id_attr = it->second;

        auto resolve = [&](const Paint& p) { return p.kind == PaintKind::CurrentColor ? st.current_color : p.color; };

        bool emitted_fill = false;
        if (st.fill.kind != PaintKind::None && name != "line") {
            PathShape shape;
            shape.fill = resolve(st.fill);
            shape.fill_rule = st.fill_rule;
            for (const auto& sp : raw) {
                if (sp.segments.empty())
                    continue;
                Subpath s = sp.segments;
                if (!(s.back().p3 == s.front().p0))
                    s.push_back(CubicSegment::line(s.back().p3, s.front().p0));
                shape.subpaths.push_back(std::move(s));
            }
            if (!shape.subpaths.empty()) {
                shape.id = unique_id(id_attr);
                doc_.paths.push_back(transformed(shape, m));
                emitted_fill = true;
            }
        }
        if (st.stroke.kind != PaintKind::None && st.stroke_width > 0 && !raw.empty()) {
            const double scale = std::sqrt(std::abs(m.a * m.d - m.b * m.c));
            const double tol = scale > 0 ? stroke_tol_ / scale : stroke_tol_;
            auto pieces = outline_stroke(raw, st.stroke_width, tol);
            if (!pieces.empty()) {
                PathShape shape;
                shape.fill = resolve(st.stroke);
                shape.fill_rule = FillRule::NonZero;
                for (const auto& poly : pieces)
                    shape.subpaths.push_back(polygon_to_subpath(poly, m));
                std::string base = id_attr.empty() ? std::string() : id_attr + (emitted_fill ? "-stroke" : "");
                shape.id = unique_id(base);
                doc_.paths.push_back(std::move(shape));
            }
        }
    }

    SvgDoc& doc_;
    double stroke_tol_;
    std::unordered_set<std::string> used_ids_;
    int auto_counter_ = 0;
};

} // namespace

SvgDoc parse_svg(std::string_view text, const ParseOptions& options) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::read_xml(in, tree, pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        throw MalformedXml("line " + std::to_string(e.line()) + ": " + e.message());
    }
    const pt::ptree* root = nullptr;
    for (const auto& [name, child] : tree) {
        if (local_name(name) == "svg") {
            root = &child;
            break;
        }
    }
    if (!root)
        throw MalformedXml("document root is not <svg>");

    SvgDoc doc;
    std::map<std::string, std::string> attrs;
    if (auto a = root->get_child_optional("<xmlattr>"))
        for (const auto& [k, v] : *a)
            attrs[k] = v.data();
    if (auto it = attrs.find("viewBox"); it != attrs.end()) {
        NumberScanner sc(it->second);
        std::vector<double> v;
        while (!sc.at_end())
            v.push_back(sc.number());
        if (v.size() != 4)
            throw MalformedXml("viewBox needs four numbers");
        doc.viewbox = {v[0], v[1], v[2], v[3]};
    } else if (attrs.count("width") && attrs.count("height")) {
        doc.viewbox = {0, 0, parse_length(attrs["width"]), parse_length(attrs["height"])};
    } else {
        throw UnsupportedFeature("svg root needs a viewBox or width/height");
    }
    if (!(doc.viewbox.width > 0) || !(doc.viewbox.height > 0))
        throw MalformedXml("viewBox must have positive size");

    const double doc_tol = options.stroke_tolerance_px * std::max(doc.viewbox.width, doc.viewbox.height) /
                           static_cast<double>(options.normalized_size);
    Walker walker(doc, doc_tol);
    Style root_style;
    std::map<std::string, std::string> root_only;
    for (const char* key : {"fill", "stroke", "stroke-width", "fill-rule", "color"})
        if (auto it = attrs.find(key); it != attrs.end())
            root_only[key] = it->second;
    // Presentation attributes on the root element cascade like any group.
    if (!root_only.empty()) {
        if (auto it = root_only.find("fill"); it != root_only.end())
            if (auto p = parse_paint(it->second))
                root_style.fill = *p;
        if (auto it = root_only.find("stroke"); it != root_only.end())
            if (auto p = parse_paint(it->second))
                root_style.stroke = *p;
        if (auto it = root_only.find("stroke-width"); it != root_only.end())
            root_style.stroke_width = parse_length(it->second);
        if (auto it = root_only.find("fill-rule"); it != root_only.end())
            root_style.fill_rule = trim(it->second) == "evenodd" ? FillRule::EvenOdd : FillRule::NonZero;
        if (auto it = root_only.find("color"); it != root_only.end())
            if (auto p = parse_paint(it->second); p && p->kind == PaintKind::Color)
                root_style.current_color = p->color;
    }
    walker.walk_children(*root, root_style, Affine{});
    return doc;
}

} // namespace layerpeel
