#include "layerpeel/attention.hpp"

#include "layerpeel/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace layerpeel {

using ordered_json = nlohmann::ordered_json;

bool BBoxNorm::valid() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    return in01(x0) && in01(y0) && in01(x1) && in01(y1) && x0 < x1 && y0 < y1;
}

BBoxNorm snap_outward(const BBoxNorm& box, int rows, int cols) {
    auto lo = [](double v, int n) { return std::clamp(std::floor(v * n) / n, 0.0, 1.0); };
    auto hi = [](double v, int n) { return std::clamp(std::ceil(v * n) / n, 0.0, 1.0); };
    BBoxNorm out{lo(box.x0, cols), lo(box.y0, rows), hi(box.x1, cols), hi(box.y1, rows)};
    if (out.x1 <= out.x0)
        out.x1 = std::min(1.0, out.x0 + 1.0 / cols);
    if (out.y1 <= out.y0)
        out.y1 = std::min(1.0, out.y0 + 1.0 / rows);
    return out;
}

namespace {

int word_count(std::string_view s) {
    int n = 0;
    bool in_word = false;
    for (char c : s) {
        const bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (!space && !in_word)
            ++n;
        in_word = !space;
    }
    return std::max(n, 1);
}

} // namespace

TokenLayout layout_for_prompts(std::string_view global_prompt, const std::vector<std::string>& instance_labels,
                               int grid_rows, int grid_cols) {
    TokenLayout l;
    l.global_span = {0, word_count(global_prompt)};
    int cursor = l.global_span.end();
    for (const auto& label : instance_labels) {
        l.instance_spans.push_back({cursor, word_count(label)});
        cursor = l.instance_spans.back().end();
    }
    l.grid_rows = grid_rows;
    l.grid_cols = grid_cols;
    l.image_offset = cursor;
    l.total_tokens = cursor + grid_rows * grid_cols;
    return l;
}

std::vector<int> image_tokens_in_box(int rows, int cols, const BBoxNorm& box) {
    std::vector<int> out;
    for (int r = 0; r < rows; ++r) {
        const double cy = (r + 0.5) / rows;
        if (cy < box.y0 || cy >= box.y1)
            continue;
        for (int c = 0; c < cols; ++c) {
            const double cx = (c + 0.5) / cols;
            if (cx >= box.x0 && cx < box.x1)
                out.push_back(r * cols + c);
        }
    }
    return out;
}

void validate_layout(const TokenLayout& l) {
    if (l.grid_rows <= 0 || l.grid_cols <= 0)
        throw LayoutMismatch("image grid dimensions must be positive");
    if (l.total_tokens <= 0)
        throw LayoutMismatch("total token count must be positive");
    std::vector<TokenSpan> spans{l.global_span, {l.image_offset, l.image_tokens()}};
    spans.insert(spans.end(), l.instance_spans.begin(), l.instance_spans.end());
    for (const auto& s : spans)
        if (s.start < 0 || s.length < 0 || s.end() > l.total_tokens)
            throw LayoutMismatch("span exceeds the token sequence");
    std::sort(spans.begin(), spans.end(), [](const TokenSpan& a, const TokenSpan& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < spans.size(); ++i)
        if (spans[i - 1].length > 0 && spans[i].length > 0 && spans[i].start < spans[i - 1].end())
            throw LayoutMismatch("token spans overlap");
}

AttentionPlan build_joint_mask(const TokenLayout& l, const std::vector<BBoxNorm>& boxes, const PlanOptions& options) {
    validate_layout(l);
    if (boxes.size() != l.instance_spans.size())
        throw LayoutMismatch("box count " + std::to_string(boxes.size()) + " does not match instance span count " +
                             std::to_string(l.instance_spans.size()));
    const int n = l.total_tokens;
    const int img0 = l.image_offset;
    const int img1 = l.image_offset + l.image_tokens();

    std::vector<std::vector<int>> box_tokens;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        if (!boxes[i].valid())
            throw LayoutMismatch("box " + std::to_string(i) + " is not a valid normalized box");
        box_tokens.push_back(image_tokens_in_box(l.grid_rows, l.grid_cols, boxes[i]));
        if (box_tokens.back().empty())
            throw EmptyBox("box " + std::to_string(i) + " contains no image-token centers");
    }

    AttentionPlan plan;
    plan.n_tokens = n;
    plan.allowed.assign(static_cast<std::size_t>(n) * n, 0);
    auto set = [&](int q, int k) { plan.allowed[static_cast<std::size_t>(q) * n + k] = 1; };
    auto set_span = [&](int q, const TokenSpan& s) {
        for (int k = s.start; k < s.end(); ++k)
            set(q, k);
    };

    // Global prompt sees everything.
    for (int q = l.global_span.start; q < l.global_span.end(); ++q)
        for (int k = 0; k < n; ++k)
            set(q, k);

    // Instance labels see themselves and their box.
    for (std::size_t i = 0; i < l.instance_spans.size(); ++i) {
        const TokenSpan& s = l.instance_spans[i];
        for (int q = s.start; q < s.end(); ++q) {
            set_span(q, s);
            for (int t : box_tokens[i])
                set(q, img0 + t);
            if (options.instance_attends_global)
                set_span(q, l.global_span);
        }
    }

    // Image tokens see every image token and the global prompt, plus the
    // labels of every box that covers them.
    for (int q = img0; q < img1; ++q) {
        for (int k = img0; k < img1; ++k)
            set(q, k);
        set_span(q, l.global_span);
    }
    for (std::size_t i = 0; i < box_tokens.size(); ++i)
        for (int t : box_tokens[i])
            set_span(img0 + t, l.instance_spans[i]);

    for (int q = 0; q < n; ++q)
        set(q, q);
    return plan;
}

namespace {

ordered_json layout_json(const TokenLayout& l) {
    ordered_json o;
    o["global_span"] = {l.global_span.start, l.global_span.length};
    o["instance_spans"] = ordered_json::array();
    for (const auto& s : l.instance_spans)
        o["instance_spans"].push_back({s.start, s.length});
    o["image_grid"] = {l.grid_rows, l.grid_cols};
    o["image_offset"] = l.image_offset;
    o["total_tokens"] = l.total_tokens;
    return o;
}

TokenSpan span_from(const ordered_json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer())
        throw LayoutMismatch("span must be [start, length]");
    return {j[0].get<int>(), j[1].get<int>()};
}

TokenLayout layout_from(const ordered_json& o) {
    try {
        TokenLayout l;
        l.global_span = span_from(o.at("global_span"));
        for (const auto& s : o.at("instance_spans"))
            l.instance_spans.push_back(span_from(s));
        const auto& grid = o.at("image_grid");
        l.grid_rows = grid.at(0).get<int>();
        l.grid_cols = grid.at(1).get<int>();
        l.image_offset = o.at("image_offset").get<int>();
        l.total_tokens = o.at("total_tokens").get<int>();
        validate_layout(l);
        return l;
    } catch (const nlohmann::json::exception& e) {
        throw LayoutMismatch(std::string("bad layout: ") + e.what());
    }
}

} // namespace

std::string layout_to_json(const TokenLayout& layout) { return layout_json(layout).dump(2) + "\n"; }

TokenLayout layout_from_json(std::string_view text) {
    ordered_json o;
    try {
        o = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidJson(e.what());
    }
    return layout_from(o);
}

std::string serialize_plan(const TokenLayout& layout, const AttentionPlan& plan) {
    ordered_json o;
    o["protocol_version"] = 1;
    o["layout"] = layout_json(layout);
    o["n_tokens"] = plan.n_tokens;
    ordered_json rows = ordered_json::array();
    for (int q = 0; q < plan.n_tokens; ++q) {
        ordered_json runs = ordered_json::array();
        bool value = false;
        int run = 0;
        for (int k = 0; k < plan.n_tokens; ++k) {
            if (plan.at(q, k) != value) {
                runs.push_back(run);
                value = !value;
                run = 0;
            }
            ++run;
        }
        runs.push_back(run);
        rows.push_back(std::move(runs));
    }
    o["rows"] = std::move(rows);
    return o.dump();
}

DecodedPlan deserialize_plan(std::string_view text) {
    ordered_json o;
    try {
        o = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidJson(e.what());
    }
    DecodedPlan out;
    try {
        out.layout = layout_from(o.at("layout"));
        const int n = o.at("n_tokens").get<int>();
        if (n != out.layout.total_tokens)
            throw LayoutMismatch("n_tokens disagrees with layout");
        const auto& rows = o.at("rows");
        if (!rows.is_array() || static_cast<int>(rows.size()) != n)
            throw LayoutMismatch("row count disagrees with n_tokens");
        out.plan.n_tokens = n;
        out.plan.allowed.assign(static_cast<std::size_t>(n) * n, 0);
        for (int q = 0; q < n; ++q) {
            int k = 0;
            bool value = false;
            for (const auto& r : rows[q]) {
                const int len = r.get<int>();
                if (len < 0 || k + len > n)
                    throw LayoutMismatch("run-length row overflows");
                if (value)
                    std::fill_n(out.plan.allowed.begin() + static_cast<std::ptrdiff_t>(q) * n + k, len, 1);
                k += len;
                value = !value;
            }
            if (k != n)
                throw LayoutMismatch("run-length row has wrong total length");
        }
    } catch (const nlohmann::json::exception& e) {
        throw LayoutMismatch(std::string("bad plan: ") + e.what());
    }
    return out;
}

std::string plan_summary(const TokenLayout& l, const AttentionPlan& plan) {
    struct Block {
        std::string name;
        TokenSpan span;
    };
    std::vector<Block> blocks{{"global", l.global_span}};
    for (std::size_t i = 0; i < l.instance_spans.size(); ++i)
        blocks.push_back({"instance[" + std::to_string(i) + "]", l.instance_spans[i]});
    blocks.push_back({"image", {l.image_offset, l.image_tokens()}});

    std::ostringstream os;
    for (const auto& q : blocks)
        for (const auto& k : blocks) {
            std::size_t total = static_cast<std::size_t>(q.span.length) * k.span.length;
            std::size_t on = 0;
            for (int a = q.span.start; a < q.span.end(); ++a)
                for (int b = k.span.start; b < k.span.end(); ++b)
                    on += plan.at(a, b);
            os << q.name << " -> " << k.name << ": ";
            if (on == total)
                os << "all";
            else if (on == 0)
                os << "none";
            else
                os << on << " of " << total;
            os << '\n';
        }
    return os.str();
}

} // namespace layerpeel
