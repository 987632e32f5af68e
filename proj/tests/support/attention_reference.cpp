#include "attention_reference.hpp"

namespace layerpeel::testing {

namespace {

enum class Kind { Global, Instance, Image, Other };

struct Role {
    Kind kind = Kind::Other;
    int instance = -1; // for Instance
    int row = -1, col = -1; // for Image
};

Role role_of(const TokenLayout& l, int t) {
    if (t >= l.global_span.start && t < l.global_span.start + l.global_span.length)
        return {Kind::Global};
    for (std::size_t i = 0; i < l.instance_spans.size(); ++i)
        if (t >= l.instance_spans[i].start && t < l.instance_spans[i].start + l.instance_spans[i].length)
            return {Kind::Instance, static_cast<int>(i)};
    const int rel = t - l.image_offset;
    if (rel >= 0 && rel < l.grid_rows * l.grid_cols)
        return {Kind::Image, -1, rel / l.grid_cols, rel % l.grid_cols};
    return {};
}

bool center_in(const TokenLayout& l, const Role& r, const BBoxNorm& b) {
    const double cx = (r.col + 0.5) / l.grid_cols;
    const double cy = (r.row + 0.5) / l.grid_rows;
    return b.x0 <= cx && cx < b.x1 && b.y0 <= cy && cy < b.y1;
}

} // namespace

bool reference_allowed(const TokenLayout& l, const std::vector<BBoxNorm>& boxes, int q, int k,
                       bool instance_attends_global) {
    if (q == k)
        return true; // (d)
    const Role rq = role_of(l, q);
    const Role rk = role_of(l, k);
    switch (rq.kind) {
    case Kind::Global: // (a)
        return true;
    case Kind::Instance: // (b)
        if (rk.kind == Kind::Instance)
            return rk.instance == rq.instance;
        if (rk.kind == Kind::Image)
            return center_in(l, rk, boxes[rq.instance]);
        if (rk.kind == Kind::Global)
            return instance_attends_global;
        return false;
    case Kind::Image: // (c)
        if (rk.kind == Kind::Image || rk.kind == Kind::Global)
            return true;
        if (rk.kind == Kind::Instance)
            return center_in(l, rq, boxes[rk.instance]);
        return false;
    case Kind::Other:
        return false;
    }
    return false;
}

} // namespace layerpeel::testing
