#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace layerpeel {

/// Box in canvas fractions; x0 < x1 and y0 < y1, all within [0, 1].
struct BBoxNorm {
    double x0 = 0, y0 = 0, x1 = 1, y1 = 1;

    friend bool operator==(const BBoxNorm&, const BBoxNorm&) = default;
    bool valid() const;
};

/// Smallest box containing `box` whose edges lie on the cell grid.
BBoxNorm snap_outward(const BBoxNorm& box, int rows, int cols);

struct TokenSpan {
    int start = 0;
    int length = 0;

    int end() const { return start + length; }
    bool contains(int t) const { return t >= start && t < end(); }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct TokenLayout {
    TokenSpan global_span;
    std::vector<TokenSpan> instance_spans;
    int grid_rows = 0;
    int grid_cols = 0;
    int image_offset = 0;
    int total_tokens = 0;

    int image_tokens() const { return grid_rows * grid_cols; }
    friend bool operator==(const TokenLayout&, const TokenLayout&) = default;
};

/// Global prompt first, then each instance label, then the image grid. Span
/// lengths are whitespace word counts (at least 1).
TokenLayout layout_for_prompts(std::string_view global_prompt, const std::vector<std::string>& instance_labels,
                               int grid_rows, int grid_cols);

/// Row-major cell indices (relative to the image block) whose centers
/// ((c + 0.5) / cols, (r + 0.5) / rows) satisfy x0 <= cx < x1 and y0 <= cy < y1.
std::vector<int> image_tokens_in_box(int rows, int cols, const BBoxNorm& box);

struct PlanOptions {
    /// Lets instance-label tokens also see the global prompt. Off by default.
    bool instance_attends_global = false;
};

/// Query-to-key admissibility matrix.
struct AttentionPlan {
    int n_tokens = 0;
    std::vector<std::uint8_t> allowed; // row-major, n_tokens * n_tokens

    bool at(int q, int k) const { return allowed[static_cast<std::size_t>(q) * n_tokens + k] != 0; }
    friend bool operator==(const AttentionPlan&, const AttentionPlan&) = default;
};

/// Throws LayoutMismatch for a malformed layout or box count mismatch, EmptyBox
/// when a box covers no image-token center.
AttentionPlan build_joint_mask(const TokenLayout& layout, const std::vector<BBoxNorm>& boxes,
                               const PlanOptions& options = {});

void validate_layout(const TokenLayout& layout);

/// Wire form: layout header plus run-length rows (alternating runs, starting
/// with a possibly empty run of blocked keys).
std::string serialize_plan(const TokenLayout& layout, const AttentionPlan& plan);

struct DecodedPlan {
    TokenLayout layout;
    AttentionPlan plan;
};
DecodedPlan deserialize_plan(std::string_view text);

std::string layout_to_json(const TokenLayout& layout);
TokenLayout layout_from_json(std::string_view text);

/// One line per (query block, key block) pair: all / none / k of n entries.
std::string plan_summary(const TokenLayout& layout, const AttentionPlan& plan);

} // namespace layerpeel
