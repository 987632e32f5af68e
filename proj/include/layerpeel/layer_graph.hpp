#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerpeel {

struct GraphNode {
    std::string id;
    std::string description;
    std::string color;
    std::optional<std::string> part_of_object;

    friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

enum class Relationship { Occludes, InterruptedShape };

std::string_view to_string(Relationship r);

struct GraphEdge {
    std::string source;
    std::string target;
    Relationship relationship = Relationship::Occludes;

    friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

struct LayerGraph {
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;

    const GraphNode* find(std::string_view id) const;
};

/// Throws SchemaViolation or DanglingEdge.
void validate(const LayerGraph& g);

/// Builds a validated graph; duplicate edges are dropped (interrupted_shape
/// compared as unordered pairs). Throws like validate().
LayerGraph make_graph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges);

/// Accepts the prompt schema; Markdown fences and // comments are removed
/// first. Throws InvalidJson, SchemaViolation, DanglingEdge.
LayerGraph parse_graph(std::string_view text);

/// Removes ``` fence lines and // comments outside string literals.
std::string strip_fences_and_comments(std::string_view text);

/// Canonical two-space-indented JSON; stable under parse/serialize.
std::string serialize_graph(const LayerGraph& g);

/// Ids never targeted by an occludes edge, in node order.
std::vector<std::string> non_occluded_nodes(const LayerGraph& g);

/// Strongly connected groups (size >= 2) of the occludes relation.
std::vector<std::vector<std::string>> occlusion_cycles(const LayerGraph& g);

/// Equality with interrupted_shape edges compared unordered and edge order ignored.
bool equivalent(const LayerGraph& a, const LayerGraph& b);

struct AttributeChange {
    std::string node_id; // id in the next graph
    std::string field;   // description | color | part_of_object
    std::optional<std::string> before;
    std::optional<std::string> after;

    friend bool operator==(const AttributeChange&, const AttributeChange&) = default;
};

struct GraphDiff {
    std::vector<GraphNode> added_nodes;
    std::vector<std::string> removed_nodes;
    /// prev id -> next id for nodes matched by (description, color).
    std::vector<std::pair<std::string, std::string>> renamed_nodes;
    std::vector<AttributeChange> attribute_changes;
    std::vector<GraphEdge> added_edges;
    std::vector<GraphEdge> removed_edges;

    bool empty() const;
};

GraphDiff diff_graphs(const LayerGraph& prev, const LayerGraph& next);

/// Applies a diff; apply_diff(prev, diff_graphs(prev, next)) is equivalent to next.
LayerGraph apply_diff(const LayerGraph& prev, const GraphDiff& diff);

/// JSON report of a diff for trace files.
std::string diff_to_json(const GraphDiff& diff);

} // namespace layerpeel
