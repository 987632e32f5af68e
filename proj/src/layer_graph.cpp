#include "layerpeel/layer_graph.hpp"

#include "layerpeel/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

namespace layerpeel {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Relationship r) {
    return r == Relationship::Occludes ? "occludes" : "interrupted_shape";
}

const GraphNode* LayerGraph::find(std::string_view id) const {
    for (const auto& n : nodes)
        if (n.id == id)
            return &n;
    return nullptr;
}

namespace {

using EdgeKey = std::tuple<std::string, std::string, int>;

EdgeKey edge_key(const GraphEdge& e) {
    if (e.relationship == Relationship::InterruptedShape)
        return {std::min(e.source, e.target), std::max(e.source, e.target), 1};
    return {e.source, e.target, 0};
}

} // namespace

void validate(const LayerGraph& g) {
    std::unordered_set<std::string> ids;
    for (const auto& n : g.nodes) {
        if (n.id.empty())
            throw SchemaViolation("node id must be non-empty");
        if (n.description.empty())
            throw SchemaViolation("node " + n.id + ": description must be non-empty");
        if (!ids.insert(n.id).second)
            throw SchemaViolation("duplicate node id " + n.id);
    }
    std::set<EdgeKey> seen;
    for (const auto& e : g.edges) {
        if (!ids.count(e.source))
            throw DanglingEdge("edge source " + e.source + " is not a node");
        if (!ids.count(e.target))
            throw DanglingEdge("edge target " + e.target + " is not a node");
        if (e.source == e.target)
            throw SchemaViolation("self-loop on " + e.source);
        if (!seen.insert(edge_key(e)).second)
            throw SchemaViolation("duplicate edge " + e.source + " -> " + e.target);
    }
}

LayerGraph make_graph(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges) {
    LayerGraph g;
    g.nodes = std::move(nodes);
    std::set<EdgeKey> seen;
    for (auto& e : edges)
        if (seen.insert(edge_key(e)).second)
            g.edges.push_back(std::move(e));
    validate(g);
    return g;
}

std::string strip_fences_and_comments(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    bool in_string = false;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos)
            eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        const std::size_t first = line.find_first_not_of(" \t\r");
        const bool fence = !in_string && first != std::string_view::npos && line.substr(first).starts_with("```");
        if (!fence) {
            bool escaped = false;
            for (std::size_t i = 0; i < line.size(); ++i) {
                const char c = line[i];
                if (in_string) {
                    if (escaped)
                        escaped = false;
                    else if (c == '\\')
                        escaped = true;
                    else if (c == '"')
                        in_string = false;
                } else if (c == '"') {
                    in_string = true;
                } else if (c == '/' && i + 1 < line.size() && line[i + 1] == '/') {
                    line = line.substr(0, i);
                    break;
                }
            }
            out.append(line);
        }
        if (eol < text.size())
            out.push_back('\n');
        pos = eol + 1;
    }
    return out;
}

namespace {

std::string required_string(const json& obj, const char* field, const char* what) {
    auto it = obj.find(field);
    if (it == obj.end())
        throw SchemaViolation(std::string(what) + " is missing \"" + field + "\"");
    if (!it->is_string())
        throw SchemaViolation(std::string(what) + " field \"" + field + "\" must be a string");
    return it->get<std::string>();
}

} // namespace

LayerGraph parse_graph(std::string_view text) {
    json doc;
    try {
        doc = json::parse(strip_fences_and_comments(text));
    } catch (const json::exception& e) {
        throw InvalidJson(e.what());
    }
    if (!doc.is_object())
        throw SchemaViolation("layer graph must be a JSON object");
    auto nodes_it = doc.find("nodes");
    auto edges_it = doc.find("edges");
    if (nodes_it == doc.end() || !nodes_it->is_array())
        throw SchemaViolation("\"nodes\" must be an array");
    if (edges_it == doc.end() || !edges_it->is_array())
        throw SchemaViolation("\"edges\" must be an array");

    std::vector<GraphNode> nodes;
    for (const auto& n : *nodes_it) {
        if (!n.is_object())
            throw SchemaViolation("node entries must be objects");
        GraphNode node;
        node.id = required_string(n, "id", "node");
        node.description = required_string(n, "description", "node");
        node.color = required_string(n, "color", "node");
        if (auto it = n.find("part_of_object"); it != n.end() && !it->is_null()) {
            if (!it->is_string())
                throw SchemaViolation("node field \"part_of_object\" must be a string");
            node.part_of_object = it->get<std::string>();
        }
        nodes.push_back(std::move(node));
    }
    std::vector<GraphEdge> edges;
    for (const auto& e : *edges_it) {
        if (!e.is_object())
            throw SchemaViolation("edge entries must be objects");
        GraphEdge edge;
        edge.source = required_string(e, "source", "edge");
        edge.target = required_string(e, "target", "edge");
        const std::string rel = required_string(e, "relationship", "edge");
        if (rel == "occludes")
            edge.relationship = Relationship::Occludes;
        else if (rel == "interrupted_shape")
            edge.relationship = Relationship::InterruptedShape;
        else
            throw SchemaViolation("unknown relationship \"" + rel + "\"");
        edges.push_back(std::move(edge));
    }
    return make_graph(std::move(nodes), std::move(edges));
}

std::string serialize_graph(const LayerGraph& g) {
    ordered_json doc;
    doc["nodes"] = ordered_json::array();
    for (const auto& n : g.nodes) {
        ordered_json o;
        o["id"] = n.id;
        o["description"] = n.description;
        o["color"] = n.color;
        if (n.part_of_object)
            o["part_of_object"] = *n.part_of_object;
        doc["nodes"].push_back(std::move(o));
    }
    doc["edges"] = ordered_json::array();
    for (const auto& e : g.edges) {
        ordered_json o;
        o["source"] = e.source;
        o["target"] = e.target;
        o["relationship"] = std::string(to_string(e.relationship));
        doc["edges"].push_back(std::move(o));
    }
    return doc.dump(2) + "\n";
}

std::vector<std::string> non_occluded_nodes(const LayerGraph& g) {
    std::unordered_set<std::string> targets;
    for (const auto& e : g.edges)
        if (e.relationship == Relationship::Occludes)
            targets.insert(e.target);
    std::vector<std::string> out;
    for (const auto& n : g.nodes)
        if (!targets.count(n.id))
            out.push_back(n.id);
    return out;
}

std::vector<std::vector<std::string>> occlusion_cycles(const LayerGraph& g) {
    // Tarjan over node indices.
    std::unordered_map<std::string, int> index_of;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        index_of[g.nodes[i].id] = static_cast<int>(i);
    const int n = static_cast<int>(g.nodes.size());
    std::vector<std::vector<int>> adj(n);
    for (const auto& e : g.edges)
        if (e.relationship == Relationship::Occludes)
            adj[index_of.at(e.source)].push_back(index_of.at(e.target));

    std::vector<int> idx(n, -1), low(n, 0);
    std::vector<bool> on_stack(n, false);
    std::vector<int> stack;
    int counter = 0;
    std::vector<std::vector<std::string>> out;
    std::function<void(int)> strong = [&](int v) {
        idx[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w : adj[v]) {
            if (idx[w] < 0) {
                strong(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], idx[w]);
            }
        }
        if (low[v] == idx[v]) {
            std::vector<int> comp;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
            } while (w != v);
            if (comp.size() > 1) {
                std::sort(comp.begin(), comp.end());
                std::vector<std::string> ids;
                for (int c : comp)
                    ids.push_back(g.nodes[c].id);
                out.push_back(std::move(ids));
            }
        }
    };
    for (int v = 0; v < n; ++v)
        if (idx[v] < 0)
            strong(v);
    std::sort(out.begin(), out.end());
    return out;
}

bool equivalent(const LayerGraph& a, const LayerGraph& b) {
    auto node_map = [](const LayerGraph& g) {
        std::map<std::string, GraphNode> m;
        for (const auto& n : g.nodes)
            m.emplace(n.id, n);
        return m;
    };
    auto edge_set = [](const LayerGraph& g) {
        std::set<EdgeKey> s;
        for (const auto& e : g.edges)
            s.insert(edge_key(e));
        return s;
    };
    return node_map(a) == node_map(b) && edge_set(a) == edge_set(b);
}

bool GraphDiff::empty() const {
    return added_nodes.empty() && removed_nodes.empty() && renamed_nodes.empty() && attribute_changes.empty() &&
           added_edges.empty() && removed_edges.empty();
}

GraphDiff diff_graphs(const LayerGraph& prev, const LayerGraph& next) {
    GraphDiff d;
    std::map<std::string, std::string> prev_to_next;
    std::set<std::string> next_matched;
    for (const auto& n : prev.nodes)
        if (next.find(n.id)) {
            prev_to_next[n.id] = n.id;
            next_matched.insert(n.id);
        }
    // Unmatched ids fall back to (description, color) identity, first come first served.
    for (const auto& p : prev.nodes) {
        if (prev_to_next.count(p.id))
            continue;
        for (const auto& q : next.nodes) {
            if (next_matched.count(q.id) || prev.find(q.id))
                continue;
            if (q.description == p.description && q.color == p.color) {
                prev_to_next[p.id] = q.id;
                next_matched.insert(q.id);
                d.renamed_nodes.emplace_back(p.id, q.id);
                break;
            }
        }
    }
    for (const auto& p : prev.nodes) {
        auto it = prev_to_next.find(p.id);
        if (it == prev_to_next.end()) {
            d.removed_nodes.push_back(p.id);
            continue;
        }
        const GraphNode& q = *next.find(it->second);
        if (p.description != q.description)
            d.attribute_changes.push_back({q.id, "description", p.description, q.description});
        if (p.color != q.color)
            d.attribute_changes.push_back({q.id, "color", p.color, q.color});
        if (p.part_of_object != q.part_of_object)
            d.attribute_changes.push_back({q.id, "part_of_object", p.part_of_object, q.part_of_object});
    }
    for (const auto& q : next.nodes)
        if (!next_matched.count(q.id))
            d.added_nodes.push_back(q);

    auto mapped = [&](const GraphEdge& e) -> std::optional<GraphEdge> {
        auto s = prev_to_next.find(e.source);
        auto t = prev_to_next.find(e.target);
        if (s == prev_to_next.end() || t == prev_to_next.end())
            return std::nullopt;
        return GraphEdge{s->second, t->second, e.relationship};
    };
    std::set<EdgeKey> next_keys;
    for (const auto& e : next.edges)
        next_keys.insert(edge_key(e));
    std::set<EdgeKey> carried;
    for (const auto& e : prev.edges) {
        auto m = mapped(e);
        if (m && next_keys.count(edge_key(*m)))
            carried.insert(edge_key(*m));
        else
            d.removed_edges.push_back(e);
    }
    for (const auto& e : next.edges)
        if (!carried.count(edge_key(e)))
            d.added_edges.push_back(e);
    return d;
}

LayerGraph apply_diff(const LayerGraph& prev, const GraphDiff& diff) {
    std::map<std::string, std::string> rename(diff.renamed_nodes.begin(), diff.renamed_nodes.end());
    std::set<std::string> removed(diff.removed_nodes.begin(), diff.removed_nodes.end());
    LayerGraph g;
    for (const auto& n : prev.nodes) {
        if (removed.count(n.id))
            continue;
        GraphNode m = n;
        if (auto it = rename.find(n.id); it != rename.end())
            m.id = it->second;
        for (const auto& c : diff.attribute_changes) {
            if (c.node_id != m.id)
                continue;
            if (c.field == "description")
                m.description = c.after.value_or("");
            else if (c.field == "color")
                m.color = c.after.value_or("");
            else if (c.field == "part_of_object")
                m.part_of_object = c.after;
        }
        g.nodes.push_back(std::move(m));
    }
    for (const auto& n : diff.added_nodes)
        g.nodes.push_back(n);

    std::set<EdgeKey> dropped;
    for (const auto& e : diff.removed_edges)
        dropped.insert(edge_key(e));
    auto map_id = [&](const std::string& id) {
        auto it = rename.find(id);
        return it == rename.end() ? id : it->second;
    };
    std::vector<GraphEdge> edges;
    for (const auto& e : prev.edges) {
        if (dropped.count(edge_key(e)))
            continue;
        edges.push_back({map_id(e.source), map_id(e.target), e.relationship});
    }
    for (const auto& e : diff.added_edges)
        edges.push_back(e);
    return make_graph(std::move(g.nodes), std::move(edges));
}

std::string diff_to_json(const GraphDiff& diff) {
    ordered_json o;
    o["added_nodes"] = ordered_json::array();
    for (const auto& n : diff.added_nodes)
        o["added_nodes"].push_back(n.id);
    o["removed_nodes"] = diff.removed_nodes;
    o["renamed_nodes"] = ordered_json::array();
    for (const auto& [a, b] : diff.renamed_nodes)
        o["renamed_nodes"].push_back({{"from", a}, {"to", b}});
    o["attribute_changes"] = ordered_json::array();
    for (const auto& c : diff.attribute_changes)
        o["attribute_changes"].push_back(ordered_json{{"node", c.node_id},
                                                      {"field", c.field},
                                                      {"before", c.before ? ordered_json(*c.before) : ordered_json()},
                                                      {"after", c.after ? ordered_json(*c.after) : ordered_json()}});
    auto edges = [](const std::vector<GraphEdge>& es) {
        ordered_json a = ordered_json::array();
        for (const auto& e : es)
            a.push_back({{"source", e.source}, {"target", e.target}, {"relationship", std::string(to_string(e.relationship))}});
        return a;
    };
    o["added_edges"] = edges(diff.added_edges);
    o["removed_edges"] = edges(diff.removed_edges);
    return o.dump(2);
}

} // namespace layerpeel
