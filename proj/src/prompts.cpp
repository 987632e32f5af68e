#include "layerpeel/prompts.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <stdexcept>

namespace layerpeel {

namespace detail {
extern const unsigned char prompt_graph_construct[];
extern const std::size_t prompt_graph_construct_size;
extern const unsigned char prompt_graph_update[];
extern const std::size_t prompt_graph_update_size;
extern const unsigned char prompt_boxes_and_labels[];
extern const std::size_t prompt_boxes_and_labels_size;
extern const unsigned char prompt_panel_annotation[];
extern const std::size_t prompt_panel_annotation_size;
extern const unsigned char prompt_direct_top_layer[];
extern const std::size_t prompt_direct_top_layer_size;
} // namespace detail

namespace {

struct Entry {
    TemplateId id;
    const char* name;
    const unsigned char* data;
    const std::size_t* size;
    const char* sha256;
};

const std::array<Entry, 5> kEntries{{
    {TemplateId::GraphConstruct, "graph_construct", detail::prompt_graph_construct,
     &detail::prompt_graph_construct_size, "a5f902324dd0451c98a6003a84569845fdfabee405d121e3c1d530bc87766329"},
    {TemplateId::GraphUpdate, "graph_update", detail::prompt_graph_update, &detail::prompt_graph_update_size,
     "3998b6b87908ad3bd3fefb49331916aecb1bf077f4f3d6ae9de1a3779029f9d2"},
    {TemplateId::BoxesAndLabels, "boxes_and_labels", detail::prompt_boxes_and_labels,
     &detail::prompt_boxes_and_labels_size, "2a8bc14af038300762e7681af739df6bab0aeda04963b78b2bd7bcc1c173d769"},
    {TemplateId::PanelAnnotation, "panel_annotation", detail::prompt_panel_annotation,
     &detail::prompt_panel_annotation_size, "b5745bd635822fd5121f840094627e4ffc544b54c766cd29a8b363a147a8e586"},
    {TemplateId::DirectTopLayer, "direct_top_layer", detail::prompt_direct_top_layer,
     &detail::prompt_direct_top_layer_size, "cc009903ac8f0e96847e31f1a579074481b7cf6d315992be6ff129d6183f3fa4"},
}};

const Entry& entry(TemplateId id) {
    for (const auto& e : kEntries)
        if (e.id == id)
            return e;
    throw std::invalid_argument("unknown template id");
}

} // namespace

std::string_view template_name(TemplateId id) { return entry(id).name; }

std::optional<TemplateId> template_from_name(std::string_view name) {
    for (const auto& e : kEntries)
        if (name == e.name)
            return e.id;
    return std::nullopt;
}

const std::vector<TemplateId>& all_templates() {
    static const std::vector<TemplateId> ids{TemplateId::GraphConstruct, TemplateId::GraphUpdate,
                                             TemplateId::BoxesAndLabels, TemplateId::PanelAnnotation,
                                             TemplateId::DirectTopLayer};
    return ids;
}

std::string_view prompt_template(TemplateId id) {
    const Entry& e = entry(id);
    return {reinterpret_cast<const char*>(e.data), *e.size};
}

std::string_view prompt_checksum(TemplateId id) { return entry(id).sha256; }

int template_image_arity(TemplateId) { return 1; }

std::string render_template(TemplateId id, const std::map<std::string, std::string>& substitutions) {
    std::string out(prompt_template(id));
    for (const auto& [key, value] : substitutions) {
        const std::string token = "{" + key + "}";
        for (std::size_t pos = out.find(token); pos != std::string::npos; pos = out.find(token, pos + value.size()))
            out.replace(pos, token.size(), value);
    }
    return out;
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 failed");
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

} // namespace layerpeel
