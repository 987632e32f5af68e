#include "layerpeel/error.hpp"
#include "layerpeel/gateway.hpp"
#include "layerpeel/png_io.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>

namespace layerpeel {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string>& known_response_tags() {
    static const std::vector<std::string> tags{"image_description", "layer_graph_reasoning", "layer_graph",
                                               "non_occluded_analysis", "caption", "thinking", "think",
                                               "description"};
    return tags;
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

} // namespace

std::map<std::string, std::string> parse_tagged_response(std::string_view text,
                                                         const std::vector<std::string>& required) {
    std::map<std::string, std::string> out;
    for (const auto& tag : known_response_tags()) {
        const std::string open = "<" + tag + ">", close = "</" + tag + ">";
        const auto c = text.find(close);
        if (c == std::string_view::npos)
            continue;
        // Last opening before the first closing: the innermost pair.
        const auto o = text.rfind(open, c);
        if (o == std::string_view::npos)
            continue;
        out[tag] = trim(text.substr(o + open.size(), c - o - open.size()));
    }
    for (const auto& r : required)
        if (!out.count(r))
            throw MissingTag("response has no complete <" + r + "> block");
    return out;
}

LayerGraph parse_graph_block(std::string_view block) {
    try {
        return parse_graph(block);
    } catch (const InvalidJson& e) {
        throw InvalidGraphJson(std::string("layer_graph is not valid JSON: ") + e.what());
    } catch (const SchemaViolation& e) {
        throw InvalidGraphJson(std::string("layer_graph violates the schema: ") + e.what());
    } catch (const DanglingEdge& e) {
        throw InvalidGraphJson(std::string("layer_graph has a dangling edge: ") + e.what());
    }
}

std::vector<BoxLabel> parse_box_response(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(strip_fences_and_comments(text));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidJson(e.what());
    }
    if (!j.is_array())
        throw InvalidJson("box response must be a JSON list");
    std::vector<BoxLabel> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        const std::string where = "entry " + std::to_string(i);
        if (!e.is_object() || !e.contains("box_2d") || !e.contains("label"))
            throw InvalidJson(where + " needs box_2d and label");
        const auto& b = e["box_2d"];
        if (!b.is_array() || b.size() != 4)
            throw InvalidJson(where + ": box_2d must hold 4 integers");
        BoxLabel bl;
        for (std::size_t k = 0; k < 4; ++k) {
            if (!b[k].is_number_integer())
                throw InvalidJson(where + ": box_2d must hold 4 integers");
            const auto v = b[k].get<long long>();
            if (v < 0 || v > 1000)
                throw BoxOutOfRange(where + ": coordinate " + std::to_string(v) + " outside 0..1000");
            bl.box_2d[k] = static_cast<int>(v);
        }
        const auto [y0, x0, y1, x1] = bl.box_2d;
        if (y1 <= y0 || x1 <= x0)
            throw BoxOutOfRange(where + ": box has non-positive extent");
        if (!e["label"].is_string())
            throw InvalidJson(where + ": label must be a string");
        bl.box = {x0 / 1000.0, y0 / 1000.0, x1 / 1000.0, y1 / 1000.0};
        bl.label = e["label"].get<std::string>();
        out.push_back(std::move(bl));
    }
    return out;
}

std::array<int, 4> to_box_2d(const BBoxNorm& b) {
    auto q = [](double v) { return static_cast<int>(std::lround(v * 1000.0)); };
    return {q(b.y0), q(b.x0), q(b.y1), q(b.x1)};
}

std::string base64_encode(std::string_view bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::string base64_decode(std::string_view text) {
    if (text.size() % 4 != 0)
        throw ProtocolError("base64 length is not a multiple of 4", std::string(text.substr(0, 256)));
    std::string out(3 * (text.size() / 4), '\0');
    const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
    if (n < 0)
        throw ProtocolError("malformed base64 payload", std::string(text.substr(0, 256)));
    // EVP_DecodeBlock keeps the zero bytes produced by '=' padding.
    std::size_t pad = 0;
    if (!text.empty() && text.back() == '=')
        pad = (text.size() >= 2 && text[text.size() - 2] == '=') ? 2 : 1;
    out.resize(static_cast<std::size_t>(n) - pad);
    return out;
}

namespace {

std::string png_b64(const RasterImage& img) {
    const auto png = encode_png(img);
    return base64_encode({reinterpret_cast<const char*>(png.data()), png.size()});
}

} // namespace

std::string vlm_request_json(const VlmRequest& r) {
    if (static_cast<int>(r.images_png.size()) != template_image_arity(r.template_id))
        throw std::invalid_argument(std::string(template_name(r.template_id)) + " takes " +
                                    std::to_string(template_image_arity(r.template_id)) + " image(s)");
    ordered_json o;
    o["protocol_version"] = kProtocolVersion;
    o["template_id"] = std::string(template_name(r.template_id));
    o["prompt"] = render_template(r.template_id, r.substitutions);
    o["images"] = ordered_json::array();
    for (const auto& png : r.images_png)
        o["images"].push_back(base64_encode(png));
    o["context"] = r.context ? ordered_json(*r.context) : ordered_json(nullptr);
    o["substitutions"] = r.substitutions;
    return o.dump();
}

std::string remover_request_json(const RemoveRequest& r) {
    if (!r.image || !r.plan)
        throw std::invalid_argument("remove request needs an image and a plan");
    if (r.sampler.steps < 1 || !(r.sampler.guidance > 0))
        throw std::invalid_argument("sampler needs steps >= 1 and guidance > 0");
    ordered_json o;
    o["protocol_version"] = kProtocolVersion;
    o["image"] = png_b64(*r.image);
    o["edit_prompt"] = r.edit_prompt;
    o["instances"] = ordered_json::array();
    for (const auto& inst : r.instances)
        o["instances"].push_back(
            {{"box", {inst.box.x0, inst.box.y0, inst.box.x1, inst.box.y1}}, {"label", inst.label}});
    o["attention_plan"] = ordered_json::parse(serialize_plan(r.layout, *r.plan));
    o["sampler"] = {{"steps", r.sampler.steps}, {"guidance", r.sampler.guidance}, {"seed", r.sampler.seed}};
    o["step_index"] = r.step_index;
    o["attempt"] = r.attempt;
    return o.dump();
}

} // namespace layerpeel
