#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "layerpeel/error.hpp"
#include "layerpeel/gateway.hpp"
#include "layerpeel/png_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <thread>

namespace layerpeel {

using json = nlohmann::json;

EndpointConfig with_env_credentials(EndpointConfig config) {
    if (config.api_key.empty())
        if (const char* key = std::getenv("LAYERPEEL_API_KEY"))
            config.api_key = key;
    return config;
}

struct JsonEndpoint::Impl {
    explicit Impl(int limit) : slots(std::max(1, limit)) {}
    std::counting_semaphore<1024> slots;
    std::atomic<std::uint64_t> requests{0};
    std::atomic<std::uint64_t> retries{0};
};

JsonEndpoint::JsonEndpoint(EndpointConfig config)
    : config_(with_env_credentials(std::move(config))), impl_(std::make_unique<Impl>(config_.max_concurrency)) {
    if (config_.base_url.empty())
        throw std::invalid_argument("endpoint URL is empty");
}

JsonEndpoint::~JsonEndpoint() = default;

EndpointStats JsonEndpoint::stats() const { return {impl_->requests.load(), impl_->retries.load()}; }

namespace {

struct SlotGuard {
    std::counting_semaphore<1024>& s;
    explicit SlotGuard(std::counting_semaphore<1024>& sem) : s(sem) { s.acquire(); }
    ~SlotGuard() { s.release(); }
};

} // namespace

std::string JsonEndpoint::post(const std::string& path, const std::string& body) {
    SlotGuard slot(impl_->slots);
    const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
    double backoff_ms = config_.backoff_initial_ms;

    enum class LastFailure { None, Timeout, Server, Transport } last = LastFailure::None;
    std::string last_message;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            ++impl_->retries;
            if (on_retry)
                on_retry(path, attempt, last_message);
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(backoff_ms));
            backoff_ms *= config_.backoff_factor;
        }
        ++impl_->requests;

        httplib::Client client(config_.base_url);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        if (!config_.api_key.empty())
            client.set_bearer_token_auth(config_.api_key);

        const auto started = std::chrono::steady_clock::now();
        const auto res = client.Post(path, body, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                                   (err == httplib::Error::Read &&
                                    std::chrono::steady_clock::now() - started >= timeout * 9 / 10);
            last = timed_out ? LastFailure::Timeout : LastFailure::Transport;
            last_message = path + ": " + httplib::to_string(err);
            continue;
        }
        const int status = res->status;
        if (status >= 200 && status < 300)
            return res->body;
        if (status == 401 || status == 403)
            throw Unauthorized(path + ": HTTP " + std::to_string(status));
        if (status >= 500) {
            last = LastFailure::Server;
            last_message = path + ": HTTP " + std::to_string(status);
            continue;
        }
        throw ProtocolError(path + ": HTTP " + std::to_string(status), res->body);
    }
    const std::string summary =
        last_message + " (after " + std::to_string(config_.max_retries + 1) + " attempt(s))";
    switch (last) {
    case LastFailure::Timeout:
        throw Timeout(summary);
    case LastFailure::Server:
        throw ServerError(summary);
    default:
        throw BackendError(summary);
    }
}

namespace {

json parse_reply(const std::string& body, const std::string& what) {
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw ProtocolError(what + ": reply is not JSON (" + e.what() + ")", body);
    }
    if (!j.is_object() || !j.contains("protocol_version") || !j["protocol_version"].is_number_integer())
        throw ProtocolError(what + ": reply lacks protocol_version", body);
    if (j["protocol_version"].get<int>() != kProtocolVersion)
        throw ProtocolError(what + ": unsupported protocol_version " + j["protocol_version"].dump(), body);
    return j;
}

template <class T>
T field(const json& j, const char* key, const std::string& body, const std::string& what) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ProtocolError(what + ": reply field '" + key + "' missing or mistyped", body);
    }
}

std::string png_bytes(const RasterImage& img) {
    const auto png = encode_png(img);
    return {reinterpret_cast<const char*>(png.data()), png.size()};
}

} // namespace

std::string RemoteAnnotator::call(const VlmRequest& request) {
    const std::string body = endpoint_.post("/annotate", vlm_request_json(request));
    const json j = parse_reply(body, "annotate");
    return field<std::string>(j, "text", body, "annotate");
}

AnnotatorOutput RemoteAnnotator::do_annotate(const RasterImage& image, const std::optional<LayerGraph>& prev_graph) {
    VlmRequest req;
    req.images_png = {png_bytes(image)};
    if (prev_graph) {
        req.template_id = TemplateId::GraphUpdate;
        req.context = serialize_graph(*prev_graph);
    } else {
        req.template_id = TemplateId::GraphConstruct;
    }
    const std::string text = call(req);

    AnnotatorOutput out;
    try {
        const auto tags = parse_tagged_response(text, {"layer_graph", "caption"});
        out.graph = parse_graph_block(tags.at("layer_graph"));
        out.global_caption = tags.at("caption");
    } catch (const MissingTag& e) {
        throw ProtocolError(std::string("MissingTag: ") + e.what(), text);
    } catch (const InvalidGraphJson& e) {
        throw ProtocolError(std::string("InvalidGraphJson: ") + e.what(), text);
    }
    if (out.global_caption.empty())
        throw ProtocolError("empty caption", text);

    VlmRequest boxes;
    boxes.template_id = TemplateId::BoxesAndLabels;
    boxes.images_png = req.images_png;
    boxes.substitutions = {{"layers", out.global_caption}};
    const std::string box_text = call(boxes);
    try {
        for (const auto& b : parse_box_response(box_text))
            if (!b.label.empty())
                out.instances.push_back({b.box, b.label});
    } catch (const InvalidJson& e) {
        throw ProtocolError(std::string("InvalidJson: ") + e.what(), box_text);
    } catch (const BoxOutOfRange& e) {
        throw ProtocolError(std::string("BoxOutOfRange: ") + e.what(), box_text);
    }
    return out;
}

RasterImage RemoteRemover::do_remove(const RemoveRequest& request) {
    const std::string body = endpoint_.post("/remove", remover_request_json(request));
    const json j = parse_reply(body, "remove");
    const std::string png = base64_decode(field<std::string>(j, "image", body, "remove"));
    try {
        return decode_png({reinterpret_cast<const std::uint8_t*>(png.data()), png.size()});
    } catch (const std::exception& e) {
        throw ProtocolError(std::string("remove: image is not a PNG (") + e.what() + ")", body);
    }
}

double RemoteEmbeddingService::similarity(std::string_view text, const RasterImage& image) {
    try {
        json req{{"protocol_version", kProtocolVersion},
                 {"text", std::string(text)},
                 {"image", base64_encode(png_bytes(image))}};
        const std::string body = endpoint_.post("/similarity", req.dump());
        return field<double>(parse_reply(body, "similarity"), "score", body, "similarity");
    } catch (const Error& e) {
        throw ServiceUnavailable(std::string("similarity: ") + e.what());
    }
}

double RemoteEmbeddingService::perceptual_distance(const RasterImage& a, const RasterImage& b) {
    try {
        json req{{"protocol_version", kProtocolVersion},
                 {"image_a", base64_encode(png_bytes(a))},
                 {"image_b", base64_encode(png_bytes(b))}};
        const std::string body = endpoint_.post("/perceptual_distance", req.dump());
        return field<double>(parse_reply(body, "perceptual_distance"), "distance", body, "perceptual_distance");
    } catch (const Error& e) {
        throw ServiceUnavailable(std::string("perceptual_distance: ") + e.what());
    }
}

} // namespace layerpeel
