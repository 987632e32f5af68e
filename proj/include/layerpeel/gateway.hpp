#pragma once

#include "layerpeel/attention.hpp"
#include "layerpeel/layer_graph.hpp"
#include "layerpeel/metrics.hpp"
#include "layerpeel/peel.hpp"
#include "layerpeel/prompts.hpp"

#include <array>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerpeel {

inline constexpr int kProtocolVersion = 1;

// ---------------------------------------------------------------------------
// Response parsing

/// Tags recognized in VLM responses.
const std::vector<std::string>& known_response_tags();

/// Innermost content of every known tag that has a complete <tag>...</tag>
/// pair, trimmed. Throws MissingTag when a tag from `required` is absent.
std::map<std::string, std::string> parse_tagged_response(std::string_view text,
                                                         const std::vector<std::string>& required = {});

/// Graph from a <layer_graph> block (fences and // comments allowed).
/// Throws InvalidGraphJson.
LayerGraph parse_graph_block(std::string_view block);

struct BoxLabel {
    std::array<int, 4> box_2d{}; // [y0, x0, y1, x1] on 0..1000
    BBoxNorm box;
    std::string label;
};

/// JSON list of {"box_2d": [y0, x0, y1, x1], "label": ...}; "mask" ignored.
/// Throws InvalidJson for malformed input, BoxOutOfRange for coordinates
/// outside 0..1000 or non-positive extents.
std::vector<BoxLabel> parse_box_response(std::string_view text);

/// [y0, x0, y1, x1] on the 0..1000 frame, rounded.
std::array<int, 4> to_box_2d(const BBoxNorm& box);

// ---------------------------------------------------------------------------
// Wire payloads

std::string base64_encode(std::string_view bytes);
/// Throws ProtocolError for malformed input.
std::string base64_decode(std::string_view text);

struct VlmRequest {
    TemplateId template_id = TemplateId::GraphConstruct;
    std::vector<std::string> images_png; // raw PNG bytes
    std::optional<std::string> context;  // serialized LayerGraph
    std::map<std::string, std::string> substitutions;
};

/// JSON body for POST /annotate. Validates image arity (std::invalid_argument).
std::string vlm_request_json(const VlmRequest& request);

/// JSON body for POST /remove. Sampler steps must be >= 1 and guidance > 0.
std::string remover_request_json(const RemoveRequest& request);

// ---------------------------------------------------------------------------
// HTTP client

struct EndpointConfig {
    std::string base_url; // scheme://host:port
    std::string api_key;  // defaults to $LAYERPEEL_API_KEY
    int timeout_ms = 120000;
    int max_retries = 3;
    int backoff_initial_ms = 250;
    double backoff_factor = 2.0;
    int max_concurrency = 4;
};

/// Reads LAYERPEEL_API_KEY when `api_key` is empty.
EndpointConfig with_env_credentials(EndpointConfig config);

struct EndpointStats {
    std::uint64_t requests = 0;
    std::uint64_t retries = 0;
};

/// POSTs JSON with bearer auth. 5xx and transport failures are retried with
/// exponential backoff; 401/403 raise Unauthorized at once; other 4xx raise
/// ProtocolError; exhausted retries raise ServerError or Timeout.
class JsonEndpoint {
public:
    explicit JsonEndpoint(EndpointConfig config);
    ~JsonEndpoint();
    JsonEndpoint(const JsonEndpoint&) = delete;
    JsonEndpoint& operator=(const JsonEndpoint&) = delete;

    /// Returns the response body (raw).
    std::string post(const std::string& path, const std::string& body);
    EndpointStats stats() const;
    const EndpointConfig& config() const { return config_; }

    /// Called with (path, attempt, reason) before each retry.
    std::function<void(const std::string&, int, const std::string&)> on_retry;

private:
    struct Impl;
    EndpointConfig config_;
    std::unique_ptr<Impl> impl_;
};

/// graph_construct on the first call (no previous graph), graph_update
/// afterwards, then boxes_and_labels for the caption. Malformed responses
/// raise ProtocolError carrying the raw body.
class RemoteAnnotator : public Annotator {
public:
    explicit RemoteAnnotator(EndpointConfig config) : endpoint_(std::move(config)) {}
    bool concurrent_safe() const override { return true; }
    JsonEndpoint& endpoint() { return endpoint_; }

protected:
    AnnotatorOutput do_annotate(const RasterImage& image, const std::optional<LayerGraph>& prev_graph) override;

private:
    std::string call(const VlmRequest& request);
    JsonEndpoint endpoint_;
};

class RemoteRemover : public Remover {
public:
    explicit RemoteRemover(EndpointConfig config) : endpoint_(std::move(config)) {}
    bool concurrent_safe() const override { return true; }
    JsonEndpoint& endpoint() { return endpoint_; }

protected:
    RasterImage do_remove(const RemoveRequest& request) override;

private:
    JsonEndpoint endpoint_;
};

/// POST /similarity and /perceptual_distance. Every failure surfaces as
/// ServiceUnavailable.
class RemoteEmbeddingService : public EmbeddingService {
public:
    explicit RemoteEmbeddingService(EndpointConfig config) : endpoint_(std::move(config)) {}
    double similarity(std::string_view text, const RasterImage& image) override;
    double perceptual_distance(const RasterImage& a, const RasterImage& b) override;

private:
    JsonEndpoint endpoint_;
};

} // namespace layerpeel
