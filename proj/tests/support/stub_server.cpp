#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "stub_server.hpp"

#include "layerpeel/gateway.hpp"
#include "layerpeel/occlusion.hpp"
#include "layerpeel/peel.hpp"
#include "layerpeel/png_io.hpp"
#include "layerpeel/shapes.hpp"

#include <json.hpp>

#include <sstream>

namespace layerpeel::testing {

struct StubServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    mutable std::mutex mutex;
    std::map<std::string, std::deque<StubReply>> queues;
    std::map<std::string, std::function<StubReply(const std::string&)>> handlers;
    std::map<std::string, std::vector<std::string>> received;
    std::vector<std::string> auth;
};

StubServer::StubServer() : impl_(std::make_unique<Impl>()) {
    impl_->server.Post(R"(/.*)", [this](const httplib::Request& req, httplib::Response& res) {
        StubReply reply{404, "no scripted reply", 0};
        {
            std::lock_guard lock(impl_->mutex);
            impl_->received[req.path].push_back(req.body);
            impl_->auth.push_back(req.get_header_value("Authorization"));
            auto& q = impl_->queues[req.path];
            if (!q.empty()) {
                reply = q.front();
                q.pop_front();
            } else if (const auto h = impl_->handlers.find(req.path); h != impl_->handlers.end()) {
                reply = h->second(req.body);
            }
        }
        if (reply.delay_ms > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(reply.delay_ms));
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

StubServer::~StubServer() {
    impl_->server.stop();
    if (impl_->thread.joinable())
        impl_->thread.join();
}

std::string StubServer::url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

void StubServer::enqueue(const std::string& path, StubReply reply) {
    std::lock_guard lock(impl_->mutex);
    impl_->queues[path].push_back(std::move(reply));
}

void StubServer::set_handler(const std::string& path, std::function<StubReply(const std::string&)> handler) {
    std::lock_guard lock(impl_->mutex);
    impl_->handlers[path] = std::move(handler);
}

std::vector<std::string> StubServer::requests(const std::string& path) const {
    std::lock_guard lock(impl_->mutex);
    const auto it = impl_->received.find(path);
    return it == impl_->received.end() ? std::vector<std::string>{} : it->second;
}

std::vector<std::string> StubServer::auth_headers() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->auth;
}

std::vector<FixtureEntry> record_oracle_session(const SvgDoc& doc, int resolution) {
    using json = nlohmann::ordered_json;
    std::vector<FixtureEntry> out;
    SvgDoc truth = doc;
    while (!truth.paths.empty()) {
        const AnnotatorOutput ann = oracle_annotate(truth, resolution);
        std::ostringstream text;
        text << "<image_description>\nFlat shapes on white.\n</image_description>\n\n"
             << "<layer_graph_reasoning>\nRecorded from geometry.\n</layer_graph_reasoning>\n\n"
             << "<layer_graph>\n```json\n// recorded graph\n"
             << serialize_graph(ann.graph) << "```\n</layer_graph>\n\n"
             << "<caption>\n" << ann.global_caption << "\n</caption>\n";
        out.push_back({"/annotate", {200, json{{"protocol_version", 1}, {"text", text.str()}}.dump(), 0}});

        json boxes = json::array();
        for (const auto& inst : ann.instances)
            boxes.push_back({{"box_2d", to_box_2d(inst.box)}, {"label", inst.label}});
        out.push_back({"/annotate", {200, json{{"protocol_version", 1}, {"text", boxes.dump()}}.dump(), 0}});

        const TopmostSet top = topmost_set(truth, resolution);
        truth = truth.without(top.path_ids);
        const auto png = encode_png(rasterize(truth, resolution));
        out.push_back({"/remove",
                       {200,
                        json{{"protocol_version", 1},
                             {"image", base64_encode({reinterpret_cast<const char*>(png.data()), png.size()})}}
                            .dump(),
                        0}});
    }
    return out;
}

std::string fixtures_to_jsonl(const std::vector<FixtureEntry>& entries) {
    std::string out;
    for (const auto& e : entries)
        out += nlohmann::ordered_json{{"path", e.path}, {"status", e.reply.status}, {"body", e.reply.body}}.dump() +
               "\n";
    return out;
}

std::vector<FixtureEntry> fixtures_from_jsonl(const std::string& text) {
    std::vector<FixtureEntry> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto j = nlohmann::json::parse(line);
        out.push_back({j.at("path").get<std::string>(),
                       {j.at("status").get<int>(), j.at("body").get<std::string>(), 0}});
    }
    return out;
}

std::filesystem::path fixture_dir() { return LAYERPEEL_FIXTURES_DIR; }

SvgDoc replay_fixture_doc() {
    SvgDoc d;
    d.viewbox = {0, 0, 512, 512};
    d.paths = {make_rect("base", 40, 40, 400, 300, {255, 165, 0, 255}),
               make_rect("window", 120, 100, 200, 150, {0, 0, 255, 255}),
               make_circle("sun", 400, 400, 60, {255, 0, 0, 255}),
               make_rect("pane", 180, 140, 60, 60, {255, 255, 0, 255})};
    return d;
}

} // namespace layerpeel::testing
