#include "layerpeel/error.hpp"
#include "layerpeel/gateway.hpp"
#include "layerpeel/png_io.hpp"
#include "layerpeel/prompts.hpp"
#include "layerpeel/shapes.hpp"

#include "../support/scenes.hpp"
#include "../support/stub_server.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <random>
#include <sstream>

using namespace layerpeel;
using layerpeel::testing::StubReply;
using layerpeel::testing::StubServer;

namespace {

EndpointConfig fast(const std::string& url) {
    EndpointConfig c;
    c.base_url = url;
    c.api_key = "test-key";
    c.timeout_ms = 2000;
    c.max_retries = 2;
    c.backoff_initial_ms = 5;
    return c;
}

std::string reply_text(const std::string& text) {
    return nlohmann::json{{"protocol_version", 1}, {"text", text}}.dump();
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void load_fixture(StubServer& server) {
    const auto entries =
        testing::fixtures_from_jsonl(slurp(testing::fixture_dir() / "replay_session.jsonl"));
    for (const auto& e : entries)
        server.enqueue(e.path, e.reply);
}

std::vector<std::string> step_jsons(const PeelTrace& t) {
    std::vector<std::string> out;
    for (const auto& s : t.steps)
        out.push_back(step_to_json(s));
    return out;
}

} // namespace

TEST_SUITE("model_gateways") {

TEST_CASE("shipped prompts match their pinned checksums") {
    for (TemplateId id : all_templates()) {
        CAPTURE(template_name(id));
        CHECK(sha256_hex(prompt_template(id)) == prompt_checksum(id));
        CHECK(std::string(prompt_template(id)) == testing::read_prompt_asset(std::string(template_name(id)) + ".txt"));
        CHECK(template_from_name(template_name(id)) == id);
    }
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK_FALSE(template_from_name("nope"));
    const std::string r = render_template(TemplateId::BoxesAndLabels, {{"layers", "the red circle"}});
    CHECK(r.find("\"the red circle\"") != std::string::npos);
    CHECK(r.find("{layers}") == std::string::npos);
}

TEST_CASE("tagged response parsing on the worked example") {
    const auto tags = parse_tagged_response(testing::cat_example_response(), {"caption", "layer_graph"});
    CHECK(tags.at("caption") == "The grey visible ear, white highlights on pupils, pink nose, black mouth, yellow "
                                "feather, green fish, and grey visible paw.");
    CHECK(tags.count("image_description"));
    CHECK(tags.count("non_occluded_analysis"));
    const LayerGraph g = parse_graph_block(tags.at("layer_graph"));
    CHECK(g.nodes.size() == 18);
}

TEST_CASE("tagged response edge cases") {
    CHECK_THROWS_AS(parse_tagged_response("<caption>never closed", {"caption"}), MissingTag);
    CHECK(parse_tagged_response("<caption><caption>inner</caption></caption>").at("caption") == "inner");
    CHECK(parse_tagged_response("x</caption>").count("caption") == 0);
    const std::string fenced = "```json\n{\n  // nodes\n  \"nodes\": [{\"id\": \"N1\", \"description\": \"d\", "
                               "\"color\": \"red\"}],\n  \"edges\": []\n}\n```";
    CHECK(parse_graph_block(fenced).nodes.size() == 1);
    CHECK_THROWS_AS(parse_graph_block("{\"nodes\": [}"), InvalidGraphJson);
    CHECK_THROWS_AS(parse_graph_block("{\"nodes\": [], \"edges\": [{\"source\": \"a\", \"target\": \"b\", "
                                      "\"relationship\": \"occludes\"}]}"),
                    InvalidGraphJson);

    // Totality on random junk built from tag fragments.
    std::mt19937_64 rng(5);
    const std::vector<std::string> parts{"<caption>", "</caption>", "<layer_graph>", "</layer_graph>", "x", "<", ">",
                                         "/", "{", "\n"};
    for (int i = 0; i < 2000; ++i) {
        std::string s;
        for (int k = 0; k < 12; ++k)
            s += parts[rng() % parts.size()];
        try {
            parse_tagged_response(s, {"caption"});
        } catch (const MissingTag&) {
        }
    }
}

TEST_CASE("box responses") {
    auto one = parse_box_response(R"([{"box_2d":[0,0,1000,1000],"label":"whole"}])");
    REQUIRE(one.size() == 1);
    CHECK(one[0].box == BBoxNorm{0, 0, 1, 1});
    auto two = parse_box_response(R"(```json
[{"box_2d":[100,200,300,400],"label":"x","mask":"data:image/png;base64,AAAA"}]
```)");
    REQUIRE(two.size() == 1);
    CHECK(two[0].box == BBoxNorm{0.2, 0.1, 0.4, 0.3});
    CHECK(two[0].label == "x");
    CHECK_THROWS_AS(parse_box_response(R"([{"box_2d":[300,0,100,10],"label":"x"}])"), BoxOutOfRange);
    CHECK_THROWS_AS(parse_box_response(R"([{"box_2d":[0,0,1001,10],"label":"x"}])"), BoxOutOfRange);
    CHECK_THROWS_AS(parse_box_response(R"([{"box_2d":[0,0,10],"label":"x"}])"), InvalidJson);
    CHECK_THROWS_AS(parse_box_response("not json"), InvalidJson);
    CHECK_THROWS_AS(parse_box_response(R"({"box_2d":[0,0,10,10]})"), InvalidJson);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 500; ++i) {
        double a = u(rng), b = u(rng), c = u(rng), d = u(rng);
        const BBoxNorm box{std::min(a, b), std::min(c, d), std::max(a, b) + 0.01, std::max(c, d) + 0.01};
        if (!box.valid())
            continue;
        const auto q = to_box_2d(box);
        const BBoxNorm back{q[1] / 1000.0, q[0] / 1000.0, q[3] / 1000.0, q[2] / 1000.0};
        REQUIRE(std::abs(back.x0 - box.x0) <= 0.0005 + 1e-12);
        REQUIRE(std::abs(back.y1 - box.y1) <= 0.0005 + 1e-12);
    }
}

TEST_CASE("base64 round trip") {
    for (std::string s : {"", "f", "fo", "foo", "foob", "fooba", "foobar"})
        CHECK(base64_decode(base64_encode(s)) == s);
    CHECK(base64_encode("foobar") == "Zm9vYmFy");
    std::string bin(300, '\0');
    for (std::size_t i = 0; i < bin.size(); ++i)
        bin[i] = static_cast<char>(i * 7);
    CHECK(base64_decode(base64_encode(bin)) == bin);
    CHECK_THROWS_AS(base64_decode("abc"), ProtocolError);
}

TEST_CASE("request payloads") {
    VlmRequest v;
    v.template_id = TemplateId::GraphUpdate;
    v.images_png = {"PNG"};
    v.context = "{}";
    const auto j = nlohmann::json::parse(vlm_request_json(v));
    CHECK(j["protocol_version"] == 1);
    CHECK(j["template_id"] == "graph_update");
    CHECK(j["images"][0] == base64_encode("PNG"));
    v.images_png.clear();
    CHECK_THROWS_AS(vlm_request_json(v), std::invalid_argument);

    const RasterImage img(8, 8, ColorRGBA::white());
    const TokenLayout layout = layout_for_prompts("remove it", {}, 2, 2);
    const AttentionPlan plan = build_joint_mask(layout, {});
    RemoveRequest r;
    r.image = &img;
    r.plan = &plan;
    r.layout = layout;
    r.edit_prompt = "remove it";
    const auto rj = nlohmann::json::parse(remover_request_json(r));
    CHECK(rj["sampler"]["steps"] == 40);
    CHECK(rj["sampler"]["guidance"] == 4.5);
    CHECK(rj["attention_plan"]["n_tokens"] == layout.total_tokens);
    r.sampler.steps = 0;
    CHECK_THROWS_AS(remover_request_json(r), std::invalid_argument);
}

TEST_CASE("replayed fixtures give a deterministic trace") {
    const SvgDoc doc = testing::replay_fixture_doc();
    const RasterImage input = rasterize(doc);
    PeelTrace traces[2];
    for (auto& trace : traces) {
        StubServer server;
        load_fixture(server);
        RemoteAnnotator ann(fast(server.url()));
        RemoteRemover rem(fast(server.url()));
        trace = run(input, ann, rem);
        const auto sent = server.requests("/annotate");
        REQUIRE(sent.size() == 6);
        CHECK(nlohmann::json::parse(sent[0])["template_id"] == "graph_construct");
        CHECK(nlohmann::json::parse(sent[1])["template_id"] == "boxes_and_labels");
        CHECK(nlohmann::json::parse(sent[2])["template_id"] == "graph_update");
        CHECK(nlohmann::json::parse(sent[2])["context"].is_string());
        CHECK(server.auth_headers().front() == "Bearer test-key");
    }
    REQUIRE(traces[0].steps.size() == 3);
    CHECK(traces[0].termination == Termination::Blank);
    CHECK(step_jsons(traces[0]) == step_jsons(traces[1]));
    CHECK(emit_svg_text(traces[0].final_doc) == emit_svg_text(traces[1].final_doc));

    // The fixture was recorded from the oracle: the replay matches it.
    auto oracle = make_oracle_backends(doc);
    const PeelTrace ref = run(input, *oracle.annotator, *oracle.remover);
    CHECK(emit_svg_text(ref.final_doc) == emit_svg_text(traces[0].final_doc));
    for (std::size_t i = 0; i < ref.steps.size(); ++i) {
        CHECK(ref.steps[i].edit_prompt == traces[0].steps[i].edit_prompt);
        CHECK(equivalent(ref.steps[i].annotator_output.graph, traces[0].steps[i].annotator_output.graph));
    }
}

TEST_CASE("server errors are retried with backoff") {
    StubServer server;
    server.enqueue("/remove", {500, "boom"});
    server.enqueue("/remove", {503, "busy"});
    const RasterImage white(512, 512, ColorRGBA::white());
    const auto png = encode_png(white);
    server.enqueue("/remove", {200, nlohmann::json{{"protocol_version", 1},
                                                   {"image", base64_encode({reinterpret_cast<const char*>(png.data()),
                                                                            png.size()})}}
                                        .dump()});
    RemoteRemover rem(fast(server.url()));
    std::vector<int> attempts;
    rem.endpoint().on_retry = [&](const std::string&, int a, const std::string&) { attempts.push_back(a); };
    const RasterImage img = rasterize(testing::replay_fixture_doc());
    const TokenLayout layout = layout_for_prompts("remove x", {}, 4, 4);
    const AttentionPlan plan = build_joint_mask(layout, {});
    RemoveRequest req;
    req.image = &img;
    req.plan = &plan;
    req.layout = layout;
    CHECK(rem.remove(req) == white);
    CHECK(rem.endpoint().stats().retries == 2);
    CHECK(attempts == std::vector<int>{1, 2});

    for (int i = 0; i < 3; ++i)
        server.enqueue("/remove", {500, "down"});
    CHECK_THROWS_AS(rem.remove(req), ServerError);
}

TEST_CASE("distinct failure kinds") {
    StubServer server;
    const RasterImage img = rasterize(testing::replay_fixture_doc());

    server.enqueue("/annotate", {401, "no"});
    RemoteAnnotator ann(fast(server.url()));
    CHECK_THROWS_AS(ann.annotate(img, std::nullopt), Unauthorized);

    const std::string bad = "<layer_graph>{\"nodes\": [</layer_graph><caption>c</caption>";
    server.enqueue("/annotate", {200, reply_text(bad)});
    try {
        ann.annotate(img, std::nullopt);
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(e.raw_payload() == bad);
    }

    server.enqueue("/annotate", {200, "{\"protocol_version\": 2, \"text\": \"\"}"});
    CHECK_THROWS_AS(ann.annotate(img, std::nullopt), ProtocolError);

    EndpointConfig slow = fast(server.url());
    slow.timeout_ms = 100;
    slow.max_retries = 0;
    server.enqueue("/annotate", {200, reply_text("late"), 400});
    RemoteAnnotator late(slow);
    CHECK_THROWS_AS(late.annotate(img, std::nullopt), Timeout);

    // Inside a run the failure is recorded with its payload.
    server.enqueue("/annotate", {200, reply_text(bad)});
    auto oracle = make_oracle_backends(testing::replay_fixture_doc());
    const PeelTrace t = run(img, ann, *oracle.remover);
    CHECK(t.termination == Termination::BackendFailure);
    REQUIRE(t.failure);
    CHECK(t.failure->kind == "ProtocolError");
    CHECK(t.failure->raw_payload == bad);
}

TEST_CASE("embedding client") {
    StubServer server;
    server.set_handler("/similarity", [](const std::string&) {
        return StubReply{200, "{\"protocol_version\": 1, \"score\": 0.25}"};
    });
    server.set_handler("/perceptual_distance", [](const std::string&) {
        return StubReply{200, "{\"protocol_version\": 1, \"distance\": 0.125}"};
    });
    RemoteEmbeddingService svc(fast(server.url()));
    const RasterImage img(16, 16, ColorRGBA::white());
    CHECK(svc.similarity("a cat", img) == 0.25);
    CHECK(svc.perceptual_distance(img, img) == 0.125);
    CHECK(semantics_drop(testing::replay_fixture_doc(), "shapes", svc) == 0.0);
    const auto body = nlohmann::json::parse(server.requests("/similarity").front());
    CHECK(body["text"] == "a cat");

    EndpointConfig dead = fast("http://127.0.0.1:1");
    dead.max_retries = 0;
    RemoteEmbeddingService down(dead);
    CHECK_THROWS_AS(down.similarity("x", img), ServiceUnavailable);
}

}
