#pragma once

#include "layerpeel/svg.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace layerpeel::testing {

struct StubReply {
    int status = 200;
    std::string body;
    int delay_ms = 0;
};

/// Scripted HTTP server on 127.0.0.1. Each path serves its queued replies in
/// order, then falls back to its handler (or 404).
class StubServer {
public:
    StubServer();
    ~StubServer();
    StubServer(const StubServer&) = delete;
    StubServer& operator=(const StubServer&) = delete;

    std::string url() const;
    void enqueue(const std::string& path, StubReply reply);
    void set_handler(const std::string& path, std::function<StubReply(const std::string& body)> handler);

    std::vector<std::string> requests(const std::string& path) const;
    std::vector<std::string> auth_headers() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One recorded exchange of a replay fixture.
struct FixtureEntry {
    std::string path;
    StubReply reply;
};

/// Replies an annotator/remover service would give for the oracle peel of
/// `doc`: per step, the graph response, the box response and the image.
std::vector<FixtureEntry> record_oracle_session(const SvgDoc& doc, int resolution = 512);

/// JSON-lines form, one {"path", "status", "body"} object per line.
std::string fixtures_to_jsonl(const std::vector<FixtureEntry>& entries);
std::vector<FixtureEntry> fixtures_from_jsonl(const std::string& text);

std::filesystem::path fixture_dir();

/// The three-squares document the replay fixture was recorded from.
SvgDoc replay_fixture_doc();

} // namespace layerpeel::testing
