// Regenerates tests/fixtures/replay_session.jsonl from the oracle backends.
#include "stub_server.hpp"

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    using namespace layerpeel::testing;
    const auto out = argc > 1 ? std::filesystem::path(argv[1]) : fixture_dir() / "replay_session.jsonl";
    std::ofstream(out, std::ios::binary) << fixtures_to_jsonl(record_oracle_session(replay_fixture_doc()));
    std::cout << "wrote " << out << "\n";
}
