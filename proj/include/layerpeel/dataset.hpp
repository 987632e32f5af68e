#pragma once

#include "layerpeel/occlusion.hpp"
#include "layerpeel/raster.hpp"
#include "layerpeel/svg.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace layerpeel {

struct TripletRecord {
    std::string svg_id;
    int step_index = 0;
    std::string edit_prompt;
    std::string src_image_path; // relative to the corpus output directory
    std::string tar_image_path;
    std::string panel_image_path;
    std::vector<std::string> removed_path_ids;
    std::size_t changed_pixels = 0;
};

struct Triplet {
    TripletRecord record;
    RasterImage src;
    RasterImage tar;
    RasterImage panel;
};

/// Caption for one stratum. Receives the topmost paths, the document
/// viewbox and the A/B panel. Must not return an empty string.
using Captioner =
    std::function<std::string(const std::vector<PathShape>& topmost, const ViewBox& viewbox, const RasterImage& panel)>;

/// geometric_caption over the topmost paths.
Captioner geometric_captioner();

struct TripletOptions {
    int resolution = 512;
    bool with_panels = true;
    Captioner captioner; // geometric_captioner() when empty
};

/// Iterated topmost extraction until the document is empty. Image paths in the
/// records follow "<svg_id>/step_<k>_{src,tar,panel}.png". Throws EmptyDocument.
std::vector<Triplet> build_triplets(const SvgDoc& doc, const std::string& svg_id, const TripletOptions& options = {});

inline constexpr int kCheckerCell = 16;
inline constexpr std::uint8_t kCheckerLight = 255;
inline constexpr std::uint8_t kCheckerDark = 230;

/// 16-px cells; cell (0, 0) is white, neighbours light gray.
RasterImage checkerboard(int width, int height);

/// Two `half`-wide panes side by side: the full document (A) and only its
/// topmost paths (B), each over the checkerboard, split by a 2-px black line
/// at x = half - 1 and half.
RasterImage compose_panel(const SvgDoc& full, const TopmostSet& topmost, int half = 512);

struct SplitSizes {
    std::size_t train = 113700;
    std::size_t val = 1000;
    std::size_t test = 1000;
};

struct CorpusConfig {
    SplitSizes split;
    std::uint64_t seed = 0;
    std::size_t max_paths = 30;
    int resolution = 512;
    int jobs = 1;
    TripletOptions triplets;
};

struct RejectedFile {
    std::string file;
    std::string reason;
};

struct CorpusManifest {
    std::vector<std::string> accepted; // svg ids, sorted
    std::vector<RejectedFile> rejected;
    std::map<std::string, std::string> split; // svg id -> train | val | test
    std::map<std::string, std::size_t> triplet_counts;
    std::size_t total_triplets = 0;
};

/// Seeded Fisher-Yates shuffle, then val and test taken first. When there are
/// fewer ids than the configured total, all three sizes are scaled down
/// proportionally; ids beyond the total go to train.
std::map<std::string, std::string> assign_splits(std::vector<std::string> ids, const SplitSizes& sizes,
                                                 std::uint64_t seed);

/// Processes every *.svg directly inside `input_dir`. Writes images under
/// output_dir/<svg_id>/, one JSON record per triplet in manifest.jsonl and the
/// summary in corpus.json. Per-file failures are recorded, never thrown.
CorpusManifest build_corpus(const std::filesystem::path& input_dir, const std::filesystem::path& output_dir,
                            const CorpusConfig& config = {});

std::string record_to_json_line(const TripletRecord& record);
std::string corpus_to_json(const CorpusManifest& manifest);

} // namespace layerpeel
