#pragma once

#include "layerpeel/raster.hpp"
#include "layerpeel/svg.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace layerpeel {

struct PointCloud {
    std::vector<Point> points;
};

inline constexpr int kDefaultOutlineSamples = 256;

/// Arc-length-uniform samples along the flattened outline of every subpath
/// (in document units). Throws std::invalid_argument for fewer than 16
/// samples and EmptyCloud for a path without outline.
PointCloud sample_outline(const PathShape& path, int samples = kDefaultOutlineSamples);

/// Mean nearest-neighbour distance a->b plus b->a. Throws EmptyCloud.
double chamfer_distance(const PointCloud& a, const PointCloud& b);

struct IrregularityOptions {
    int samples_per_path = kDefaultOutlineSamples;
    /// Match only truth paths of identical fill when any exists.
    bool color_aware = false;
};

/// Mean over generated paths of the smallest chamfer distance to any truth
/// path. Throws EmptyDocument.
double path_irregularity(const SvgDoc& generated, const SvgDoc& truth, const IrregularityOptions& options = {});

/// Mean squared RGB difference on [0, 1] values. Throws DimensionMismatch.
double mse(const RasterImage& a, const RasterImage& b);

/// Removes lround(fraction * n) paths picked by a seeded partial Fisher-Yates
/// (mt19937_64); survivors keep paint order. fraction must be in [0, 1).
SvgDoc drop_paths(const SvgDoc& doc, double fraction = 0.3, std::uint64_t seed = 0);

/// Text-image similarity and perceptual distance provider. Implementations
/// throw ServiceUnavailable when they cannot answer.
class EmbeddingService {
public:
    virtual ~EmbeddingService() = default;
    virtual double similarity(std::string_view text, const RasterImage& image) = 0;
    virtual double perceptual_distance(const RasterImage& a, const RasterImage& b) = 0;
};

struct SemanticsOptions {
    int trials = 8;
    double fraction = 0.3;
    std::uint64_t seed = 0;
    int resolution = 512;
};

/// Mean over trials of sim(caption, render(doc)) - sim(caption, render(drop_paths(doc))).
/// Throws ServiceUnavailable.
double semantics_drop(const SvgDoc& doc, std::string_view caption, EmbeddingService& service,
                      const SemanticsOptions& options = {});

/// Results row; absent metrics are empty in CSV and null in JSON.
struct MetricRow {
    std::string name;
    std::optional<double> path_semantics;
    std::optional<double> path_irregularity;
    std::optional<double> mse;
    std::optional<double> lpips;
};

std::string results_csv(const std::vector<MetricRow>& rows);
std::string results_json(const std::vector<MetricRow>& rows);

struct EvalOptions {
    int resolution = 512;
    IrregularityOptions irregularity;
    SemanticsOptions semantics;
    EmbeddingService* service = nullptr; // semantics and LPIPS stay absent without one
    int jobs = 1;                        // files evaluated concurrently; the service must tolerate it
};

struct EvalReport {
    std::vector<MetricRow> per_file; // name = file name
    MetricRow mean;                  // name = "mean"; a metric is present only if present for every file
};

/// Pairs *.svg files by name across the two directories. Throws UnpairedFile
/// when either side has a file the other lacks.
EvalReport evaluate_directories(const std::filesystem::path& generated_dir, const std::filesystem::path& truth_dir,
                                const EvalOptions& options = {});

} // namespace layerpeel
