#pragma once

#include "layerpeel/attention.hpp"
#include "layerpeel/bitmask.hpp"
#include "layerpeel/layer_graph.hpp"
#include "layerpeel/raster.hpp"
#include "layerpeel/svg.hpp"
#include "layerpeel/vectorize.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace layerpeel {

struct InstanceAnnotation {
    BBoxNorm box;
    std::string label;
};

struct AnnotatorOutput {
    LayerGraph graph;
    std::string global_caption;
    std::vector<InstanceAnnotation> instances;
};

/// Noise and guidance settings forwarded to the remover untouched.
struct SamplerConfig {
    int steps = 40;
    double guidance = 4.5;
    std::uint64_t seed = 0;
};

struct RemoveRequest {
    const RasterImage* image = nullptr;
    std::string edit_prompt;
    std::vector<InstanceAnnotation> instances;
    TokenLayout layout;
    const AttentionPlan* plan = nullptr;
    SamplerConfig sampler;
    int step_index = 0;
    int attempt = 0;
};

/// Backends that are not concurrent_safe() get their calls serialized
/// through a per-instance mutex.
class Annotator {
public:
    virtual ~Annotator() = default;

    AnnotatorOutput annotate(const RasterImage& image, const std::optional<LayerGraph>& prev_graph);
    virtual bool concurrent_safe() const { return false; }

protected:
    virtual AnnotatorOutput do_annotate(const RasterImage& image, const std::optional<LayerGraph>& prev_graph) = 0;

private:
    std::mutex mutex_;
};

class Remover {
public:
    virtual ~Remover() = default;

    RasterImage remove(const RemoveRequest& request);
    /// Called by run() once a step has been accepted.
    void commit();
    virtual bool concurrent_safe() const { return false; }

protected:
    virtual RasterImage do_remove(const RemoveRequest& request) = 0;
    virtual void do_commit() {}

private:
    std::mutex mutex_;
};

struct PeelConfig {
    int max_iterations = 50;
    int rho = DiffThreshold::kDefault;
    int blank_tolerance = 0;
    /// Extra remover calls after an empty diff before giving up.
    int stall_retries = 2;
    int resolution = 512;
    VectorizeOptions vectorize;
    bool close_mask = false;
    int token_grid_rows = 32;
    int token_grid_cols = 32;
    PlanOptions plan;
    SamplerConfig sampler;
};

struct StepTimings {
    double annotate_ms = 0;
    double remove_ms = 0;
    double vectorize_ms = 0;
};

struct PeelStep {
    int index = 0;
    RasterImage input_image;
    AnnotatorOutput annotator_output;
    std::string edit_prompt;
    TokenLayout layout;
    std::string plan_summary;
    RasterImage output_image;
    BitMask mask;
    VectorLayer layer;
    int attempts = 1;
    std::uint64_t sampler_seed = 0;
    std::vector<std::string> warnings;
    StepTimings timings;
};

enum class Termination { Blank, MaxIterations, Stalled, BackendFailure };
std::string_view to_string(Termination t);

struct FailureRecord {
    std::string kind;
    std::string message;
    std::string raw_payload;
};

struct PeelTrace {
    std::vector<PeelStep> steps;
    SvgDoc final_doc;
    Termination termination = Termination::Blank;
    std::optional<FailureRecord> failure;

    std::vector<VectorLayer> layers() const;
};

/// Seed for remover attempt `attempt` of step `step`.
std::uint64_t derive_seed(std::uint64_t base, int step, int attempt);

/// One annotate / remove / diff / vectorize round. Retries the remover
/// config.stall_retries times on an empty diff, then throws StallDetected.
/// Does not commit the remover.
PeelStep peel_once(const RasterImage& image, const std::optional<LayerGraph>& prev_graph, Annotator& annotator,
                   Remover& remover, const PeelConfig& config, int step_index = 0);

/// Full loop until the image is blank, the iteration cap is hit, the remover
/// stalls, or a backend fails. Throws DimensionMismatch when the image is not
/// config.resolution square.
PeelTrace run(const RasterImage& image, Annotator& annotator, Remover& remover, const PeelConfig& config = {});

/// Ground truth shared by the oracle backends; paths leave it on commit.
class OracleScene {
public:
    explicit OracleScene(SvgDoc truth, int resolution = 512);

    const SvgDoc& truth() const { return truth_; }
    int resolution() const { return resolution_; }
    void remove_paths(const std::vector<std::string>& ids);

private:
    SvgDoc truth_;
    int resolution_;
};

/// Graph over the remaining paths. Paths whose visible part splits into more
/// pieces than their own coverage become fragment nodes "<id>#k" linked by
/// interrupted_shape. Occludes edges join paths that are directly stacked at
/// some pixel. Instances are the topmost paths.
class OracleAnnotator : public Annotator {
public:
    explicit OracleAnnotator(std::shared_ptr<OracleScene> scene) : scene_(std::move(scene)) {}
    bool concurrent_safe() const override { return true; }

protected:
    AnnotatorOutput do_annotate(const RasterImage& image, const std::optional<LayerGraph>& prev_graph) override;

private:
    std::shared_ptr<OracleScene> scene_;
};

/// Renders the truth without its topmost set; commit() drops those paths.
class OracleRemover : public Remover {
public:
    explicit OracleRemover(std::shared_ptr<OracleScene> scene) : scene_(std::move(scene)) {}

    const std::vector<std::string>& pending() const { return pending_; }

protected:
    RasterImage do_remove(const RemoveRequest& request) override;
    void do_commit() override;

private:
    std::shared_ptr<OracleScene> scene_;
    std::vector<std::string> pending_;
};

/// Annotator output computed from a document without a scene.
AnnotatorOutput oracle_annotate(const SvgDoc& truth, int resolution = 512);

struct OracleBackends {
    std::shared_ptr<OracleScene> scene;
    std::unique_ptr<OracleAnnotator> annotator;
    std::unique_ptr<OracleRemover> remover;
};
OracleBackends make_oracle_backends(SvgDoc truth, int resolution = 512);

/// Trace directory: step_XXX_{src,out,mask}.png, step_XXX.json, final.svg,
/// manifest.json, timings.json. Everything except timings.json is a pure
/// function of the inputs. Refuses to replace existing files unless `force`
/// (OutputExists).
void write_trace(const PeelTrace& trace, const PeelConfig& config, const std::filesystem::path& dir,
                 bool force = false);

std::string step_to_json(const PeelStep& step);
std::string trace_manifest_json(const PeelTrace& trace, const PeelConfig& config);
std::string trace_timings_json(const PeelTrace& trace);

} // namespace layerpeel
