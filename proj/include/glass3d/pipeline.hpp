#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "glass3d/io.hpp"
#include "glass3d/losses.hpp"
#include "glass3d/metrics.hpp"
#include "glass3d/synth.hpp"

namespace glass3d::pipeline {

namespace fs = std::filesystem;

/// Instance- or frame-level problem found while processing a dataset.
struct Diagnostic {
    std::string frame_id;
    int instance_id = 0;  ///< 0 for frame-level diagnostics
    std::string kind;
    std::string message;
};

struct AnnotateOptions {
    int threads = 1;
    FitOptions fit;
    bool per_instance_depth = false;
    bool png16_depth = false;
    bool centerness = true;
};

struct InstanceFitLog {
    std::string frame_id;
    int instance_id = 0;
    bool ok = false;
    double residual_rms = 0.0;
    double condition = 0.0;
    long long pixel_count = 0;
};

struct AnnotateSummary {
    int frames = 0;
    int instances = 0;
    int instances_ok = 0;
    std::vector<InstanceFitLog> fits;
    std::vector<Diagnostic> diagnostics;
};

/// Transform -> fit -> project for every frame of `manifest_path`. Writes
/// manifest.json, masks/, depth/, centerness/ and annotate_log.json into
/// `out_dir`. Failing instances are skipped with a diagnostic.
AnnotateSummary annotate(const fs::path& manifest_path, const fs::path& out_dir,
                         const AnnotateOptions& options = {});

struct DatasetStats {
    /// planes-per-image bins 0..9 and "10+" (index 10).
    std::array<long long, 11> planes_histogram{};
    double bin_width = 1.0;
    std::vector<long long> depth_range_histogram;
    std::map<std::string, long long> split_counts;
    long long frame_count = 0;
    double min_depth = 0.0;
    double max_depth = 0.0;

    struct FrameRow {
        std::string id;
        std::string split;
        int planes = 0;
        double depth_min = 0.0;
        double depth_max = 0.0;
        double depth_range = 0.0;
    };
    std::vector<FrameRow> frames;
};

struct StatsOptions {
    double bin_width = 1.0;
};

/// Reads each frame's depth map (rendering from resolved planes when the
/// frame has no depth file). Throws EmptyDataset without frames.
DatasetStats compute_stats(const fs::path& manifest_path, const StatsOptions& options = {});
void write_stats_text(std::ostream& os, const DatasetStats& stats);
void write_stats_files(const fs::path& out_dir, const DatasetStats& stats);

enum class EvalMode { seg, depth, losses };
EvalMode parse_eval_mode(const std::string& name);

struct EvalOptions {
    EvalMode mode = EvalMode::depth;
    SegMetricOptions seg;
    double delta = kDefaultPointOffset;
    int threads = 1;
};

struct LossRow {
    std::string id;
    std::optional<double> centerness;
    std::optional<double> segmentation;
    InstanceLossReport plane;
    long long skipped_pixels = 0;
    double total = 0.0;
};

struct EvalReport {
    EvalMode mode = EvalMode::depth;
    std::vector<DepthReportRow> depth_rows;  ///< per image, then "mean"
    std::vector<SegReportRow> seg_rows;
    std::vector<LossRow> loss_rows;
};

/// Compares maps in `pred_dir` against `gt_dir`, matched by frame id.
///   depth:  depth/<id>.pfm in both; evaluated on gt > 0
///   seg:    gt masks/<id>.png; pred prob/<id>.pfm or masks/<id>.png
///   losses: gt dataset with manifest.json; pred planes/<id>.pfm (3 channels)
///           plus optional prob/<id>.pfm and centerness/<id>.pfm
EvalReport evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const EvalOptions& options);
void write_eval_text(std::ostream& os, const EvalReport& report);
void write_eval_csv(std::ostream& os, const EvalReport& report);

struct SynthOptions {
    std::uint64_t seed = 0;
    int count = 1;
    /// Fixed category, or nullopt to draw one per scene.
    std::optional<SceneCategory> category;
    /// Fixed plane count, or 0 to draw 1..10 per scene.
    int plane_count = 0;
    double depth_min = kMinGlassDepth;
    double depth_max = kMaxGlassDepth;
    CameraIntrinsics intrinsics = default_intrinsics();
    bool centerness = true;
    int threads = 1;
};

/// Scene spec for the i-th frame of a synthetic batch.
SceneSpec synth_scene_spec(const SynthOptions& options, int index);

/// Manifest record of a synthetic scene (box = rectangle corners).
io::FrameRecord synth_frame_record(const SyntheticScene& scene, const std::string& id);

/// Writes manifest.json, masks/, depth/ and centerness/ for `count` scenes.
void write_synthetic_dataset(const fs::path& out_dir, const SynthOptions& options);

/// Frame id used by synth and annotate outputs ("000042").
std::string frame_id(int index);

}  // namespace glass3d::pipeline
