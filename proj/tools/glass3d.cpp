// glass3d: batch front-end for annotation, dataset statistics, evaluation and
// synthetic data generation.
//
// Exit codes: 0 success, 1 fatal error, 2 finished with instance diagnostics.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "glass3d/errors.hpp"
#include "glass3d/pipeline.hpp"

namespace fs = std::filesystem;
using namespace glass3d;

namespace {

struct IntrinsicsFlags {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    int width = 0, height = 0;

    void add(CLI::App* app) {
        const CameraIntrinsics d = default_intrinsics();
        fx = d.fx;
        fy = d.fy;
        cx = d.cx;
        cy = d.cy;
        width = d.width;
        height = d.height;
        app->add_option("--fx", fx, "Focal length x (px)")->capture_default_str();
        app->add_option("--fy", fy, "Focal length y (px)")->capture_default_str();
        app->add_option("--cx", cx, "Principal point x (px)")->capture_default_str();
        app->add_option("--cy", cy, "Principal point y (px)")->capture_default_str();
        app->add_option("--width", width, "Image width (px)")->capture_default_str();
        app->add_option("--height", height, "Image height (px)")->capture_default_str();
    }
    CameraIntrinsics get() const { return {fx, fy, cx, cy, width, height}; }
};

void write_text(const fs::path& path, const std::string& text) {
    io::write_file_bytes(path, text);
}

int report_diagnostics(const std::vector<pipeline::Diagnostic>& diagnostics) {
    for (const auto& d : diagnostics) {
        std::cerr << "frame " << d.frame_id;
        if (d.instance_id != 0) std::cerr << " instance " << d.instance_id;
        std::cerr << ": " << d.kind << ": " << d.message << '\n';
    }
    return diagnostics.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monocular 3D glass detection geometry and evaluation toolkit"};
    app.require_subcommand(1);

    // annotate
    auto* annotate = app.add_subcommand("annotate", "Fit planes from boxes and poses, render depth maps");
    std::string ann_input, ann_output;
    int ann_parallel = 1;
    pipeline::AnnotateOptions ann_opts;
    bool ann_no_centerness = false;
    annotate->add_option("--input,-i", ann_input, "Input manifest.json")->required();
    annotate->add_option("--output,-o", ann_output, "Output directory")->required();
    annotate->add_option("--parallel,-j", ann_parallel, "Frame-level worker threads")
        ->check(CLI::PositiveNumber)->capture_default_str();
    annotate->add_option("--fit-tolerance", ann_opts.fit.max_residual_rms,
                         "Max rms residual of the plane fit before NearOriginPlane")->capture_default_str();
    annotate->add_option("--max-condition", ann_opts.fit.max_condition,
                         "Max condition number of the fit before DegenerateGeometry")->capture_default_str();
    annotate->add_flag("--per-instance-depth", ann_opts.per_instance_depth, "Also write one depth map per instance");
    annotate->add_flag("--png16", ann_opts.png16_depth, "Also write 16-bit millimetre depth PNGs");
    annotate->add_flag("--no-centerness", ann_no_centerness, "Skip centerness maps");

    // stats
    auto* stats = app.add_subcommand("stats", "Planes-per-image and depth-range histograms");
    std::string st_input, st_output;
    pipeline::StatsOptions st_opts;
    stats->add_option("--input,-i", st_input, "Manifest (raw or annotated)")->required();
    stats->add_option("--output,-o", st_output, "Directory for CSV exports");
    stats->add_option("--bin-width", st_opts.bin_width, "Depth-range bin width (m)")
        ->check(CLI::PositiveNumber)->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Compare predictions against ground truth");
    std::string ev_pred, ev_gt, ev_output, ev_mode = "depth", ev_ber = "standard";
    pipeline::EvalOptions ev_opts;
    bool ev_seg = false, ev_depth = false, ev_losses = false;
    eval->add_option("--input,-i,--pred", ev_pred, "Prediction directory")->required();
    eval->add_option("--gt", ev_gt, "Ground-truth directory")->required();
    eval->add_option("--output,-o", ev_output, "Directory for eval.txt and eval.csv");
    auto* mode_opt = eval->add_option("--mode", ev_mode, "seg, depth or losses")
                         ->check(CLI::IsMember({"seg", "depth", "losses"}))->capture_default_str();
    auto* seg_flag = eval->add_flag("--seg", ev_seg, "Shorthand for --mode seg");
    auto* depth_flag = eval->add_flag("--depth", ev_depth, "Shorthand for --mode depth");
    auto* losses_flag = eval->add_flag("--losses", ev_losses, "Shorthand for --mode losses");
    mode_opt->excludes(seg_flag)->excludes(depth_flag)->excludes(losses_flag);
    seg_flag->excludes(depth_flag)->excludes(losses_flag);
    depth_flag->excludes(losses_flag);
    eval->add_option("--threshold", ev_opts.seg.threshold, "Binarization threshold")->capture_default_str();
    eval->add_option("--ber-convention", ev_ber, "standard or as-printed")
        ->check(CLI::IsMember({"standard", "as-printed"}))->capture_default_str();
    eval->add_option("--delta", ev_opts.delta, "In-plane offset of the distance loss points (m)")
        ->check(CLI::PositiveNumber)->capture_default_str();
    eval->add_option("--parallel,-j", ev_opts.threads, "Frame-level worker threads")
        ->check(CLI::PositiveNumber)->capture_default_str();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with exact ground truth");
    std::string sy_output, sy_category = "mixed";
    pipeline::SynthOptions sy_opts;
    IntrinsicsFlags sy_k;
    bool sy_no_centerness = false;
    synth->add_option("--output,-o", sy_output, "Output directory")->required();
    synth->add_option("--seed", sy_opts.seed, "Base seed")->capture_default_str();
    synth->add_option("--count,-n", sy_opts.count, "Number of scenes")->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_option("--category", sy_category, "coplanar, multi_angle, multi_occluded or mixed")
        ->check(CLI::IsMember({"coplanar", "multi_angle", "multi_occluded", "mixed"}))->capture_default_str();
    synth->add_option("--planes", sy_opts.plane_count, "Planes per scene (0 draws 1..10)")
        ->check(CLI::Range(0, kMaxPlanesPerImage))->capture_default_str();
    synth->add_option("--depth-min", sy_opts.depth_min, "Minimum glass depth (m)")->capture_default_str();
    synth->add_option("--depth-max", sy_opts.depth_max, "Maximum glass depth (m)")->capture_default_str();
    synth->add_option("--parallel,-j", sy_opts.threads, "Scene-level worker threads")
        ->check(CLI::PositiveNumber)->capture_default_str();
    synth->add_flag("--no-centerness", sy_no_centerness, "Skip centerness maps");
    sy_k.add(synth);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*annotate) {
            ann_opts.threads = ann_parallel;
            ann_opts.centerness = !ann_no_centerness;
            const auto summary = pipeline::annotate(ann_input, ann_output, ann_opts);
            std::cout << "annotated " << summary.frames << " frames, " << summary.instances_ok << "/"
                      << summary.instances << " instances resolved\n";
            return report_diagnostics(summary.diagnostics);
        }
        if (*stats) {
            const auto result = pipeline::compute_stats(st_input, st_opts);
            std::ostringstream text;
            pipeline::write_stats_text(text, result);
            std::cout << text.str();
            if (!st_output.empty()) {
                pipeline::write_stats_files(st_output, result);
                write_text(fs::path(st_output) / "stats.txt", text.str());
            }
            return 0;
        }
        if (*eval) {
            if (ev_seg) ev_mode = "seg";
            if (ev_depth) ev_mode = "depth";
            if (ev_losses) ev_mode = "losses";
            ev_opts.mode = pipeline::parse_eval_mode(ev_mode);
            ev_opts.seg.ber = parse_ber_convention(ev_ber);
            const auto report = pipeline::evaluate(ev_pred, ev_gt, ev_opts);
            std::ostringstream text, csv;
            pipeline::write_eval_text(text, report);
            pipeline::write_eval_csv(csv, report);
            std::cout << text.str();
            if (!ev_output.empty()) {
                write_text(fs::path(ev_output) / "eval.txt", text.str());
                write_text(fs::path(ev_output) / "eval.csv", csv.str());
            }
            return 0;
        }
        if (*synth) {
            if (sy_category != "mixed") sy_opts.category = parse_scene_category(sy_category);
            sy_opts.intrinsics = sy_k.get();
            sy_opts.centerness = !sy_no_centerness;
            pipeline::write_synthetic_dataset(sy_output, sy_opts);
            std::cout << "wrote " << sy_opts.count << " scenes to " << sy_output << '\n';
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
