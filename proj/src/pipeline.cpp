#include "glass3d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glass3d/centerness.hpp"
#include "glass3d/errors.hpp"

namespace glass3d::pipeline {
namespace {

using nlohmann::json;

std::string full_precision(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

void check_mask_shape(const InstanceMaskSet& mask, const CameraIntrinsics& k, const fs::path& path) {
    if (!mask.same_shape(k.height, k.width)) {
        std::ostringstream os;
        os << path.string() << " is " << mask.cols() << "x" << mask.rows() << ", intrinsics expect "
           << k.width << "x" << k.height;
        throw ShapeError(os.str());
    }
}

struct FrameOutput {
    bool written = false;
    io::FrameRecord record;
    std::vector<InstanceFitLog> fits;
    std::vector<Diagnostic> diagnostics;
};

FrameOutput annotate_frame(const io::FrameRecord& frame, const CameraIntrinsics& k,
                           const fs::path& out_dir, const AnnotateOptions& options) {
    FrameOutput out;
    auto diagnose = [&](int instance, const std::string& kind, const std::string& message) {
        out.diagnostics.push_back({frame.id, instance, kind, message});
    };

    InstanceMaskSet labels;
    std::set<int> rejected;
    const fs::path mask_out = out_dir / "masks" / (frame.id + ".png");
    if (frame.mask) {
        labels = io::read_mask_png(*frame.mask);
        check_mask_shape(labels, k, *frame.mask);
        io::write_file_bytes(mask_out, io::read_file_bytes(*frame.mask));
    } else {
        labels = InstanceMaskSet(k.height, k.width, 0);
        for (const io::InstanceRecord& inst : frame.instances) {
            const InstanceMaskSet own = io::read_mask_png(*inst.mask);
            check_mask_shape(own, k, *inst.mask);
            long long clashes = 0;
            Pixel first{};
            for (int r = 0; r < own.rows() && clashes == 0; ++r) {
                for (int c = 0; c < own.cols(); ++c) {
                    if (own(r, c) != 0 && labels(r, c) != 0) {
                        first = {r, c};
                        ++clashes;
                        break;
                    }
                }
            }
            if (clashes > 0) {
                std::ostringstream os;
                os << "mask overlaps instance " << static_cast<int>(labels[first]) << " at (row "
                   << first.row << ", col " << first.col << ")";
                diagnose(inst.id, "OverlappingMasks", os.str());
                rejected.insert(inst.id);
                continue;
            }
            for (int r = 0; r < own.rows(); ++r)
                for (int c = 0; c < own.cols(); ++c)
                    if (own(r, c) != 0) labels(r, c) = static_cast<std::uint8_t>(inst.id);
        }
        io::write_mask_png(mask_out, labels);
    }

    std::array<long long, 256> pixels{};
    for (std::uint8_t v : labels.values()) ++pixels[v];
    std::set<int> known;
    for (const io::InstanceRecord& inst : frame.instances) known.insert(inst.id);
    for (int label = 1; label < 256; ++label) {
        if (pixels[static_cast<std::size_t>(label)] > 0 && !known.contains(label)) {
            diagnose(0, "UnknownLabel",
                     "mask label " + std::to_string(label) + " has no manifest instance");
        }
    }

    DepthMap depth(k.height, k.width, 0.0);
    InstanceMaskSet resolved(k.height, k.width, 0);
    out.record.id = frame.id;
    out.record.split = frame.split;
    out.record.camera_from_world = frame.camera_from_world;
    out.record.mask = mask_out;

    for (const io::InstanceRecord& inst : frame.instances) {
        io::InstanceRecord rec;
        rec.id = inst.id;
        rec.box_world = inst.box_world;
        InstanceFitLog log;
        log.frame_id = frame.id;
        log.instance_id = inst.id;
        log.pixel_count = pixels[static_cast<std::size_t>(inst.id)];
        if (!rejected.contains(inst.id)) {
            try {
                if (log.pixel_count == 0) throw EmptyInstance("instance has no mask pixels");
                const VertexSet camera = transform_points(frame.camera_from_world, inst.box_world);
                const PlaneFit fit = fit_plane_lsq_detailed(camera, options.fit);
                log.residual_rms = fit.residual_rms;
                log.condition = fit.condition;
                render_instance_depth(labels, inst.id, fit.plane, k, depth);
                rec.plane = fit.plane;
                log.ok = true;
                for (int r = 0; r < k.height; ++r)
                    for (int c = 0; c < k.width; ++c)
                        if (labels(r, c) == inst.id) resolved(r, c) = static_cast<std::uint8_t>(inst.id);
                if (options.per_instance_depth) {
                    DepthMap own(k.height, k.width, 0.0);
                    render_instance_depth(labels, inst.id, fit.plane, k, own);
                    io::write_pfm(out_dir / "depth" /
                                      (frame.id + "_inst" + std::to_string(inst.id) + ".pfm"),
                                  own);
                }
            } catch (const NearOriginPlane& e) {
                log.residual_rms = e.residual();
                diagnose(inst.id, e.kind(), e.what());
            } catch (const Error& e) {
                diagnose(inst.id, e.kind(), e.what());
            }
        }
        out.fits.push_back(log);
        out.record.instances.push_back(std::move(rec));
    }

    out.record.depth = out_dir / "depth" / (frame.id + ".pfm");
    io::write_pfm(*out.record.depth, depth);
    if (options.centerness) {
        out.record.centerness = out_dir / "centerness" / (frame.id + ".pfm");
        io::write_pfm(*out.record.centerness, centerness_map(resolved));
    }
    if (options.png16_depth) io::write_depth_png16(out_dir / "depth_png16" / (frame.id + ".png"), depth);
    out.written = true;
    return out;
}

json diagnostic_json(const Diagnostic& d) {
    return {{"frame", d.frame_id}, {"instance", d.instance_id}, {"kind", d.kind}, {"message", d.message}};
}

std::vector<std::string> stems_in(const fs::path& dir, const std::string& extension) {
    std::vector<std::string> stems;
    if (!fs::is_directory(dir)) return stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == extension)
            stems.push_back(entry.path().stem().string());
    }
    std::sort(stems.begin(), stems.end());
    return stems;
}

void require_same_ids(const std::vector<std::string>& gt, const fs::path& gt_dir,
                      const std::vector<std::string>& pred, const fs::path& pred_dir) {
    if (gt.empty()) throw EmptyEvaluation("no ground-truth maps found in " + gt_dir.string());
    std::vector<std::string> missing;
    std::vector<std::string> extra;
    std::set_difference(gt.begin(), gt.end(), pred.begin(), pred.end(), std::back_inserter(missing));
    std::set_difference(pred.begin(), pred.end(), gt.begin(), gt.end(), std::back_inserter(extra));
    if (missing.empty() && extra.empty()) return;
    std::ostringstream os;
    if (!missing.empty()) os << "missing predictions in " << pred_dir.string() << " for: " << missing.front()
                             << (missing.size() > 1 ? " (+" + std::to_string(missing.size() - 1) + " more)" : "");
    if (!extra.empty()) os << (missing.empty() ? "" : "; ") << "predictions without ground truth in "
                           << gt_dir.string() << ": " << extra.front();
    throw InvalidInput(os.str());
}

template <typename Map>
void require_shape(const Map& pred, const fs::path& pred_path, int rows, int cols, const fs::path& gt_path) {
    if (pred.rows() != rows || pred.cols() != cols) {
        std::ostringstream os;
        os << pred_path.string() << " is " << pred.cols() << "x" << pred.rows() << " but "
           << gt_path.string() << " is " << cols << "x" << rows;
        throw ShapeError(os.str());
    }
}

BinaryMask binarize(const InstanceMaskSet& labels) {
    BinaryMask out(labels.rows(), labels.cols(), 0);
    for (int r = 0; r < labels.rows(); ++r)
        for (int c = 0; c < labels.cols(); ++c) out(r, c) = labels(r, c) != 0 ? 1 : 0;
    return out;
}

template <typename Row, typename Fn>
void parallel_rows(std::vector<Row>& rows, int threads, Fn&& fn) {
    const int n = static_cast<int>(rows.size());
    // First failure in frame order is rethrown as-is so its kind survives.
    std::vector<std::exception_ptr> errors(rows.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads))
    for (int i = 0; i < n; ++i) {
        try {
            fn(i, rows[static_cast<std::size_t>(i)]);
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

DepthMetrics mean_depth(const std::vector<DepthReportRow>& rows) {
    DepthMetrics m;
    for (const auto& r : rows) {
        m.abs_rel += r.metrics.abs_rel;
        m.mae += r.metrics.mae;
        m.rmse += r.metrics.rmse;
        m.sigma1 += r.metrics.sigma1;
        m.sigma2 += r.metrics.sigma2;
        m.sigma3 += r.metrics.sigma3;
        m.pixel_count += r.metrics.pixel_count;
    }
    const double n = static_cast<double>(rows.size());
    m.abs_rel /= n;
    m.mae /= n;
    m.rmse /= n;
    m.sigma1 /= n;
    m.sigma2 /= n;
    m.sigma3 /= n;
    return m;
}

SegMetrics mean_seg(const std::vector<SegReportRow>& rows) {
    SegMetrics m;
    for (const auto& r : rows) {
        m.iou += r.metrics.iou;
        m.f1 += r.metrics.f1;
        m.mae += r.metrics.mae;
        m.ber += r.metrics.ber;
        m.counts.tp += r.metrics.counts.tp;
        m.counts.fp += r.metrics.counts.fp;
        m.counts.tn += r.metrics.counts.tn;
        m.counts.fn += r.metrics.counts.fn;
    }
    const double n = static_cast<double>(rows.size());
    m.iou /= n;
    m.f1 /= n;
    m.mae /= n;
    m.ber /= n;
    return m;
}

LossRow evaluate_losses(const io::FrameRecord& frame, const CameraIntrinsics& k,
                        const fs::path& pred_dir, const EvalOptions& options) {
    LossRow row;
    row.id = frame.id;
    const InstanceMaskSet labels = io::read_mask_png(*frame.mask);
    check_mask_shape(labels, k, *frame.mask);

    const fs::path plane_path = pred_dir / "planes" / (frame.id + ".pfm");
    const FeatureMap pred = io::read_pfm_channels(plane_path);
    if (pred.channels() != 3) throw FormatError(plane_path.string() + ": expected 3 channels");
    require_shape(pred, plane_path, k.height, k.width, *frame.mask);

    std::array<std::optional<Plane>, 256> planes;
    for (const io::InstanceRecord& inst : frame.instances)
        if (inst.plane) planes[static_cast<std::size_t>(inst.id)] = inst.plane;

    Grid<double> losses(k.height, k.width, 0.0);
    InstanceMaskSet counted(k.height, k.width, 0);
    for (int r = 0; r < k.height; ++r) {
        for (int c = 0; c < k.width; ++c) {
            const int label = labels(r, c);
            if (label == 0 || !planes[static_cast<std::size_t>(label)]) continue;
            const PolarPlane p{pred(0, r, c), pred(1, r, c), pred(2, r, c)};
            try {
                losses(r, c) = plane_loss_pixel(p, *planes[static_cast<std::size_t>(label)], k,
                                                pixel_center(r, c), options.delta);
                counted(r, c) = static_cast<std::uint8_t>(label);
            } catch (const RayParallelToPlane&) {
                ++row.skipped_pixels;
            } catch (const OutOfRange&) {
                ++row.skipped_pixels;
            }
        }
    }
    row.plane = plane_loss_aggregate(losses, counted);
    row.total = row.plane.aggregate;

    const fs::path prob_path = pred_dir / "prob" / (frame.id + ".pfm");
    if (fs::exists(prob_path)) {
        const Grid<double> prob = io::read_pfm(prob_path);
        require_shape(prob, prob_path, k.height, k.width, *frame.mask);
        row.segmentation = seg_loss(prob, binarize(labels)).total;
        row.total += *row.segmentation;
    }
    const fs::path cpath = pred_dir / "centerness" / (frame.id + ".pfm");
    if (fs::exists(cpath)) {
        const Grid<double> pc = io::read_pfm(cpath);
        require_shape(pc, cpath, k.height, k.width, *frame.mask);
        const CenternessMap target = frame.centerness ? io::read_pfm(*frame.centerness) : centerness_map(labels);
        row.centerness = centerness_loss(pc, target);
        row.total += *row.centerness;
    }
    return row;
}

}  // namespace

std::string frame_id(int index) {
    std::ostringstream os;
    os << std::setw(6) << std::setfill('0') << index;
    return os.str();
}

AnnotateSummary annotate(const fs::path& manifest_path, const fs::path& out_dir,
                         const AnnotateOptions& options) {
    const io::SceneManifest manifest = io::load_manifest(manifest_path);
    const CameraIntrinsics& k = manifest.intrinsics;
    fs::create_directories(out_dir);

    const int n = static_cast<int>(manifest.frames.size());
    std::vector<FrameOutput> outputs(manifest.frames.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.threads))
    for (int i = 0; i < n; ++i) {
        const io::FrameRecord& frame = manifest.frames[static_cast<std::size_t>(i)];
        try {
            outputs[static_cast<std::size_t>(i)] = annotate_frame(frame, k, out_dir, options);
        } catch (const Error& e) {
            outputs[static_cast<std::size_t>(i)].diagnostics.push_back({frame.id, 0, e.kind(), e.what()});
        } catch (const std::exception& e) {
            outputs[static_cast<std::size_t>(i)].diagnostics.push_back({frame.id, 0, "Error", e.what()});
        }
    }

    AnnotateSummary summary;
    io::SceneManifest resolved;
    resolved.intrinsics = k;
    json fits = json::array();
    json diagnostics = json::array();
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        FrameOutput& out = outputs[i];
        ++summary.frames;
        summary.instances += static_cast<int>(manifest.frames[i].instances.size());
        for (const InstanceFitLog& f : out.fits) {
            if (f.ok) ++summary.instances_ok;
            fits.push_back({{"frame", f.frame_id},
                            {"instance", f.instance_id},
                            {"ok", f.ok},
                            {"pixels", f.pixel_count},
                            {"residual_rms", f.residual_rms},
                            {"condition", f.condition}});
            summary.fits.push_back(f);
        }
        for (const Diagnostic& d : out.diagnostics) {
            diagnostics.push_back(diagnostic_json(d));
            summary.diagnostics.push_back(d);
        }
        if (out.written) resolved.frames.push_back(std::move(out.record));
    }
    io::save_manifest(resolved, out_dir / "manifest.json");
    json log = {{"frames", summary.frames},
                {"instances", summary.instances},
                {"instances_ok", summary.instances_ok},
                {"fits", fits},
                {"diagnostics", diagnostics}};
    io::write_file_bytes(out_dir / "annotate_log.json", log.dump(2) + "\n");
    return summary;
}

DatasetStats compute_stats(const fs::path& manifest_path, const StatsOptions& options) {
    if (!(options.bin_width > 0.0)) throw InvalidInput("histogram bin width must be positive");
    const io::SceneManifest manifest = io::load_manifest(manifest_path);
    if (manifest.frames.empty()) throw EmptyDataset("manifest has no frames: " + manifest_path.string());
    const CameraIntrinsics& k = manifest.intrinsics;

    DatasetStats stats;
    stats.bin_width = options.bin_width;
    stats.min_depth = std::numeric_limits<double>::infinity();
    stats.max_depth = 0.0;
    for (const io::FrameRecord& frame : manifest.frames) {
        DepthMap depth;
        if (frame.depth) {
            depth = io::read_pfm(*frame.depth);
        } else {
            const bool resolved = std::all_of(frame.instances.begin(), frame.instances.end(),
                                              [](const io::InstanceRecord& i) { return i.plane.has_value(); });
            if (!resolved || !frame.mask) {
                throw InvalidInput("frame " + frame.id + " has no depth map and unresolved planes; run annotate first");
            }
            const InstanceMaskSet labels = io::read_mask_png(*frame.mask);
            depth = DepthMap(k.height, k.width, 0.0);
            for (const io::InstanceRecord& inst : frame.instances)
                render_instance_depth(labels, inst.id, *inst.plane, k, depth);
        }
        DatasetStats::FrameRow row;
        row.id = frame.id;
        row.split = frame.split.empty() ? "unspecified" : frame.split;
        row.planes = static_cast<int>(frame.instances.size());
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (double z : depth.values()) {
            if (z <= 0.0) continue;
            lo = std::min(lo, z);
            hi = std::max(hi, z);
        }
        if (hi > 0.0) {
            row.depth_min = lo;
            row.depth_max = hi;
            row.depth_range = hi - lo;
            stats.min_depth = std::min(stats.min_depth, lo);
            stats.max_depth = std::max(stats.max_depth, hi);
        }
        ++stats.planes_histogram[static_cast<std::size_t>(std::min(row.planes, 10))];
        const auto bin = static_cast<std::size_t>(std::floor(row.depth_range / options.bin_width));
        if (stats.depth_range_histogram.size() <= bin) stats.depth_range_histogram.resize(bin + 1, 0);
        ++stats.depth_range_histogram[bin];
        ++stats.split_counts[row.split];
        ++stats.frame_count;
        stats.frames.push_back(row);
    }
    if (!std::isfinite(stats.min_depth)) stats.min_depth = 0.0;
    return stats;
}

void write_stats_text(std::ostream& os, const DatasetStats& stats) {
    os << "frames: " << stats.frame_count << '\n';
    for (const auto& [split, count] : stats.split_counts) os << "  split " << split << ": " << count << '\n';
    os << "glass depth span: " << std::fixed << std::setprecision(3) << stats.min_depth << " m .. "
       << stats.max_depth << " m\n";
    os << "\nplanes per image\n";
    for (std::size_t b = 0; b < stats.planes_histogram.size(); ++b) {
        const std::string label = b == 10 ? "10+" : std::to_string(b);
        os << "  " << std::setw(4) << label << "  " << std::setw(8) << stats.planes_histogram[b] << '\n';
    }
    os << "\nper-image depth range (m)\n";
    for (std::size_t b = 0; b < stats.depth_range_histogram.size(); ++b) {
        os << "  [" << std::setw(7) << b * stats.bin_width << ", " << std::setw(7) << (b + 1) * stats.bin_width
           << ")  " << std::setw(8) << stats.depth_range_histogram[b] << '\n';
    }
    os.unsetf(std::ios::floatfield);
}

void write_stats_files(const fs::path& out_dir, const DatasetStats& stats) {
    std::ostringstream planes;
    planes << "planes,count\n";
    for (std::size_t b = 0; b < stats.planes_histogram.size(); ++b)
        planes << (b == 10 ? "10+" : std::to_string(b)) << ',' << stats.planes_histogram[b] << '\n';
    io::write_file_bytes(out_dir / "stats_planes.csv", planes.str());

    std::ostringstream ranges;
    ranges << "range_lo,range_hi,count\n";
    for (std::size_t b = 0; b < stats.depth_range_histogram.size(); ++b) {
        ranges << full_precision(static_cast<double>(b) * stats.bin_width) << ','
               << full_precision(static_cast<double>(b + 1) * stats.bin_width) << ','
               << stats.depth_range_histogram[b] << '\n';
    }
    io::write_file_bytes(out_dir / "stats_depth_range.csv", ranges.str());

    std::ostringstream frames;
    frames << "frame,split,planes,depth_min,depth_max,depth_range\n";
    for (const auto& row : stats.frames) {
        frames << row.id << ',' << row.split << ',' << row.planes << ',' << full_precision(row.depth_min) << ','
               << full_precision(row.depth_max) << ',' << full_precision(row.depth_range) << '\n';
    }
    io::write_file_bytes(out_dir / "stats_frames.csv", frames.str());
}

EvalMode parse_eval_mode(const std::string& name) {
    if (name == "seg") return EvalMode::seg;
    if (name == "depth") return EvalMode::depth;
    if (name == "losses") return EvalMode::losses;
    throw InvalidInput("unknown eval mode '" + name + "' (expected seg, depth or losses)");
}

EvalReport evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const EvalOptions& options) {
    EvalReport report;
    report.mode = options.mode;
    if (options.mode == EvalMode::depth) {
        const auto ids = stems_in(gt_dir / "depth", ".pfm");
        require_same_ids(ids, gt_dir / "depth", stems_in(pred_dir / "depth", ".pfm"), pred_dir / "depth");
        report.depth_rows.resize(ids.size());
        parallel_rows(report.depth_rows, options.threads, [&](int i, DepthReportRow& row) {
            const std::string& id = ids[static_cast<std::size_t>(i)];
            const fs::path gt_path = gt_dir / "depth" / (id + ".pfm");
            const fs::path pred_path = pred_dir / "depth" / (id + ".pfm");
            const DepthMap gt = io::read_pfm(gt_path);
            const DepthMap pred = io::read_pfm(pred_path);
            require_shape(pred, pred_path, gt.rows(), gt.cols(), gt_path);
            row.name = id;
            try {
                row.metrics = depth_metrics(pred, gt);
            } catch (const Error& e) {
                throw InvalidInput(gt_path.string() + ": " + e.what());
            }
        });
        report.depth_rows.push_back({"mean", mean_depth(report.depth_rows)});
    } else if (options.mode == EvalMode::seg) {
        const auto ids = stems_in(gt_dir / "masks", ".png");
        std::vector<std::string> pred_ids = stems_in(pred_dir / "prob", ".pfm");
        if (pred_ids.empty()) pred_ids = stems_in(pred_dir / "masks", ".png");
        require_same_ids(ids, gt_dir / "masks", pred_ids, pred_dir);
        report.seg_rows.resize(ids.size());
        parallel_rows(report.seg_rows, options.threads, [&](int i, SegReportRow& row) {
            const std::string& id = ids[static_cast<std::size_t>(i)];
            const fs::path gt_path = gt_dir / "masks" / (id + ".png");
            const BinaryMask gt = binarize(io::read_mask_png(gt_path));
            const fs::path prob_path = pred_dir / "prob" / (id + ".pfm");
            Grid<double> prob;
            if (fs::exists(prob_path)) {
                prob = io::read_pfm(prob_path);
                require_shape(prob, prob_path, gt.rows(), gt.cols(), gt_path);
            } else {
                const fs::path mask_path = pred_dir / "masks" / (id + ".png");
                const InstanceMaskSet m = io::read_mask_png(mask_path);
                require_shape(m, mask_path, gt.rows(), gt.cols(), gt_path);
                prob = Grid<double>(m.rows(), m.cols(), 0.0);
                for (int r = 0; r < m.rows(); ++r)
                    for (int c = 0; c < m.cols(); ++c) prob(r, c) = m(r, c) != 0 ? 1.0 : 0.0;
            }
            row.name = id;
            row.metrics = seg_metrics(prob, gt, options.seg);
        });
        report.seg_rows.push_back({"mean", mean_seg(report.seg_rows)});
    } else {
        const io::SceneManifest manifest = io::load_manifest(gt_dir / "manifest.json");
        if (manifest.frames.empty()) throw EmptyEvaluation("ground-truth manifest has no frames");
        std::vector<std::string> ids;
        for (const auto& f : manifest.frames) ids.push_back(f.id);
        std::sort(ids.begin(), ids.end());
        require_same_ids(ids, gt_dir, stems_in(pred_dir / "planes", ".pfm"), pred_dir / "planes");
        report.loss_rows.resize(manifest.frames.size());
        parallel_rows(report.loss_rows, options.threads, [&](int i, LossRow& row) {
            const io::FrameRecord& frame = manifest.frames[static_cast<std::size_t>(i)];
            if (!frame.mask) throw InvalidInput("frame " + frame.id + " has no label mask");
            row = evaluate_losses(frame, manifest.intrinsics, pred_dir, options);
        });
    }
    return report;
}

void write_eval_text(std::ostream& os, const EvalReport& report) {
    if (report.mode == EvalMode::depth) {
        write_depth_table(os, report.depth_rows);
    } else if (report.mode == EvalMode::seg) {
        write_seg_table(os, report.seg_rows);
    } else {
        os << std::left << std::setw(10) << "image" << std::right << std::setw(10) << "L_c" << std::setw(10)
           << "L_s" << std::setw(10) << "L_p" << std::setw(10) << "L" << std::setw(6) << "N"
           << std::setw(9) << "skipped" << '\n';
        double total = 0.0;
        for (const LossRow& row : report.loss_rows) {
            auto opt = [](const std::optional<double>& v) {
                std::ostringstream s;
                if (v) s << std::fixed << std::setprecision(4) << *v; else s << "-";
                return s.str();
            };
            os << std::left << std::setw(10) << row.id << std::right << std::setw(10) << opt(row.centerness)
               << std::setw(10) << opt(row.segmentation) << std::setw(10) << opt(row.plane.aggregate)
               << std::setw(10) << opt(row.total) << std::setw(6) << row.plane.instance_count
               << std::setw(9) << row.skipped_pixels << '\n';
            total += row.total;
        }
        if (!report.loss_rows.empty()) {
            os << std::left << std::setw(10) << "mean" << std::right << std::setw(40) << std::fixed
               << std::setprecision(4) << total / static_cast<double>(report.loss_rows.size()) << '\n';
            os.unsetf(std::ios::floatfield);
        }
    }
}

void write_eval_csv(std::ostream& os, const EvalReport& report) {
    if (report.mode == EvalMode::depth) {
        write_depth_csv(os, report.depth_rows);
    } else if (report.mode == EvalMode::seg) {
        write_seg_csv(os, report.seg_rows);
    } else {
        os << "image,centerness,segmentation,plane,total,instances,skipped_pixels\n";
        for (const LossRow& row : report.loss_rows) {
            os << row.id << ',' << (row.centerness ? full_precision(*row.centerness) : "") << ','
               << (row.segmentation ? full_precision(*row.segmentation) : "") << ','
               << full_precision(row.plane.aggregate) << ',' << full_precision(row.total) << ','
               << row.plane.instance_count << ',' << row.skipped_pixels << '\n';
        }
    }
}

SceneSpec synth_scene_spec(const SynthOptions& options, int index) {
    SceneSpec spec;
    spec.seed = scene_seed(options.seed, static_cast<std::uint64_t>(index));
    SceneRng pick(spec.seed ^ 0x5DEECE66DULL);
    const int category = pick.uniform_int(0, 2);
    const int planes = pick.uniform_int(1, kMaxPlanesPerImage);
    spec.category = options.category.value_or(static_cast<SceneCategory>(category));
    spec.plane_count = options.plane_count > 0 ? options.plane_count : planes;
    spec.depth_min = options.depth_min;
    spec.depth_max = options.depth_max;
    spec.intrinsics = options.intrinsics;
    spec.compute_centerness = options.centerness;
    return spec;
}

io::FrameRecord synth_frame_record(const SyntheticScene& scene, const std::string& id) {
    io::FrameRecord frame;
    frame.id = id;
    frame.camera_from_world = scene.camera_from_world;
    for (const SyntheticInstance& inst : scene.instances) {
        io::InstanceRecord rec;
        rec.id = inst.label;
        rec.box_world.assign(inst.corners_world.begin(), inst.corners_world.end());
        rec.plane = inst.plane;
        frame.instances.push_back(std::move(rec));
    }
    return frame;
}

void write_synthetic_dataset(const fs::path& out_dir, const SynthOptions& options) {
    if (options.count < 1) throw InvalidInput("synthetic dataset needs at least one scene");
    fs::create_directories(out_dir);
    const int n = options.count;
    // Same train/val proportion as 1070 / 1437.
    const int train = static_cast<int>(std::lround(n * 1070.0 / 1437.0));
    std::vector<io::FrameRecord> frames(static_cast<std::size_t>(n));
    std::vector<std::string> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, options.threads))
    for (int i = 0; i < n; ++i) {
        try {
            const SyntheticScene scene = generate_scene(synth_scene_spec(options, i));
            const std::string id = frame_id(i);
            io::FrameRecord frame = synth_frame_record(scene, id);
            frame.split = i < train ? "train" : "val";
            frame.mask = out_dir / "masks" / (id + ".png");
            frame.depth = out_dir / "depth" / (id + ".pfm");
            io::write_mask_png(*frame.mask, scene.masks);
            io::write_pfm(*frame.depth, scene.depth);
            if (options.centerness) {
                frame.centerness = out_dir / "centerness" / (id + ".pfm");
                io::write_pfm(*frame.centerness, scene.centerness);
            }
            frames[static_cast<std::size_t>(i)] = std::move(frame);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(i)] = "scene " + std::to_string(i) + ": " + e.what();
        }
    }
    for (const std::string& e : errors)
        if (!e.empty()) throw GenerationFailed(e);

    io::SceneManifest manifest;
    manifest.intrinsics = options.intrinsics;
    manifest.frames = std::move(frames);
    io::save_manifest(manifest, out_dir / "manifest.json");
}

}  // namespace glass3d::pipeline
