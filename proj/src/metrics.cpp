#include "glass3d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "glass3d/errors.hpp"

namespace glass3d {
namespace {

double rate(long long numerator, long long denominator) {
    return denominator == 0 ? 1.0 : static_cast<double>(numerator) / static_cast<double>(denominator);
}

std::string full_precision(double v) {
    std::ostringstream os;
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

void table_row(std::ostream& os, const std::string& name, std::size_t name_width,
               std::initializer_list<double> values, int precision) {
    os << std::left << std::setw(static_cast<int>(name_width)) << name << std::right;
    for (double v : values) os << "  " << std::setw(9) << std::fixed << std::setprecision(precision) << v;
    os << '\n';
    os.unsetf(std::ios::floatfield);
}

template <typename Row>
std::size_t name_width(const std::vector<Row>& rows) {
    std::size_t w = 5;
    for (const Row& r : rows) w = std::max(w, r.name.size());
    return w;
}

}  // namespace

BerConvention parse_ber_convention(const std::string& name) {
    if (name == "standard") return BerConvention::standard;
    if (name == "as-printed" || name == "as_printed") return BerConvention::as_printed;
    throw InvalidInput("unknown BER convention '" + name + "' (expected standard or as-printed)");
}

std::string to_string(BerConvention convention) {
    return convention == BerConvention::standard ? "standard" : "as-printed";
}

double iou_from_counts(const ConfusionCounts& c) {
    return rate(c.tp, c.tp + c.fp + c.fn);
}

double f1_from_counts(const ConfusionCounts& c) {
    const double precision = rate(c.tp, c.tp + c.fp);
    const double recall = rate(c.tp, c.tp + c.fn);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double ber_from_counts(const ConfusionCounts& c, BerConvention convention) {
    double positive_term = 0.0;
    double negative_term = 0.0;
    if (convention == BerConvention::standard) {
        positive_term = rate(c.tp, c.tp + c.fn);
        negative_term = rate(c.tn, c.tn + c.fp);
    } else {
        positive_term = rate(c.tp, c.tp + c.fp);
        negative_term = rate(c.tn, c.tn + c.fn);
    }
    return 100.0 * (1.0 - 0.5 * (positive_term + negative_term));
}

SegMetrics seg_metrics(const Grid<double>& predicted, const BinaryMask& truth,
                       const SegMetricOptions& options) {
    if (!predicted.same_shape(truth)) {
        std::ostringstream os;
        os << "prediction is " << predicted.rows() << "x" << predicted.cols() << " but ground truth is "
           << truth.rows() << "x" << truth.cols();
        throw ShapeError(os.str());
    }
    if (predicted.empty()) throw EmptyEvaluation("segmentation maps are empty");

    SegMetrics out;
    double abs_sum = 0.0;
    const auto p = predicted.values();
    const auto g = truth.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p[i])) throw InvalidInput("non-finite prediction at index " + std::to_string(i));
        const bool positive = g[i] != 0;
        const bool predicted_positive = p[i] >= options.threshold;
        abs_sum += std::abs((positive ? 1.0 : 0.0) - p[i]);
        if (positive) {
            predicted_positive ? ++out.counts.tp : ++out.counts.fn;
        } else {
            predicted_positive ? ++out.counts.fp : ++out.counts.tn;
        }
    }
    out.mae = abs_sum / static_cast<double>(p.size());
    out.iou = iou_from_counts(out.counts);
    out.f1 = f1_from_counts(out.counts);
    out.ber = ber_from_counts(out.counts, options.ber);
    return out;
}

DepthMetrics depth_metrics(const DepthMap& predicted, const DepthMap& truth, const BinaryMask& valid) {
    if (!predicted.same_shape(truth) || !valid.same_shape(truth)) {
        throw ShapeError("depth prediction, ground truth and valid mask shapes differ");
    }
    double abs_rel = 0.0;
    double abs_err = 0.0;
    double sq_err = 0.0;
    std::array<long long, 3> within{};
    long long count = 0;
    for (int r = 0; r < truth.rows(); ++r) {
        for (int c = 0; c < truth.cols(); ++c) {
            if (valid(r, c) == 0) continue;
            const double gt = truth(r, c);
            const double pred = predicted(r, c);
            if (!(gt > 0.0) || !std::isfinite(gt)) {
                std::ostringstream os;
                os << "ground-truth depth " << gt << " at valid pixel (row " << r << ", col " << c << ")";
                throw InvalidInput(os.str());
            }
            if (!(pred >= 0.0) || !std::isfinite(pred)) {
                std::ostringstream os;
                os << "predicted depth " << pred << " at valid pixel (row " << r << ", col " << c << ")";
                throw InvalidInput(os.str());
            }
            const double err = std::abs(gt - pred);
            abs_rel += err / gt;
            abs_err += err;
            sq_err += err * err;
            const double ratio = std::max(pred / gt, gt / pred);
            for (std::size_t k = 0; k < kSigmaThresholds.size(); ++k) {
                if (ratio < kSigmaThresholds[k]) ++within[k];
            }
            ++count;
        }
    }
    if (count == 0) throw EmptyEvaluation("no valid pixels for depth evaluation");

    const double n = static_cast<double>(count);
    DepthMetrics out;
    out.abs_rel = abs_rel / n;
    out.mae = abs_err / n;
    out.rmse = std::sqrt(sq_err / n);
    out.sigma1 = static_cast<double>(within[0]) / n;
    out.sigma2 = static_cast<double>(within[1]) / n;
    out.sigma3 = static_cast<double>(within[2]) / n;
    out.pixel_count = count;
    return out;
}

DepthMetrics depth_metrics(const DepthMap& predicted, const DepthMap& truth) {
    BinaryMask valid(truth.rows(), truth.cols(), 0);
    for (int r = 0; r < truth.rows(); ++r)
        for (int c = 0; c < truth.cols(); ++c)
            valid(r, c) = truth(r, c) > 0.0 ? 1 : 0;
    return depth_metrics(predicted, truth, valid);
}

void write_depth_table(std::ostream& os, const std::vector<DepthReportRow>& rows) {
    const std::size_t w = name_width(rows);
    os << std::left << std::setw(static_cast<int>(w)) << "image" << std::right;
    for (const char* h : {"Abs.Rel", "MAE", "RMSE", "sigma1", "sigma2", "sigma3"})
        os << "  " << std::setw(9) << h;
    os << '\n';
    for (const DepthReportRow& row : rows) {
        const DepthMetrics& m = row.metrics;
        table_row(os, row.name, w, {m.abs_rel, m.mae, m.rmse, m.sigma1, m.sigma2, m.sigma3}, 3);
    }
}

void write_depth_csv(std::ostream& os, const std::vector<DepthReportRow>& rows) {
    os << "image,abs_rel,mae,rmse,sigma1,sigma2,sigma3,pixels\n";
    for (const DepthReportRow& row : rows) {
        const DepthMetrics& m = row.metrics;
        os << row.name << ',' << full_precision(m.abs_rel) << ',' << full_precision(m.mae) << ','
           << full_precision(m.rmse) << ',' << full_precision(m.sigma1) << ','
           << full_precision(m.sigma2) << ',' << full_precision(m.sigma3) << ',' << m.pixel_count
           << '\n';
    }
}

void write_seg_table(std::ostream& os, const std::vector<SegReportRow>& rows) {
    const std::size_t w = name_width(rows);
    os << std::left << std::setw(static_cast<int>(w)) << "image" << std::right;
    for (const char* h : {"IoU", "F1", "MAE", "BER"}) os << "  " << std::setw(9) << h;
    os << '\n';
    for (const SegReportRow& row : rows) {
        const SegMetrics& m = row.metrics;
        table_row(os, row.name, w, {m.iou, m.f1, m.mae, m.ber}, 3);
    }
}

void write_seg_csv(std::ostream& os, const std::vector<SegReportRow>& rows) {
    os << "image,iou,f1,mae,ber,tp,fp,tn,fn\n";
    for (const SegReportRow& row : rows) {
        const SegMetrics& m = row.metrics;
        os << row.name << ',' << full_precision(m.iou) << ',' << full_precision(m.f1) << ','
           << full_precision(m.mae) << ',' << full_precision(m.ber) << ',' << m.counts.tp << ','
           << m.counts.fp << ',' << m.counts.tn << ',' << m.counts.fn << '\n';
    }
}

}  // namespace glass3d
