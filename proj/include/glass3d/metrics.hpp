#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "glass3d/grid.hpp"

namespace glass3d {

enum class BerConvention {
    standard,    ///< 1 - (TPR + TNR) / 2
    as_printed,  ///< 1 - (TP/(TP+FP) + TN/(TN+FN)) / 2
};

BerConvention parse_ber_convention(const std::string& name);
std::string to_string(BerConvention convention);

struct ConfusionCounts {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;
};

struct SegMetrics {
    double iou = 0.0;
    double mae = 0.0;
    double f1 = 0.0;
    double ber = 0.0;  ///< percent
    ConfusionCounts counts;
};

struct SegMetricOptions {
    double threshold = 0.5;
    BerConvention ber = BerConvention::standard;
};

/// Binarizes `predicted` at `threshold` (p >= threshold is glass) for IoU, F1
/// and BER; MAE uses the raw probabilities.
SegMetrics seg_metrics(const Grid<double>& predicted, const BinaryMask& truth,
                       const SegMetricOptions& options = {});

/// Metric formulas from confusion counts. A rate whose denominator is 0 is
/// taken as 1.
double iou_from_counts(const ConfusionCounts& c);
double f1_from_counts(const ConfusionCounts& c);
double ber_from_counts(const ConfusionCounts& c, BerConvention convention);

/// sigma_k thresholds: 1.25, 1.25^2, 1.25^3.
inline constexpr std::array<double, 3> kSigmaThresholds{1.25, 1.25 * 1.25, 1.25 * 1.25 * 1.25};

struct DepthMetrics {
    double abs_rel = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double sigma3 = 0.0;
    long long pixel_count = 0;
};

/// Depth metrics over pixels with valid != 0. Ground truth must be positive at
/// valid pixels; predictions must be finite and non-negative (0 fails every
/// sigma test). Throws EmptyEvaluation without valid pixels.
DepthMetrics depth_metrics(const DepthMap& predicted, const DepthMap& truth,
                           const BinaryMask& valid);

/// Uses every pixel with truth > 0.
DepthMetrics depth_metrics(const DepthMap& predicted, const DepthMap& truth);

// Report emitters. Column order follows the usual depth and segmentation
// result tables.
struct DepthReportRow {
    std::string name;
    DepthMetrics metrics;
};
struct SegReportRow {
    std::string name;
    SegMetrics metrics;
};

void write_depth_table(std::ostream& os, const std::vector<DepthReportRow>& rows);
void write_depth_csv(std::ostream& os, const std::vector<DepthReportRow>& rows);
void write_seg_table(std::ostream& os, const std::vector<SegReportRow>& rows);
void write_seg_csv(std::ostream& os, const std::vector<SegReportRow>& rows);

}  // namespace glass3d
