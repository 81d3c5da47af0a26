#include "glass3d/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "glass3d/errors.hpp"

namespace glass3d {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kParallelEpsilon = 1e-9;

// Smoothed |x| and its derivative, used only by the gradient.
double smooth_abs_derivative(double x) { return x / std::sqrt(x * x + kKinkSmoothing * kKinkSmoothing); }

Vec3 basis_anchor(const Vec3& n) {
    return std::abs(n.x()) > 0.9 ? Vec3(0.0, 1.0, 0.0) : Vec3(1.0, 0.0, 0.0);
}

// The four sample points around p, ordered (+e1, -e1, +e2, -e2).
std::array<Vec3, 4> sample_points(const Vec3& p, const std::array<Vec3, 2>& basis, double delta) {
    return {p + delta * basis[0], p - delta * basis[0], p + delta * basis[1], p - delta * basis[1]};
}

double check_loss_value(double v, int r, int c) {
    if (!std::isfinite(v)) {
        std::ostringstream os;
        os << "pixel loss at (row " << r << ", col " << c << ") is not finite";
        throw InvalidInput(os.str());
    }
    return v;
}

}  // namespace

PolarPlane head_activation(double a1, double a2, double b) {
    return {kHalfPi * std::tanh(a1), kHalfPi * std::tanh(a2), 5.0 * b};
}

std::array<Vec3, 2> in_plane_basis(const Vec3& normal) {
    const Vec3 e1 = basis_anchor(normal).cross(normal).normalized();
    return {e1, normal.cross(e1)};
}

double plane_distance_loss(const PolarPlane& predicted, const Plane& truth,
                           const CameraIntrinsics& intrinsics, const Vec2& u, double delta) {
    const Vec3 n = from_polar(predicted.theta1, predicted.theta2);
    const Vec3 ray = pixel_ray(intrinsics, u);
    const double denom = n.dot(ray);
    if (!(std::abs(denom) >= kParallelEpsilon)) {
        std::ostringstream os;
        os << "predicted plane is parallel to the ray through (" << u.x() << ", " << u.y() << ")";
        throw RayParallelToPlane(os.str());
    }
    const Vec3 p = (-predicted.d / denom) * ray;
    double loss = 0.0;
    for (const Vec3& q : sample_points(p, in_plane_basis(n), delta)) {
        loss += std::abs(truth.signed_distance(q));
    }
    return loss;
}

double plane_param_loss(const PolarPlane& predicted, const PolarPlane& truth,
                        const ParamWeights& weights) {
    return weights.theta1 * std::abs(predicted.theta1 - truth.theta1) +
           weights.theta2 * std::abs(predicted.theta2 - truth.theta2) +
           weights.d * std::abs(predicted.d - truth.d);
}

double plane_loss_pixel(const PolarPlane& predicted, const Plane& truth,
                        const CameraIntrinsics& intrinsics, const Vec2& u, double delta,
                        const ParamWeights& weights) {
    return plane_param_loss(predicted, to_polar(truth), weights) +
           plane_distance_loss(predicted, truth, intrinsics, u, delta);
}

InstanceLossReport plane_loss_aggregate(const Grid<double>& pixel_losses,
                                        const InstanceMaskSet& masks) {
    if (!pixel_losses.same_shape(masks)) throw ShapeError("pixel loss map and mask shapes differ");
    const int labels = max_label(masks);
    std::vector<double> sums(static_cast<std::size_t>(labels) + 1, 0.0);
    std::vector<long long> counts(static_cast<std::size_t>(labels) + 1, 0);
    for (int r = 0; r < masks.rows(); ++r) {
        for (int c = 0; c < masks.cols(); ++c) {
            const int label = masks(r, c);
            if (label == 0) continue;
            sums[static_cast<std::size_t>(label)] += check_loss_value(pixel_losses(r, c), r, c);
            ++counts[static_cast<std::size_t>(label)];
        }
    }

    InstanceLossReport report;
    double total = 0.0;
    for (int label = 1; label <= labels; ++label) {
        const long long m = counts[static_cast<std::size_t>(label)];
        if (m == 0) continue;
        const double mean = sums[static_cast<std::size_t>(label)] / static_cast<double>(m);
        report.labels.push_back(label);
        report.pixel_counts.push_back(m);
        report.mean_losses.push_back(mean);
        total += mean;
    }
    report.instance_count = static_cast<int>(report.labels.size());
    report.aggregate = report.instance_count == 0 ? 0.0 : total / report.instance_count;
    return report;
}

SegLoss seg_loss(const Grid<double>& predicted, const BinaryMask& truth) {
    if (!predicted.same_shape(truth)) throw ShapeError("segmentation prediction and mask shapes differ");
    if (predicted.empty()) throw ShapeError("segmentation maps are empty");
    const auto p = predicted.values();
    const auto g = truth.values();
    double bce = 0.0;
    double intersection = 0.0;
    double uni = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) {
            throw InvalidInput("segmentation probability outside [0, 1] at index " + std::to_string(i));
        }
        const double target = g[i] != 0 ? 1.0 : 0.0;
        const double q = std::clamp(p[i], kBceEpsilon, 1.0 - kBceEpsilon);
        bce -= target * std::log(q) + (1.0 - target) * std::log(1.0 - q);
        intersection += p[i] * target;
        uni += p[i] + target - p[i] * target;
    }
    SegLoss out;
    out.bce = bce / static_cast<double>(p.size());
    out.iou = uni == 0.0 ? 0.0 : 1.0 - intersection / uni;
    out.total = 0.5 * out.bce + out.iou;
    return out;
}

double total_loss(double centerness, double segmentation, double plane) {
    return centerness + segmentation + plane;
}

WeightedLosses stage_weighted(const StageLosses& stages) {
    WeightedLosses out;
    for (std::size_t i = 0; i < kOutputStageWeights.size(); ++i) {
        out.plane += kOutputStageWeights[i] * stages.plane[i];
        out.segmentation += kOutputStageWeights[i] * stages.segmentation[i];
    }
    for (std::size_t i = 0; i < kCascadeStageWeights.size(); ++i) {
        out.centerness += kCascadeStageWeights[i] * stages.centerness[i];
    }
    return out;
}

Vec3 grad_plane_loss(const PolarPlane& predicted, const Plane& truth,
                     const CameraIntrinsics& intrinsics, const Vec2& u, double delta,
                     const ParamWeights& weights) {
    const double s1 = std::sin(predicted.theta1);
    const double c1 = std::cos(predicted.theta1);
    const double s2 = std::sin(predicted.theta2);
    const double c2 = std::cos(predicted.theta2);
    const Vec3 n = from_polar(predicted.theta1, predicted.theta2);
    const std::array<Vec3, 2> dn{Vec3(-s1 * s2, c1, s1 * c2), Vec3(c1 * c2, 0.0, c1 * s2)};

    const Vec3 ray = pixel_ray(intrinsics, u);
    const double denom = n.dot(ray);
    if (!(std::abs(denom) >= kParallelEpsilon)) {
        throw SingularConfiguration("predicted plane is parallel to the pixel ray");
    }
    const double depth = -predicted.d / denom;
    const Vec3 p = depth * ray;

    // Derivatives of p with respect to (theta1, theta2, d).
    std::array<Vec3, 3> dp;
    for (int k = 0; k < 2; ++k) {
        dp[static_cast<std::size_t>(k)] =
            (predicted.d * dn[static_cast<std::size_t>(k)].dot(ray) / (denom * denom)) * ray;
    }
    dp[2] = (-1.0 / denom) * ray;

    const Vec3 anchor = basis_anchor(n);
    const Vec3 w = anchor.cross(n);
    const double w_norm = w.norm();
    const Vec3 e1 = w / w_norm;
    const Vec3 e2 = n.cross(e1);
    std::array<Vec3, 3> de1;
    std::array<Vec3, 3> de2;
    for (std::size_t k = 0; k < 2; ++k) {
        const Vec3 dw = anchor.cross(dn[k]);
        de1[k] = (dw - e1 * e1.dot(dw)) / w_norm;
        de2[k] = dn[k].cross(e1) + n.cross(de1[k]);
    }
    de1[2] = Vec3::Zero();
    de2[2] = Vec3::Zero();

    const PolarPlane target = to_polar(truth);
    Vec3 grad(weights.theta1 * smooth_abs_derivative(predicted.theta1 - target.theta1),
              weights.theta2 * smooth_abs_derivative(predicted.theta2 - target.theta2),
              weights.d * smooth_abs_derivative(predicted.d - target.d));

    const std::array<Vec3, 4> points = sample_points(p, {e1, e2}, delta);
    for (std::size_t j = 0; j < points.size(); ++j) {
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        const auto& de = j < 2 ? de1 : de2;
        const double slope = smooth_abs_derivative(truth.signed_distance(points[j]));
        for (std::size_t k = 0; k < 3; ++k) {
            grad[static_cast<Eigen::Index>(k)] +=
                slope * truth.normal.dot(dp[k] + sign * delta * de[k]);
        }
    }
    return grad;
}

}  // namespace glass3d
