#pragma once

#include <array>
#include <vector>

#include "glass3d/grid.hpp"
#include "glass3d/plane.hpp"
#include "glass3d/projection.hpp"

namespace glass3d {

inline constexpr double kBceEpsilon = 1e-7;
inline constexpr double kDefaultPointOffset = 1.0;

/// Maps raw head outputs to plane parameters: angles through (pi/2) tanh,
/// intercept scaled by 5.
PolarPlane head_activation(double a1, double a2, double b);

/// Deterministic orthonormal basis (e1, e2) of the plane with unit normal n.
/// e1 = normalize(a x n) with a = x-axis, or the y-axis when |n_x| > 0.9;
/// e2 = n x e1.
std::array<Vec3, 2> in_plane_basis(const Vec3& normal);

/// Four-point plane distance loss. The pixel is projected onto the predicted
/// plane at p; the points p +- delta e1 and p +- delta e2 are measured against
/// the ground-truth plane and their unsigned distances summed.
double plane_distance_loss(const PolarPlane& predicted, const Plane& truth,
                           const CameraIntrinsics& intrinsics, const Vec2& u,
                           double delta = kDefaultPointOffset);

struct ParamWeights {
    double theta1 = 1.0;
    double theta2 = 1.0;
    double d = 1.0;
};

/// Weighted L1 on (theta1, theta2, d).
double plane_param_loss(const PolarPlane& predicted, const PolarPlane& truth,
                        const ParamWeights& weights = {});

/// L_param + L_dist at one pixel. The ground truth is given as a plane and
/// converted to polar form for the parameter term.
double plane_loss_pixel(const PolarPlane& predicted, const Plane& truth,
                        const CameraIntrinsics& intrinsics, const Vec2& u,
                        double delta = kDefaultPointOffset, const ParamWeights& weights = {});

struct InstanceLossReport {
    std::vector<int> labels;              ///< instances with at least one pixel, ascending
    std::vector<long long> pixel_counts;  ///< M_i
    std::vector<double> mean_losses;      ///< (1/M_i) sum_j L_(i,j)
    int instance_count = 0;               ///< N
    double aggregate = 0.0;               ///< (1/N) sum_i mean_i, 0 when N = 0
};

/// Instance-normalized plane loss. Every labelled pixel must carry a finite
/// loss. Labels without pixels are ignored.
InstanceLossReport plane_loss_aggregate(const Grid<double>& pixel_losses,
                                        const InstanceMaskSet& masks);

struct SegLoss {
    double bce = 0.0;
    double iou = 0.0;
    double total = 0.0;  ///< 0.5 bce + iou
};

/// Segmentation loss on probabilities vs a binary ground truth. The soft IoU
/// term is 0 when the union is empty.
SegLoss seg_loss(const Grid<double>& predicted, const BinaryMask& truth);

double total_loss(double centerness, double segmentation, double plane);

struct StageLosses {
    std::array<double, 4> plane{};
    std::array<double, 4> segmentation{};
    std::array<double, 3> centerness{};
};

struct WeightedLosses {
    double plane = 0.0;
    double segmentation = 0.0;
    double centerness = 0.0;
};

inline constexpr std::array<double, 4> kOutputStageWeights{0.1, 0.1, 0.2, 0.6};
inline constexpr std::array<double, 3> kCascadeStageWeights{0.2, 0.3, 0.5};

WeightedLosses stage_weighted(const StageLosses& stages);

/// Smoothing constant used by grad_plane_loss for |x| -> sqrt(x^2 + mu^2) - mu.
inline constexpr double kKinkSmoothing = 1e-9;

/// Analytic gradient of plane_loss_pixel with respect to (theta1, theta2, d) of
/// the prediction. Absolute values are smoothed with kKinkSmoothing, so kinks
/// return a zero subgradient. Throws SingularConfiguration when the pixel ray
/// is parallel to the predicted plane.
Vec3 grad_plane_loss(const PolarPlane& predicted, const Plane& truth,
                     const CameraIntrinsics& intrinsics, const Vec2& u,
                     double delta = kDefaultPointOffset, const ParamWeights& weights = {});

}  // namespace glass3d
