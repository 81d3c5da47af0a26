#include "glass3d/projection.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "glass3d/errors.hpp"

namespace glass3d {
namespace {

constexpr double kParallelEpsilon = 1e-9;

enum class PixelFailure { none, parallel, behind };

struct DepthSample {
    double depth = 0.0;
    PixelFailure failure = PixelFailure::none;
};

DepthSample depth_sample(const Plane& plane, const Vec3& ray) {
    const double denom = plane.normal.dot(ray);
    if (!(std::abs(denom) >= kParallelEpsilon)) return {0.0, PixelFailure::parallel};
    const double depth = -plane.d / denom;
    if (!(depth > 0.0)) return {depth, PixelFailure::behind};
    return {depth, PixelFailure::none};
}

void check_shape(const InstanceMaskSet& masks, const CameraIntrinsics& intrinsics) {
    intrinsics.validate();
    if (!masks.same_shape(intrinsics.height, intrinsics.width)) {
        std::ostringstream os;
        os << "mask is " << masks.cols() << "x" << masks.rows() << " but intrinsics describe "
           << intrinsics.width << "x" << intrinsics.height;
        throw ShapeError(os.str());
    }
}

void check_planes(const InstanceMaskSet& masks, std::span<const Plane> planes) {
    const int count = instance_count(masks);
    if (static_cast<std::size_t>(count) != planes.size()) {
        std::ostringstream os;
        os << "mask has " << count << " instances but " << planes.size() << " planes were given";
        throw ShapeError(os.str());
    }
}

[[noreturn]] void throw_render_error(int label, int row, int col, PixelFailure failure) {
    std::ostringstream os;
    os << "instance " << label << " at pixel (row " << row << ", col " << col << "): "
       << (failure == PixelFailure::parallel ? "ray parallel to plane" : "plane behind camera");
    throw RenderError(os.str());
}

struct RowFailure {
    int col = -1;
    int label = 0;
    PixelFailure failure = PixelFailure::none;
};

}  // namespace

void CameraIntrinsics::validate() const {
    std::ostringstream os;
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        os << "focal lengths must be positive (fx=" << fx << ", fy=" << fy << ")";
    } else if (width <= 0 || height <= 0) {
        os << "image size must be positive (" << width << "x" << height << ")";
    } else if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        os << "principal point (" << cx << ", " << cy << ") outside the image";
    } else {
        return;
    }
    throw InvalidIntrinsics(os.str());
}

Vec3 pixel_ray(const CameraIntrinsics& intrinsics, const Vec2& u) {
    return {(u.x() - intrinsics.cx) / intrinsics.fx, (u.y() - intrinsics.cy) / intrinsics.fy, 1.0};
}

double plane_depth_at_pixel(const Plane& plane, const CameraIntrinsics& intrinsics, const Vec2& u) {
    const DepthSample s = depth_sample(plane, pixel_ray(intrinsics, u));
    if (s.failure == PixelFailure::parallel) {
        std::ostringstream os;
        os << "ray through (" << u.x() << ", " << u.y() << ") is parallel to the plane";
        throw RayParallelToPlane(os.str());
    }
    if (s.failure == PixelFailure::behind) {
        std::ostringstream os;
        os << "plane is behind the camera at (" << u.x() << ", " << u.y() << "), depth " << s.depth;
        throw PlaneBehindCamera(os.str());
    }
    return s.depth;
}

Vec3 backproject(const Plane& plane, const CameraIntrinsics& intrinsics, const Vec2& u) {
    return plane_depth_at_pixel(plane, intrinsics, u) * pixel_ray(intrinsics, u);
}

DepthMap render_depth(const InstanceMaskSet& masks, std::span<const Plane> planes,
                      const CameraIntrinsics& intrinsics) {
    check_shape(masks, intrinsics);
    check_planes(masks, planes);

    const int rows = masks.rows();
    const int cols = masks.cols();
    DepthMap depth(rows, cols, 0.0);
    std::vector<RowFailure> failures(static_cast<std::size_t>(rows));

#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int label = masks(r, c);
            if (label == 0) continue;
            const DepthSample s = depth_sample(planes[static_cast<std::size_t>(label - 1)],
                                               pixel_ray(intrinsics, pixel_center(r, c)));
            if (s.failure != PixelFailure::none) {
                failures[static_cast<std::size_t>(r)] = {c, label, s.failure};
                break;
            }
            depth(r, c) = s.depth;
        }
    }

    for (int r = 0; r < rows; ++r) {
        const RowFailure& f = failures[static_cast<std::size_t>(r)];
        if (f.failure != PixelFailure::none) throw_render_error(f.label, r, f.col, f.failure);
    }
    return depth;
}

void render_instance_depth(const InstanceMaskSet& masks, int label, const Plane& plane,
                           const CameraIntrinsics& intrinsics, DepthMap& depth) {
    check_shape(masks, intrinsics);
    if (!depth.same_shape(masks)) throw ShapeError("depth map and mask shapes differ");

    const int rows = masks.rows();
    const int cols = masks.cols();
    std::vector<RowFailure> failures(static_cast<std::size_t>(rows));
    // Values are staged so that a failing instance leaves `depth` untouched.
    DepthMap staged(rows, cols, 0.0);

#pragma omp parallel for schedule(static)
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (masks(r, c) != label) continue;
            const DepthSample s = depth_sample(plane, pixel_ray(intrinsics, pixel_center(r, c)));
            if (s.failure != PixelFailure::none) {
                failures[static_cast<std::size_t>(r)] = {c, label, s.failure};
                break;
            }
            staged(r, c) = s.depth;
        }
    }
    for (int r = 0; r < rows; ++r) {
        const RowFailure& f = failures[static_cast<std::size_t>(r)];
        if (f.failure != PixelFailure::none) throw_render_error(f.label, r, f.col, f.failure);
    }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (masks(r, c) == label) depth(r, c) = staged(r, c);
}

namespace reference {

DepthMap render_depth(const InstanceMaskSet& masks, std::span<const Plane> planes,
                      const CameraIntrinsics& intrinsics) {
    check_shape(masks, intrinsics);
    check_planes(masks, planes);
    DepthMap depth(masks.rows(), masks.cols(), 0.0);
    for (int r = 0; r < masks.rows(); ++r) {
        for (int c = 0; c < masks.cols(); ++c) {
            const int label = masks(r, c);
            if (label == 0) continue;
            const DepthSample s = depth_sample(planes[static_cast<std::size_t>(label - 1)],
                                               pixel_ray(intrinsics, pixel_center(r, c)));
            if (s.failure != PixelFailure::none) throw_render_error(label, r, c, s.failure);
            depth(r, c) = s.depth;
        }
    }
    return depth;
}

}  // namespace reference
}  // namespace glass3d
