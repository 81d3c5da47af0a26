#pragma once

#include <span>

#include "glass3d/grid.hpp"
#include "glass3d/plane.hpp"

namespace glass3d {

/// Pinhole intrinsics (pixels). No distortion model.
struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 1;
    int height = 1;

    /// Throws InvalidIntrinsics when fx, fy <= 0 or the principal point lies
    /// outside [0, width) x [0, height).
    void validate() const;

    friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

/// Continuous image coordinate sampled by pixel (row, col).
inline Vec2 pixel_center(int row, int col) { return {col + 0.5, row + 0.5}; }

/// K^{-1} [u_x, u_y, 1]^T. The z component is exactly 1.
Vec3 pixel_ray(const CameraIntrinsics& intrinsics, const Vec2& u);

/// Depth (z) where the ray through `u` meets the plane: -d / (n . ray).
/// Throws RayParallelToPlane when |n . ray| < 1e-9 and PlaneBehindCamera for
/// non-positive depth.
double plane_depth_at_pixel(const Plane& plane, const CameraIntrinsics& intrinsics, const Vec2& u);

/// 3D intersection of the pixel ray with the plane.
Vec3 backproject(const Plane& plane, const CameraIntrinsics& intrinsics, const Vec2& u);

/// Renders per-instance plane depth into every labelled pixel (OpenMP over
/// rows). `planes[i]` belongs to label i + 1. Background stays 0.
DepthMap render_depth(const InstanceMaskSet& masks, std::span<const Plane> planes,
                      const CameraIntrinsics& intrinsics);

/// Writes plane depth for pixels carrying `label` into `depth`, leaving other
/// pixels untouched.
void render_instance_depth(const InstanceMaskSet& masks, int label, const Plane& plane,
                           const CameraIntrinsics& intrinsics, DepthMap& depth);

namespace reference {

/// Serial single-loop version of render_depth.
DepthMap render_depth(const InstanceMaskSet& masks, std::span<const Plane> planes,
                      const CameraIntrinsics& intrinsics);

}  // namespace reference
}  // namespace glass3d
