#pragma once

#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace glass3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Plane n.v + d = 0 in the camera frame. `normal` is unit length.
struct Plane {
    Vec3 normal = Vec3(0.0, 0.0, -1.0);
    double d = 0.0;

    /// Signed distance of `v` to the plane.
    double signed_distance(const Vec3& v) const { return normal.dot(v) + d; }

    friend bool operator==(const Plane& a, const Plane& b) {
        return a.normal == b.normal && a.d == b.d;
    }
};

/// Angular plane parameterization: the normal is encoded by two angles in
/// [-pi/2, pi/2] and d is the intercept of the canonical plane.
struct PolarPlane {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double d = 0.0;

    friend bool operator==(const PolarPlane&, const PolarPlane&) = default;
};

/// Rigid world->camera transform: p_c = rotation * p_w + translation.
class RigidTransform {
public:
    RigidTransform() = default;

    /// Throws InvalidTransform unless rotation is orthonormal with det +1
    /// (both within 1e-9) and every entry is finite.
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }

    const Mat3& rotation() const noexcept { return rotation_; }
    const Vec3& translation() const noexcept { return translation_; }

    Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
    RigidTransform inverse() const;

    friend bool operator==(const RigidTransform& a, const RigidTransform& b) {
        return a.rotation_ == b.rotation_ && a.translation_ == b.translation_;
    }

private:
    Mat3 rotation_ = Mat3::Identity();
    Vec3 translation_ = Vec3::Zero();
};

using VertexSet = std::vector<Vec3>;

/// Applies `transform` to every point. Non-finite inputs are rejected with
/// their index.
VertexSet transform_points(const RigidTransform& transform, std::span<const Vec3> points);

struct FitOptions {
    /// Upper bound on cond(P^T P).
    double max_condition = 1e12;
    /// Upper bound on ||P n + 1|| / sqrt(N).
    double max_residual_rms = 1e-6;
};

struct PlaneFit {
    Plane plane;
    /// ||P n + 1|| / sqrt(N) of the raw least-squares solution.
    double residual_rms = 0.0;
    double condition = 0.0;
};

/// Least-squares plane through camera-frame vertices by solving P n = -1.
/// The returned plane is canonical. Raises DegenerateGeometry for fewer than
/// three points or an ill-conditioned system and NearOriginPlane when the
/// residual exceeds the tolerance.
PlaneFit fit_plane_lsq_detailed(std::span<const Vec3> points, const FitOptions& options = {});
Plane fit_plane_lsq(std::span<const Vec3> points, const FitOptions& options = {});

/// Total least-squares fit (centroid + smallest principal direction). Works for
/// planes through the origin. Returns a canonical plane.
Plane fit_plane_svd(std::span<const Vec3> points);

/// Flips (n, d) jointly so that n_z <= 0; when n_z == 0 the first nonzero of
/// (n_x, n_y) is made positive. Throws InvalidPlane for a zero or non-finite
/// normal.
Plane canonicalize(const Plane& plane);
bool is_canonical(const Plane& plane);

/// Angle between two normals in radians, in [0, pi].
double angle_between(const Vec3& a, const Vec3& b);

struct PolarAngles {
    double theta1 = 0.0;
    double theta2 = 0.0;
};

/// theta1 = asin(n_y); theta2 is the angle of (n_x, n_z) from -z toward +x.
/// Normals with r_xz == 0 map to theta2 = 0. Expects a canonical unit normal.
PolarAngles to_polar(const Vec3& normal);

/// n = (cos t1 sin t2, sin t1, -cos t1 cos t2). Throws OutOfRange for angles
/// outside [-pi/2, pi/2].
Vec3 from_polar(double theta1, double theta2);

PolarPlane to_polar(const Plane& plane);
Plane from_polar(const PolarPlane& plane);

}  // namespace glass3d
