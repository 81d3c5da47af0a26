#include "glass3d/plane.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "glass3d/errors.hpp"

namespace glass3d {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite())
        throw InvalidTransform("transform has non-finite entries");
    const double orth = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (orth > 1e-9) {
        std::ostringstream os;
        os << "rotation is not orthonormal (max |R^T R - I| = " << orth << ")";
        throw InvalidTransform(os.str());
    }
    const double det = rotation.determinant();
    if (std::abs(det - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "rotation determinant is " << det << ", expected +1";
        throw InvalidTransform(os.str());
    }
}

RigidTransform RigidTransform::inverse() const {
    const Mat3 rt = rotation_.transpose();
    return RigidTransform(rt, -(rt * translation_));
}

VertexSet transform_points(const RigidTransform& transform, std::span<const Vec3> points) {
    VertexSet out;
    out.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!all_finite(points[i])) {
            throw InvalidInput("non-finite point at index " + std::to_string(i));
        }
        out.push_back(transform.apply(points[i]));
    }
    return out;
}

PlaneFit fit_plane_lsq_detailed(std::span<const Vec3> points, const FitOptions& options) {
    const auto count = static_cast<Eigen::Index>(points.size());
    if (count < 3) {
        throw DegenerateGeometry("plane fit needs at least 3 points, got " +
                                 std::to_string(points.size()));
    }
    Eigen::MatrixX3d design(count, 3);
    for (Eigen::Index i = 0; i < count; ++i) {
        const Vec3& p = points[static_cast<std::size_t>(i)];
        if (!all_finite(p)) throw InvalidInput("non-finite point at index " + std::to_string(i));
        design.row(i) = p.transpose();
    }

    const Mat3 normal_matrix = design.transpose() * design;
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(normal_matrix, Eigen::EigenvaluesOnly);
    const double lambda_min = eig.eigenvalues()(0);
    const double lambda_max = eig.eigenvalues()(2);
    const double condition = lambda_min > 0.0 ? lambda_max / lambda_min
                                              : std::numeric_limits<double>::infinity();
    if (!(condition <= options.max_condition)) {
        std::ostringstream os;
        os << "normal equations are rank deficient (condition " << condition << " > "
           << options.max_condition << "); points are collinear or coincident";
        throw DegenerateGeometry(os.str());
    }

    // Same minimizer as (P^T P)^{-1} P^T (-1), computed on P directly.
    const Eigen::VectorXd rhs = Eigen::VectorXd::Constant(count, -1.0);
    const Vec3 n_hat = design.colPivHouseholderQr().solve(rhs);
    const double residual = (design * n_hat - rhs).norm() / std::sqrt(static_cast<double>(count));
    if (!(residual <= options.max_residual_rms)) {
        std::ostringstream os;
        os << "least-squares residual " << residual << " exceeds " << options.max_residual_rms
           << "; plane passes through or near the camera center";
        throw NearOriginPlane(os.str(), residual);
    }

    const double norm = n_hat.norm();
    PlaneFit fit;
    fit.plane = canonicalize(Plane{n_hat / norm, 1.0 / norm});
    fit.residual_rms = residual;
    fit.condition = condition;
    return fit;
}

Plane fit_plane_lsq(std::span<const Vec3> points, const FitOptions& options) {
    return fit_plane_lsq_detailed(points, options).plane;
}

Plane fit_plane_svd(std::span<const Vec3> points) {
    if (points.size() < 3) throw DegenerateGeometry("plane fit needs at least 3 points");
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : points) {
        if (!all_finite(p)) throw InvalidInput("non-finite point in plane fit");
        centroid += p;
    }
    centroid /= static_cast<double>(points.size());
    Mat3 scatter = Mat3::Zero();
    for (const Vec3& p : points) {
        const Vec3 q = p - centroid;
        scatter += q * q.transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
    const Eigen::Vector3d values = eig.eigenvalues();
    if (!(values(1) > 1e-12 * values(2))) {
        throw DegenerateGeometry("points are collinear or coincident");
    }
    const Vec3 normal = eig.eigenvectors().col(0).normalized();
    return canonicalize(Plane{normal, -normal.dot(centroid)});
}

Plane canonicalize(const Plane& plane) {
    const Vec3& n = plane.normal;
    if (!n.allFinite() || !std::isfinite(plane.d)) throw InvalidPlane("plane has non-finite values");
    if (n.x() == 0.0 && n.y() == 0.0 && n.z() == 0.0) throw InvalidPlane("plane normal is zero");

    bool flip = false;
    if (n.z() > 0.0) {
        flip = true;
    } else if (n.z() == 0.0) {
        flip = n.x() < 0.0 || (n.x() == 0.0 && n.y() < 0.0);
    }
    return flip ? Plane{-n, -plane.d} : plane;
}

bool is_canonical(const Plane& plane) {
    const Vec3& n = plane.normal;
    if (n.z() < 0.0) return true;
    if (n.z() > 0.0) return false;
    return n.x() > 0.0 || (n.x() == 0.0 && n.y() > 0.0);
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

PolarAngles to_polar(const Vec3& normal) {
    if (!normal.allFinite()) throw InvalidInput("normal has non-finite components");
    if (normal.z() > 0.0) throw InvalidInput("normal must lie in the -z hemisphere");
    const double r_xz = std::hypot(normal.x(), normal.z());
    PolarAngles out;
    out.theta1 = std::atan2(normal.y(), r_xz);
    out.theta2 = r_xz == 0.0 ? 0.0 : std::atan2(normal.x(), -normal.z());
    return out;
}

Vec3 from_polar(double theta1, double theta2) {
    if (!(std::abs(theta1) <= kHalfPi) || !(std::abs(theta2) <= kHalfPi)) {
        std::ostringstream os;
        os << "polar angles (" << theta1 << ", " << theta2 << ") outside [-pi/2, pi/2]";
        throw OutOfRange(os.str());
    }
    const double c1 = std::cos(theta1);
    return {c1 * std::sin(theta2), std::sin(theta1), -c1 * std::cos(theta2)};
}

PolarPlane to_polar(const Plane& plane) {
    const Plane canonical = canonicalize(plane);
    const PolarAngles angles = to_polar(canonical.normal);
    return {angles.theta1, angles.theta2, canonical.d};
}

Plane from_polar(const PolarPlane& plane) {
    return Plane{from_polar(plane.theta1, plane.theta2), plane.d};
}

}  // namespace glass3d
