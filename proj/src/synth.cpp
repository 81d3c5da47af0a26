#include "glass3d/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <Eigen/Geometry>

#include "glass3d/centerness.hpp"
#include "glass3d/errors.hpp"
#include "glass3d/losses.hpp"

namespace glass3d {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kCornerMargin = 1e-6;

struct Rejection {
    std::string reason;
};

// Rotates `axis` away from itself by `angle` toward azimuth `azimuth` in its
// tangent plane.
Vec3 tilt(const Vec3& axis, double angle, double azimuth) {
    const auto basis = in_plane_basis(axis);
    const Vec3 dir = std::cos(azimuth) * basis[0] + std::sin(azimuth) * basis[1];
    return (std::cos(angle) * axis + std::sin(angle) * dir).normalized();
}

Vec3 sample_in_cone(SceneRng& rng, const Vec3& axis, double half_angle) {
    const double angle = half_angle * std::sqrt(rng.uniform());
    return tilt(axis, angle, rng.uniform(0.0, 2.0 * std::numbers::pi));
}

Vec2 project(const CameraIntrinsics& k, const Vec3& p) {
    return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

bool inside_convex(const std::array<Vec2, 4>& quad, const Vec2& u) {
    bool any_pos = false;
    bool any_neg = false;
    for (std::size_t i = 0; i < 4; ++i) {
        const Vec2& a = quad[i];
        const Vec2& b = quad[(i + 1) % 4];
        const double cross = (b.x() - a.x()) * (u.y() - a.y()) - (b.y() - a.y()) * (u.x() - a.x());
        any_pos |= cross > 0.0;
        any_neg |= cross < 0.0;
    }
    return !(any_pos && any_neg);
}

struct Candidate {
    std::array<Vec3, 4> corners_world;
    std::array<Vec3, 4> corners_camera;
    Plane plane;
};

Vec2 random_pixel(SceneRng& rng, const CameraIntrinsics& k, double margin) {
    return {rng.uniform(margin * k.width, (1.0 - margin) * k.width),
            rng.uniform(margin * k.height, (1.0 - margin) * k.height)};
}

// Sorted occluder depths at least `gap` apart, drawn by construction so
// large plane counts never stall on rejection.
std::vector<double> occluder_depths(SceneRng& rng, double lo, double hi, int count) {
    const double gap = std::max(0.05, 0.02 * (hi - lo));
    const double slack = (hi - lo) - gap * (count - 1);
    if (slack < 0.0) throw Rejection{"depth range too narrow for occluder spacing"};
    std::vector<double> offsets(static_cast<std::size_t>(count));
    for (double& o : offsets) o = rng.uniform(0.0, slack);
    std::sort(offsets.begin(), offsets.end());
    for (std::size_t i = 0; i < offsets.size(); ++i) offsets[i] += lo + gap * static_cast<double>(i);
    return offsets;
}

constexpr int kPlacementTries = 64;

// Front-surface-wins raster built one instance at a time.
struct Raster {
    InstanceMaskSet labels;
    Grid<double> depth;
    Grid<std::uint8_t> covered;
    std::vector<long long> visible;
};

struct Footprint {
    std::vector<std::pair<Pixel, double>> pixels;
    bool touches_earlier = false;
};

Footprint footprint(const Candidate& cand, const CameraIntrinsics& k, const Raster& raster) {
    std::array<Vec2, 4> quad;
    for (std::size_t c = 0; c < 4; ++c) quad[c] = project(k, cand.corners_camera[c]);
    double x0 = quad[0].x(), x1 = x0, y0 = quad[0].y(), y1 = y0;
    for (const Vec2& q : quad) {
        x0 = std::min(x0, q.x());
        x1 = std::max(x1, q.x());
        y0 = std::min(y0, q.y());
        y1 = std::max(y1, q.y());
    }
    Footprint fp;
    const int c0 = std::max(0, static_cast<int>(std::floor(x0 - 0.5)));
    const int c1 = std::min(k.width - 1, static_cast<int>(std::ceil(x1)));
    const int r0 = std::max(0, static_cast<int>(std::floor(y0 - 0.5)));
    const int r1 = std::min(k.height - 1, static_cast<int>(std::ceil(y1)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const Vec2 u = pixel_center(r, c);
            if (!inside_convex(quad, u)) continue;
            const double depth = -cand.plane.d / cand.plane.normal.dot(pixel_ray(k, u));
            if (!(depth > 0.0)) continue;
            fp.pixels.push_back({Pixel{r, c}, depth});
            fp.touches_earlier |= raster.covered(r, c) != 0;
        }
    }
    return fp;
}

std::optional<SyntheticScene> try_generate(SceneRng& rng, const SceneSpec& spec) {
    const CameraIntrinsics& k = spec.intrinsics;
    const int count = spec.plane_count;
    const bool occluded = spec.category == SceneCategory::multi_occluded;

    const Mat3 rotation = (Eigen::AngleAxisd(rng.uniform(-0.5, 0.5), Vec3::UnitY()) *
                           Eigen::AngleAxisd(rng.uniform(-0.5, 0.5), Vec3::UnitX()) *
                           Eigen::AngleAxisd(rng.uniform(-0.5, 0.5), Vec3::UnitZ()))
                              .toRotationMatrix();
    const Vec3 translation(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
    const RigidTransform camera_from_world(rotation, translation);
    const RigidTransform world_from_camera = camera_from_world.inverse();

    const Vec3 base_normal = from_polar(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));

    // Keep rectangle centers away from the range ends so tilted corners fit.
    double z_lo = spec.depth_min * 1.3;
    double z_hi = spec.depth_max / 1.3;
    if (!(z_hi > z_lo)) {
        z_lo = spec.depth_min;
        z_hi = spec.depth_max;
    }
    const double half_max = std::clamp(110.0 / std::sqrt(count / 2.0), 30.0, 110.0);

    std::optional<Plane> shared_plane;
    if (spec.category == SceneCategory::coplanar) {
        const double z0 = rng.uniform(z_lo, z_hi);
        const Vec3 anchor = z0 * pixel_ray(k, Vec2(k.cx, k.cy));
        shared_plane = Plane{base_normal, -base_normal.dot(anchor)};
    }
    std::vector<double> depths;
    if (occluded) depths = occluder_depths(rng, z_lo, z_hi, count);

    Raster raster{InstanceMaskSet(k.height, k.width, 0),
                  Grid<double>(k.height, k.width, std::numeric_limits<double>::infinity()),
                  Grid<std::uint8_t>(k.height, k.width, 0), {}};
    std::vector<Vec3> normals;
    std::vector<Candidate> placed;
    Vec2 previous_pixel = random_pixel(rng, k, 0.2);
    std::string last_reason;

    for (int i = 0; i < count; ++i) {
        bool accepted = false;
        for (int attempt = 0; attempt < kPlacementTries && !accepted; ++attempt) {
            try {
                Vec3 normal = base_normal;
                Vec3 center;
                if (spec.category == SceneCategory::coplanar) {
                    const Vec3 ray = pixel_ray(k, random_pixel(rng, k, 0.1));
                    const double z = -shared_plane->d / shared_plane->normal.dot(ray);
                    if (!(z > 0.0)) throw Rejection{"coplanar anchor behind camera"};
                    center = z * ray;
                } else if (spec.category == SceneCategory::multi_angle) {
                    if (i > 0) {
                        normal = sample_in_cone(rng, base_normal, 7.5 * kDeg);
                        const bool spread = std::all_of(normals.begin(), normals.end(), [&](const Vec3& other) {
                            const double a = angle_between(normal, other);
                            return a >= 2.0 * kDeg && a <= 15.0 * kDeg;
                        });
                        if (!spread) throw Rejection{"normal violates pairwise angle bounds"};
                    }
                    center = rng.uniform(z_lo, z_hi) * pixel_ray(k, random_pixel(rng, k, 0.1));
                } else {
                    normal = sample_in_cone(rng, base_normal, 10.0 * kDeg);
                    Vec2 u = previous_pixel;
                    if (i > 0) u += Vec2(rng.uniform(-60.0, 60.0), rng.uniform(-60.0, 60.0));
                    center = depths[static_cast<std::size_t>(i)] * pixel_ray(k, u);
                }

                const auto basis = in_plane_basis(normal);
                const double spin = rng.uniform(-std::numbers::pi / 4.0, std::numbers::pi / 4.0);
                const Vec3 axis1 = std::cos(spin) * basis[0] + std::sin(spin) * basis[1];
                const Vec3 axis2 = normal.cross(axis1);
                const double half1 = rng.uniform(20.0, half_max) * center.z() / k.fx;
                const double half2 = rng.uniform(20.0, half_max) * center.z() / k.fy;
                const std::array<Vec3, 4> corners{center + half1 * axis1 + half2 * axis2,
                                                  center - half1 * axis1 + half2 * axis2,
                                                  center - half1 * axis1 - half2 * axis2,
                                                  center + half1 * axis1 - half2 * axis2};

                Candidate cand;
                for (std::size_t c = 0; c < 4; ++c) cand.corners_world[c] = world_from_camera.apply(corners[c]);
                const VertexSet camera = transform_points(camera_from_world, cand.corners_world);
                for (std::size_t c = 0; c < 4; ++c) {
                    cand.corners_camera[c] = camera[c];
                    const double z = camera[c].z();
                    if (!(z >= spec.depth_min + kCornerMargin && z <= spec.depth_max - kCornerMargin)) {
                        throw Rejection{"rectangle corner outside depth range"};
                    }
                }
                try {
                    cand.plane = fit_plane_lsq(camera);
                } catch (const Error& e) {
                    throw Rejection{std::string("plane fit failed: ") + e.what()};
                }

                const Footprint fp = footprint(cand, k, raster);
                if (occluded) {
                    if (i > 0 && !fp.touches_earlier) throw Rejection{"occluder does not overlap a nearer one"};
                } else if (fp.touches_earlier) {
                    throw Rejection{"projections overlap"};
                }
                std::vector<long long> visible = raster.visible;
                visible.push_back(0);
                for (const auto& [px, depth] : fp.pixels) {
                    if (!(depth < raster.depth[px])) continue;
                    const int owner = raster.labels[px];
                    if (owner != 0) --visible[static_cast<std::size_t>(owner - 1)];
                    ++visible.back();
                }
                for (long long v : visible) {
                    if (v < spec.min_visible_pixels) throw Rejection{"instance has too few visible pixels"};
                }

                for (const auto& [px, depth] : fp.pixels) {
                    raster.covered[px] = 1;
                    if (depth < raster.depth[px]) {
                        raster.depth[px] = depth;
                        raster.labels[px] = static_cast<std::uint8_t>(i + 1);
                    }
                }
                raster.visible = std::move(visible);
                normals.push_back(normal);
                placed.push_back(cand);
                if (occluded) previous_pixel = project(k, center);
                accepted = true;
            } catch (const Rejection& r) {
                last_reason = r.reason;
            }
        }
        if (!accepted) throw Rejection{"plane " + std::to_string(i + 1) + ": " + last_reason};
    }

    SyntheticScene scene;
    scene.spec = spec;
    scene.camera_from_world = camera_from_world;
    scene.masks = std::move(raster.labels);
    const std::vector<long long>& visible = raster.visible;
    const std::vector<Candidate>& candidates = placed;

    std::vector<Plane> planes;
    for (int i = 0; i < count; ++i) {
        const Candidate& cand = candidates[static_cast<std::size_t>(i)];
        SyntheticInstance inst;
        inst.label = i + 1;
        inst.corners_world = cand.corners_world;
        inst.corners_camera = cand.corners_camera;
        inst.plane = cand.plane;
        inst.pixel_count = visible[static_cast<std::size_t>(i)];
        scene.instances.push_back(inst);
        planes.push_back(cand.plane);
    }
    try {
        scene.depth = render_depth(scene.masks, planes, k);
    } catch (const Error& e) {
        throw Rejection{std::string("render failed: ") + e.what()};
    }
    for (double z : scene.depth.values()) {
        if (z != 0.0 && !(z >= spec.depth_min && z <= spec.depth_max)) {
            throw Rejection{"rendered depth outside range"};
        }
    }
    if (spec.compute_centerness) scene.centerness = centerness_map(scene.masks);
    return scene;
}

}  // namespace

SceneCategory parse_scene_category(const std::string& name) {
    if (name == "coplanar") return SceneCategory::coplanar;
    if (name == "multi_angle" || name == "multi-angle") return SceneCategory::multi_angle;
    if (name == "multi_occluded" || name == "multi-occluded") return SceneCategory::multi_occluded;
    throw InvalidInput("unknown scene category '" + name +
                       "' (expected coplanar, multi_angle or multi_occluded)");
}

std::string to_string(SceneCategory category) {
    switch (category) {
        case SceneCategory::coplanar: return "coplanar";
        case SceneCategory::multi_angle: return "multi_angle";
        case SceneCategory::multi_occluded: return "multi_occluded";
    }
    return "unknown";
}

CameraIntrinsics default_intrinsics() {
    return CameraIntrinsics{525.0, 525.0, 315.0, 252.0, 630, 504};
}

void SceneSpec::validate() const {
    if (plane_count < 1 || plane_count > kMaxPlanesPerImage) {
        throw InvalidInput("plane_count must be in [1, " + std::to_string(kMaxPlanesPerImage) +
                           "], got " + std::to_string(plane_count));
    }
    if (!(depth_min > 0.0) || !(depth_max > depth_min) || !std::isfinite(depth_max)) {
        std::ostringstream os;
        os << "invalid depth range [" << depth_min << ", " << depth_max << "]";
        throw InvalidInput(os.str());
    }
    if (max_attempts < 1) throw InvalidInput("max_attempts must be positive");
    intrinsics.validate();
}

int SceneRng::uniform_int(int lo, int hi) {
    const double span = static_cast<double>(hi) - lo + 1.0;
    return std::min(hi, lo + static_cast<int>(std::floor(uniform() * span)));
}

std::uint64_t scene_seed(std::uint64_t base_seed, std::uint64_t index) {
    std::uint64_t z = base_seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

SyntheticScene generate_scene(const SceneSpec& spec) {
    spec.validate();
    SceneRng rng(spec.seed);
    std::string last_reason = "none";
    for (int attempt = 1; attempt <= spec.max_attempts; ++attempt) {
        try {
            if (auto scene = try_generate(rng, spec)) {
                scene->attempts = attempt;
                return std::move(*scene);
            }
        } catch (const Rejection& r) {
            last_reason = r.reason;
        }
    }
    std::ostringstream os;
    os << "no valid " << to_string(spec.category) << " scene with " << spec.plane_count
       << " planes after " << spec.max_attempts << " attempts (seed " << spec.seed
       << "); last rejection: " << last_reason;
    throw GenerationFailed(os.str());
}

RoundTripReport scene_round_trip(const SyntheticScene& scene, double depth_quantum) {
    RoundTripReport report;
    const CameraIntrinsics& k = scene.spec.intrinsics;
    FitOptions options;
    options.max_residual_rms = std::numeric_limits<double>::infinity();
    for (const SyntheticInstance& inst : scene.instances) {
        VertexSet points;
        for (int r = 0; r < scene.masks.rows(); ++r) {
            for (int c = 0; c < scene.masks.cols(); ++c) {
                if (scene.masks(r, c) != inst.label) continue;
                double z = scene.depth(r, c);
                if (depth_quantum > 0.0) z = std::round(z / depth_quantum) * depth_quantum;
                points.push_back(z * pixel_ray(k, pixel_center(r, c)));
            }
        }
        InstanceResidual res;
        res.label = inst.label;
        res.pixel_count = static_cast<long long>(points.size());
        try {
            const Plane fitted = fit_plane_lsq(points, options);
            res.angle_error = angle_between(fitted.normal, inst.plane.normal);
            res.intercept_error = std::abs(fitted.d - inst.plane.d);
        } catch (const Error&) {
            res.angle_error = std::numeric_limits<double>::infinity();
            res.intercept_error = std::numeric_limits<double>::infinity();
        }
        report.max_angle_error = std::max(report.max_angle_error, res.angle_error);
        report.max_intercept_error = std::max(report.max_intercept_error, res.intercept_error);
        report.instances.push_back(res);
    }
    return report;
}

}  // namespace glass3d
