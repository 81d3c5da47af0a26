#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "glass3d/grid.hpp"
#include "glass3d/plane.hpp"
#include "glass3d/projection.hpp"

namespace glass3d {

enum class SceneCategory { coplanar, multi_angle, multi_occluded };

SceneCategory parse_scene_category(const std::string& name);
std::string to_string(SceneCategory category);

inline constexpr double kMinGlassDepth = 0.07;
inline constexpr double kMaxGlassDepth = 17.76;
inline constexpr int kMaxPlanesPerImage = 10;

/// 630 x 504 pinhole camera used when no intrinsics are given.
CameraIntrinsics default_intrinsics();

struct SceneSpec {
    std::uint64_t seed = 0;
    SceneCategory category = SceneCategory::multi_angle;
    int plane_count = 1;
    double depth_min = kMinGlassDepth;
    double depth_max = kMaxGlassDepth;
    CameraIntrinsics intrinsics = default_intrinsics();
    bool compute_centerness = true;
    int max_attempts = 500;
    int min_visible_pixels = 64;

    void validate() const;
};

struct SyntheticInstance {
    int label = 0;
    std::array<Vec3, 4> corners_world;
    /// Corners after the world->camera transform, i.e. the fit input.
    std::array<Vec3, 4> corners_camera;
    Plane plane;
    long long pixel_count = 0;
};

struct SyntheticScene {
    SceneSpec spec;
    RigidTransform camera_from_world;
    std::vector<SyntheticInstance> instances;
    InstanceMaskSet masks;
    DepthMap depth;
    CenternessMap centerness;  ///< empty when spec.compute_centerness is false
    int attempts = 0;
};

/// Deterministic scene for `spec.seed`. Throws GenerationFailed when no valid
/// layout is found within spec.max_attempts.
SyntheticScene generate_scene(const SceneSpec& spec);

struct InstanceResidual {
    int label = 0;
    long long pixel_count = 0;
    double angle_error = 0.0;      ///< radians
    double intercept_error = 0.0;  ///< meters
};

struct RoundTripReport {
    std::vector<InstanceResidual> instances;
    double max_angle_error = 0.0;
    double max_intercept_error = 0.0;
};

/// Re-fits each instance plane from its back-projected depth pixels. When
/// `depth_quantum` > 0 depths are rounded to that step first.
RoundTripReport scene_round_trip(const SyntheticScene& scene, double depth_quantum = 0.0);

/// Generator used by synth: mt19937_64 with doubles built from the top 53 bits.
class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Integer in [lo, hi].
    int uniform_int(int lo, int hi);

private:
    std::mt19937_64 engine_;
};

/// Seed of the i-th scene in a batch (splitmix64 of base + i).
std::uint64_t scene_seed(std::uint64_t base_seed, std::uint64_t index);

}  // namespace glass3d
