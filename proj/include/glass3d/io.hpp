#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glass3d/grid.hpp"
#include "glass3d/plane.hpp"
#include "glass3d/projection.hpp"

namespace glass3d::io {

namespace fs = std::filesystem;

// PFM: "Pf" (1 channel) or "PF" (3 channels), little-endian float32 written
// with scale -1, rows stored bottom-to-top. Reading accepts both byte orders.
void write_pfm(const fs::path& path, const Grid<double>& map);
void write_pfm(const fs::path& path, const FeatureMap& map);  // 1 or 3 channels
std::string encode_pfm(const Grid<double>& map);
Grid<double> read_pfm(const fs::path& path);
FeatureMap read_pfm_channels(const fs::path& path);

// 8-bit single-channel PNG; pixel value = instance id.
void write_mask_png(const fs::path& path, const Grid<std::uint8_t>& mask);
Grid<std::uint8_t> read_mask_png(const fs::path& path);

/// 16-bit PNG in millimeters for viewers; values clamp at 65535 (65.535 m).
void write_depth_png16(const fs::path& path, const DepthMap& depth);
Grid<std::uint16_t> read_png16(const fs::path& path);

std::string read_file_bytes(const fs::path& path);
void write_file_bytes(const fs::path& path, const std::string& bytes);

// Scene manifest: JSON document with "format" and "version" fields. Paths are
// relative to the manifest's directory.
inline constexpr const char* kManifestFormat = "glass3d-manifest";
inline constexpr int kManifestVersion = 1;

struct InstanceRecord {
    int id = 0;
    /// World-frame vertices of the annotated glass box.
    std::vector<Vec3> box_world;
    /// Optional per-instance binary mask (nonzero = glass).
    std::optional<fs::path> mask;
    std::optional<Plane> plane;
};

struct FrameRecord {
    std::string id;
    std::string split;
    RigidTransform camera_from_world;
    std::optional<fs::path> mask;  ///< label PNG
    std::optional<fs::path> depth;
    std::optional<fs::path> centerness;
    std::vector<InstanceRecord> instances;
};

struct SceneManifest {
    CameraIntrinsics intrinsics;
    std::vector<FrameRecord> frames;
};

/// Parses and validates a manifest. Relative paths are resolved against the
/// manifest's directory and must exist.
SceneManifest load_manifest(const fs::path& path);
SceneManifest parse_manifest(const std::string& text, const fs::path& base_dir,
                             bool check_files = true);
/// Paths inside `manifest` are written relative to the manifest's directory.
void save_manifest(const SceneManifest& manifest, const fs::path& path);
std::string dump_manifest(const SceneManifest& manifest, const fs::path& base_dir);

}  // namespace glass3d::io
