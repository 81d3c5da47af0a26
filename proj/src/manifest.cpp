#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "glass3d/errors.hpp"
#include "glass3d/io.hpp"

namespace glass3d::io {
namespace {

using nlohmann::json;

FormatError schema_error(const std::string& where, const std::string& what) {
    return FormatError("manifest " + where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) throw schema_error(where, std::string("missing '") + key + "'");
    return obj.at(key);
}

// Frame ids name output files, so keep them to a portable file-name alphabet.
bool valid_frame_id(const std::string& id) {
    if (id.empty() || id.front() == '.') return false;
    return std::all_of(id.begin(), id.end(), [](char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.';
    });
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw schema_error(where, "expected a number");
    return v.get<double>();
}

Vec3 vec3(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw schema_error(where, "expected a 3-element array");
    return {number(v[0], where), number(v[1], where), number(v[2], where)};
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string relative_string(const fs::path& p, const fs::path& base_dir) {
    const fs::path target = fs::absolute(p).lexically_normal();
    const fs::path base = fs::absolute(base_dir).lexically_normal();
    return target.lexically_relative(base).generic_string();
}

fs::path resolve(const json& v, const fs::path& base_dir, bool check_files, const std::string& where) {
    if (!v.is_string()) throw schema_error(where, "expected a path string");
    fs::path p = v.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    p = p.lexically_normal();
    if (check_files && !fs::exists(p)) throw schema_error(where, "referenced file does not exist: " + p.string());
    return p;
}

json plane_json(const Plane& plane) {
    const PolarPlane polar = to_polar(plane);
    const Plane canonical = canonicalize(plane);
    return {{"theta1", polar.theta1},
            {"theta2", polar.theta2},
            {"d", polar.d},
            {"normal", to_json(canonical.normal)}};
}

Plane parse_plane(const json& j, const std::string& where) {
    PolarPlane polar;
    polar.theta1 = number(require(j, "theta1", where), where + ".theta1");
    polar.theta2 = number(require(j, "theta2", where), where + ".theta2");
    polar.d = number(require(j, "d", where), where + ".d");
    Plane from_angles;
    try {
        from_angles = from_polar(polar);
    } catch (const Error& e) {
        throw schema_error(where, e.what());
    }
    if (!j.contains("normal")) return from_angles;
    // The Cartesian mirror carries the exact normal; it must agree with the angles.
    const Vec3 normal = vec3(j.at("normal"), where + ".normal");
    if ((normal - from_angles.normal).norm() > 1e-9 || std::abs(normal.norm() - 1.0) > 1e-9) {
        throw schema_error(where, "normal disagrees with (theta1, theta2)");
    }
    return Plane{normal, polar.d};
}

}  // namespace

static SceneManifest parse_manifest_json(const std::string& text, const fs::path& base_dir, bool check_files);

SceneManifest parse_manifest(const std::string& text, const fs::path& base_dir, bool check_files) {
    try {
        return parse_manifest_json(text, base_dir, check_files);
    } catch (const json::exception& e) {
        throw FormatError(std::string("manifest has an unexpected value type: ") + e.what());
    }
}

static SceneManifest parse_manifest_json(const std::string& text, const fs::path& base_dir, bool check_files) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw schema_error("root", "expected an object");
    if (root.value("format", std::string()) != kManifestFormat) {
        throw schema_error("root", std::string("format must be '") + kManifestFormat + "'");
    }
    const json& version = require(root, "version", "root");
    if (!version.is_number_integer() || version.get<int>() != kManifestVersion) {
        throw schema_error("root", "unsupported version " + version.dump());
    }

    SceneManifest manifest;
    const json& k = require(root, "intrinsics", "root");
    manifest.intrinsics.fx = number(require(k, "fx", "intrinsics"), "intrinsics.fx");
    manifest.intrinsics.fy = number(require(k, "fy", "intrinsics"), "intrinsics.fy");
    manifest.intrinsics.cx = number(require(k, "cx", "intrinsics"), "intrinsics.cx");
    manifest.intrinsics.cy = number(require(k, "cy", "intrinsics"), "intrinsics.cy");
    manifest.intrinsics.width = require(k, "width", "intrinsics").get<int>();
    manifest.intrinsics.height = require(k, "height", "intrinsics").get<int>();
    try {
        manifest.intrinsics.validate();
    } catch (const Error& e) {
        throw schema_error("intrinsics", e.what());
    }

    const json& frames = require(root, "frames", "root");
    if (!frames.is_array()) throw schema_error("frames", "expected an array");
    std::set<std::string> frame_ids;
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
        const json& jf = frames[fi];
        const std::string where = "frames[" + std::to_string(fi) + "]";
        FrameRecord frame;
        frame.id = require(jf, "id", where).get<std::string>();
        if (!valid_frame_id(frame.id)) {
            throw schema_error(where, "frame id '" + frame.id + "' must use only [A-Za-z0-9_.-] and not start with '.'");
        }
        if (!frame_ids.insert(frame.id).second) throw schema_error(where, "duplicate frame id '" + frame.id + "'");
        frame.split = jf.value("split", std::string());

        const json& pose = require(jf, "camera_from_world", where);
        const json& rot = require(pose, "rotation", where + ".camera_from_world");
        if (!rot.is_array() || rot.size() != 3) throw schema_error(where, "rotation must be 3x3");
        Mat3 rotation;
        for (int r = 0; r < 3; ++r) {
            rotation.row(r) = vec3(rot[static_cast<std::size_t>(r)], where + ".rotation").transpose();
        }
        const Vec3 translation = vec3(require(pose, "translation", where), where + ".translation");
        try {
            frame.camera_from_world = RigidTransform(rotation, translation);
        } catch (const Error& e) {
            throw schema_error(where, e.what());
        }

        if (jf.contains("mask")) frame.mask = resolve(jf.at("mask"), base_dir, check_files, where + ".mask");
        if (jf.contains("depth")) frame.depth = resolve(jf.at("depth"), base_dir, check_files, where + ".depth");
        if (jf.contains("centerness"))
            frame.centerness = resolve(jf.at("centerness"), base_dir, check_files, where + ".centerness");

        const json& instances = require(jf, "instances", where);
        if (!instances.is_array()) throw schema_error(where, "instances must be an array");
        std::set<int> ids;
        for (std::size_t ii = 0; ii < instances.size(); ++ii) {
            const json& ji = instances[ii];
            const std::string iw = where + ".instances[" + std::to_string(ii) + "]";
            InstanceRecord inst;
            inst.id = require(ji, "id", iw).get<int>();
            if (inst.id < 1 || inst.id > 255 || !ids.insert(inst.id).second) {
                throw schema_error(iw, "instance id must be unique and in [1, 255]");
            }
            const json& box = require(ji, "box_world", iw);
            if (!box.is_array()) throw schema_error(iw, "box_world must be an array");
            for (const json& v : box) inst.box_world.push_back(vec3(v, iw + ".box_world"));
            if (ji.contains("mask")) inst.mask = resolve(ji.at("mask"), base_dir, check_files, iw + ".mask");
            if (ji.contains("plane")) inst.plane = parse_plane(ji.at("plane"), iw + ".plane");
            frame.instances.push_back(std::move(inst));
        }
        if (!frame.mask && std::any_of(frame.instances.begin(), frame.instances.end(),
                                       [](const InstanceRecord& i) { return !i.mask; })) {
            throw schema_error(where, "frame needs a label mask or a mask for every instance");
        }
        manifest.frames.push_back(std::move(frame));
    }
    return manifest;
}

SceneManifest load_manifest(const fs::path& path) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    return parse_manifest(read_file_bytes(path), base, true);
}

std::string dump_manifest(const SceneManifest& manifest, const fs::path& base_dir) {
    json root;
    root["format"] = kManifestFormat;
    root["version"] = kManifestVersion;
    const CameraIntrinsics& k = manifest.intrinsics;
    root["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx},
                          {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
    json frames = json::array();
    for (const FrameRecord& f : manifest.frames) {
        json jf;
        jf["id"] = f.id;
        if (!f.split.empty()) jf["split"] = f.split;
        json rot = json::array();
        for (int r = 0; r < 3; ++r) rot.push_back(to_json(f.camera_from_world.rotation().row(r).transpose()));
        jf["camera_from_world"] = {{"rotation", rot},
                                   {"translation", to_json(f.camera_from_world.translation())}};
        if (f.mask) jf["mask"] = relative_string(*f.mask, base_dir);
        if (f.depth) jf["depth"] = relative_string(*f.depth, base_dir);
        if (f.centerness) jf["centerness"] = relative_string(*f.centerness, base_dir);
        json instances = json::array();
        for (const InstanceRecord& inst : f.instances) {
            json ji;
            ji["id"] = inst.id;
            json box = json::array();
            for (const Vec3& v : inst.box_world) box.push_back(to_json(v));
            ji["box_world"] = box;
            if (inst.mask) ji["mask"] = relative_string(*inst.mask, base_dir);
            if (inst.plane) ji["plane"] = plane_json(*inst.plane);
            instances.push_back(ji);
        }
        jf["instances"] = instances;
        frames.push_back(jf);
    }
    root["frames"] = frames;
    return root.dump(2) + "\n";
}

void save_manifest(const SceneManifest& manifest, const fs::path& path) {
    const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
    write_file_bytes(path, dump_manifest(manifest, base));
}

}  // namespace glass3d::io
