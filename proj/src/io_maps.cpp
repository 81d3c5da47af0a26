#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <png.h>

#include "glass3d/errors.hpp"
#include "glass3d/io.hpp"

namespace glass3d::io {
namespace {

void put_le32(std::string& out, float value) {
    const auto bits = std::bit_cast<std::uint32_t>(value);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

float get_f32(const unsigned char* p, bool little_endian) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) {
        const std::uint32_t byte = p[little_endian ? i : 3 - i];
        bits |= byte << (8 * i);
    }
    return std::bit_cast<float>(bits);
}

std::string encode_pfm_channels(int channels, int rows, int cols,
                                auto&& value /* (channel, row, col) -> double */) {
    std::ostringstream header;
    header << (channels == 1 ? "Pf" : "PF") << '\n' << cols << ' ' << rows << "\n-1.0\n";
    std::string out = header.str();
    out.reserve(out.size() + static_cast<std::size_t>(channels) * rows * cols * 4);
    for (int r = rows - 1; r >= 0; --r)
        for (int c = 0; c < cols; ++c)
            for (int ch = 0; ch < channels; ++ch)
                put_le32(out, static_cast<float>(value(ch, r, c)));
    return out;
}

struct PfmData {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<float> values;  // channel-interleaved, top-to-bottom
};

PfmData decode_pfm(const std::string& bytes, const fs::path& path) {
    auto fail = [&](const std::string& what) -> FormatError {
        return FormatError(path.string() + ": " + what);
    };
    std::size_t pos = 0;
    auto token = [&]() {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    const std::string magic = token();
    PfmData out;
    if (magic == "Pf") {
        out.channels = 1;
    } else if (magic == "PF") {
        out.channels = 3;
    } else {
        throw fail("not a PFM file (magic '" + magic + "')");
    }
    double scale = 0.0;
    try {
        out.cols = std::stoi(token());
        out.rows = std::stoi(token());
        scale = std::stod(token());
    } catch (const std::exception&) {
        throw fail("malformed PFM header");
    }
    if (out.cols <= 0 || out.rows <= 0 || scale == 0.0 || !std::isfinite(scale)) {
        throw fail("invalid PFM header values");
    }
    if (pos >= bytes.size()) throw fail("truncated PFM header");
    ++pos;  // single whitespace byte before the raster
    const std::size_t count = static_cast<std::size_t>(out.channels) * out.rows * out.cols;
    if (bytes.size() - pos != count * 4) {
        throw fail("raster size mismatch: expected " + std::to_string(count * 4) + " bytes, found " +
                   std::to_string(bytes.size() - pos));
    }
    const bool little = scale < 0.0;
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    out.values.resize(count);
    const std::size_t row_len = static_cast<std::size_t>(out.channels) * out.cols;
    for (int file_row = 0; file_row < out.rows; ++file_row) {
        const int r = out.rows - 1 - file_row;
        for (std::size_t i = 0; i < row_len; ++i) {
            out.values[static_cast<std::size_t>(r) * row_len + i] =
                get_f32(data + (static_cast<std::size_t>(file_row) * row_len + i) * 4, little);
        }
    }
    return out;
}

}  // namespace

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("write failed for " + path.string());
}

std::string encode_pfm(const Grid<double>& map) {
    return encode_pfm_channels(1, map.rows(), map.cols(),
                               [&](int, int r, int c) { return map(r, c); });
}

void write_pfm(const fs::path& path, const Grid<double>& map) {
    write_file_bytes(path, encode_pfm(map));
}

void write_pfm(const fs::path& path, const FeatureMap& map) {
    if (map.channels() != 1 && map.channels() != 3) {
        throw ShapeError("PFM stores 1 or 3 channels, got " + std::to_string(map.channels()));
    }
    write_file_bytes(path, encode_pfm_channels(map.channels(), map.rows(), map.cols(),
                                               [&](int ch, int r, int c) { return map(ch, r, c); }));
}

Grid<double> read_pfm(const fs::path& path) {
    const PfmData data = decode_pfm(read_file_bytes(path), path);
    if (data.channels != 1) throw FormatError(path.string() + ": expected a single-channel PFM");
    Grid<double> out(data.rows, data.cols);
    for (std::size_t i = 0; i < data.values.size(); ++i) out.values()[i] = data.values[i];
    return out;
}

FeatureMap read_pfm_channels(const fs::path& path) {
    const PfmData data = decode_pfm(read_file_bytes(path), path);
    FeatureMap out(data.channels, data.rows, data.cols);
    std::size_t i = 0;
    for (int r = 0; r < data.rows; ++r)
        for (int c = 0; c < data.cols; ++c)
            for (int ch = 0; ch < data.channels; ++ch) out(ch, r, c) = data.values[i++];
    return out;
}

void write_mask_png(const fs::path& path, const Grid<std::uint8_t>& mask) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(mask.cols());
    image.height = static_cast<png_uint_32>(mask.rows());
    image.format = PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, mask.values().data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw InvalidInput("cannot write PNG " + path.string() + ": " + message);
    }
}

Grid<std::uint8_t> read_mask_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw FormatError(path.string() + ": " + image.message);
    }
    // Color or 16-bit sources would be converted with gamma, corrupting ids.
    if ((image.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_LINEAR)) != 0) {
        png_image_free(&image);
        throw FormatError(path.string() + ": mask must be an 8-bit grayscale PNG");
    }
    image.format = PNG_FORMAT_GRAY;
    Grid<std::uint8_t> out(static_cast<int>(image.height), static_cast<int>(image.width));
    if (!png_image_finish_read(&image, nullptr, out.values().data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw FormatError(path.string() + ": " + message);
    }
    return out;
}

void write_depth_png16(const fs::path& path, const DepthMap& depth) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::vector<std::uint16_t> mm(depth.size());
    for (std::size_t i = 0; i < mm.size(); ++i) {
        const double v = std::round(depth.values()[i] * 1000.0);
        mm[i] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
    }
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(depth.cols());
    image.height = static_cast<png_uint_32>(depth.rows());
    image.format = PNG_FORMAT_LINEAR_Y;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, mm.data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw InvalidInput("cannot write PNG " + path.string() + ": " + message);
    }
}

Grid<std::uint16_t> read_png16(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
        throw FormatError(path.string() + ": " + image.message);
    }
    image.format = PNG_FORMAT_LINEAR_Y;
    Grid<std::uint16_t> out(static_cast<int>(image.height), static_cast<int>(image.width));
    if (!png_image_finish_read(&image, nullptr, out.values().data(), 0, nullptr)) {
        const std::string message = image.message;
        png_image_free(&image);
        throw FormatError(path.string() + ": " + message);
    }
    return out;
}

}  // namespace glass3d::io
