#pragma once

#include "dewater/imagecore.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace dewater {

namespace detail {

struct PngImage {
    png_image img;
    PngImage() {
        std::memset(&img, 0, sizeof(img));
        img.version = PNG_IMAGE_VERSION;
    }
    ~PngImage() { png_image_free(&img); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

inline std::uint8_t quantize(double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline png_uint_16 quantize16(double v) {
    if (!std::isfinite(v)) v = 0.0;
    return static_cast<png_uint_16>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
}

/// Decoded samples scaled to [0,1]; `sixteen` tells whether the file held 16-bit samples.
struct PngSamples {
    std::vector<double> data;
    std::size_t height = 0;
    std::size_t width = 0;
    bool color = false;
    bool sixteen = false;
};

inline PngSamples read_png(const std::filesystem::path& path, bool force_gray) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) {
        throw Error(Errc::IoError, "cannot open " + path.string());
    }
    PngImage p;
    if (!png_image_begin_read_from_file(&p.img, path.string().c_str())) {
        throw Error(Errc::DecodeError, path.string() + ": " + p.img.message);
    }
    PngSamples out;
    out.color = !force_gray && (p.img.format & PNG_FORMAT_FLAG_COLOR) != 0;
    out.sixteen = (p.img.format & PNG_FORMAT_FLAG_LINEAR) != 0;
    out.height = p.img.height;
    out.width = p.img.width;
    p.img.format = (out.color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (out.sixteen ? PNG_FORMAT_FLAG_LINEAR : 0u);
    const std::size_t n = out.height * out.width * (out.color ? 3 : 1);
    out.data.resize(n);
    if (out.sixteen) {
        std::vector<png_uint_16> buf(n);
        if (!png_image_finish_read(&p.img, nullptr, buf.data(), 0, nullptr)) {
            throw Error(Errc::DecodeError, path.string() + ": " + p.img.message);
        }
        for (std::size_t i = 0; i < n; ++i) out.data[i] = buf[i] / 65535.0;
    } else {
        std::vector<std::uint8_t> buf(n);
        if (!png_image_finish_read(&p.img, nullptr, buf.data(), 0, nullptr)) {
            throw Error(Errc::DecodeError, path.string() + ": " + p.img.message);
        }
        for (std::size_t i = 0; i < n; ++i) out.data[i] = buf[i] / 255.0;
    }
    return out;
}

inline void write_png(const std::filesystem::path& path, const void* buf, std::size_t h, std::size_t w,
                      bool color, bool sixteen) {
    const auto parent = path.parent_path();
    std::error_code ec;
    if (!parent.empty() && !std::filesystem::is_directory(parent, ec)) {
        throw Error(Errc::IoError, "parent directory missing for " + path.string());
    }
    PngImage p;
    p.img.width = static_cast<png_uint_32>(w);
    p.img.height = static_cast<png_uint_32>(h);
    p.img.format = (color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY) | (sixteen ? PNG_FORMAT_FLAG_LINEAR : 0u);
    if (!png_image_write_to_file(&p.img, path.string().c_str(), 0, buf, 0, nullptr)) {
        throw Error(Errc::IoError, path.string() + ": " + p.img.message);
    }
}

} // namespace detail

enum class PngDepth { Eight, Sixteen };

/**
 * Reads an 8- or 16-bit PNG into [0,1] samples. Colour files become
 * 3-channel, grey files 1-channel; alpha is dropped.
 */
inline RasterImage read_image(const std::filesystem::path& path) {
    auto s = detail::read_png(path, false);
    return RasterImage(s.height, s.width, s.color ? 3 : 1, std::move(s.data));
}

/// Values are clamped to [0,1] and rounded to the nearest level. 16-bit files are stored linear.
inline void write_image(const RasterImage& img, const std::filesystem::path& path,
                        PngDepth depth = PngDepth::Eight) {
    if (img.empty()) throw Error(Errc::DimensionMismatch, "cannot write empty raster");
    const bool color = img.channels() == 3;
    if (depth == PngDepth::Sixteen) {
        std::vector<png_uint_16> buf(img.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = detail::quantize16(img.data()[i]);
        detail::write_png(path, buf.data(), img.height(), img.width(), color, true);
    } else {
        std::vector<std::uint8_t> buf(img.size());
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = detail::quantize(img.data()[i]);
        detail::write_png(path, buf.data(), img.height(), img.width(), color, false);
    }
}

/// Masks are 8-bit grey PNGs; samples >= 128 decode to water.
inline WaterMask read_mask(const std::filesystem::path& path) {
    const auto s = detail::read_png(path, true);
    std::vector<std::uint8_t> bits(s.data.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = s.data[i] >= 128.0 / 255.0 ? 1 : 0;
    return WaterMask(s.height, s.width, std::move(bits));
}

inline void write_mask(const WaterMask& m, const std::filesystem::path& path) {
    std::vector<std::uint8_t> buf(m.pixel_count());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = m.water(i) ? 255 : 0;
    detail::write_png(path, buf.data(), m.height(), m.width(), false, false);
}

} // namespace dewater
