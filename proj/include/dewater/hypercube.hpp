#pragma once

#include "dewater/imagecore.hpp"
#include "dewater/random.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace dewater {

/**
 * H x W x B stack of reflectance planes, band-sequential, float32 storage so
 * that HCUB files round-trip bit-exactly.
 *
 * Wavelengths must be strictly monotonic. PRISMA VNIR products list bands in
 * descending wavelength (band 33 is red, band 56 blue), so both directions
 * are accepted.
 */
class HyperCube {
public:
    HyperCube() = default;

    HyperCube(std::size_t height, std::size_t width, std::vector<float> wavelengths_nm)
        : height_(height), width_(width), wavelengths_(std::move(wavelengths_nm)),
          planes_(wavelengths_.size() * height * width, 0.0f) {
        validate();
    }

    HyperCube(std::size_t height, std::size_t width, std::vector<float> planes,
              std::vector<float> wavelengths_nm)
        : height_(height), width_(width), wavelengths_(std::move(wavelengths_nm)),
          planes_(std::move(planes)) {
        validate();
    }

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t bands() const noexcept { return wavelengths_.size(); }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return height_ * width_; }
    [[nodiscard]] bool empty() const noexcept { return planes_.empty(); }

    [[nodiscard]] std::span<const float> wavelengths() const noexcept { return wavelengths_; }
    [[nodiscard]] std::span<const float> planes() const noexcept { return planes_; }

    /// 0-based band index.
    [[nodiscard]] std::span<float> plane(std::size_t band) {
        return std::span<float>(planes_).subspan(band * pixel_count(), pixel_count());
    }
    [[nodiscard]] std::span<const float> plane(std::size_t band) const {
        return std::span<const float>(planes_).subspan(band * pixel_count(), pixel_count());
    }

    [[nodiscard]] float& at(std::size_t band, std::size_t y, std::size_t x) {
        return planes_[band * pixel_count() + y * width_ + x];
    }
    [[nodiscard]] float at(std::size_t band, std::size_t y, std::size_t x) const {
        return planes_[band * pixel_count() + y * width_ + x];
    }

    [[nodiscard]] HyperCube crop(std::size_t y0, std::size_t x0, std::size_t h,
                                 std::size_t w) const {
        if (y0 + h > height_ || x0 + w > width_) {
            throw Error(Errc::DimensionMismatch, "crop window exceeds cube extent");
        }
        HyperCube out(h, w, wavelengths_);
        for (std::size_t b = 0; b < bands(); ++b)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x) out.at(b, y, x) = at(b, y0 + y, x0 + x);
        return out;
    }

    /// Every sample multiplied by s (used by scale-equivariance checks).
    [[nodiscard]] HyperCube scaled(float s) const {
        HyperCube out = *this;
        for (auto& v : out.planes_) v *= s;
        return out;
    }

    friend bool operator==(const HyperCube&, const HyperCube&) = default;

private:
    void validate() const {
        if (planes_.size() != wavelengths_.size() * height_ * width_) {
            throw Error(Errc::DimensionMismatch, "plane data length does not match H*W*B");
        }
        if (wavelengths_.size() > 1) {
            const bool up = wavelengths_[1] > wavelengths_[0];
            for (std::size_t i = 1; i < wavelengths_.size(); ++i) {
                const bool ok = up ? wavelengths_[i] > wavelengths_[i - 1]
                                   : wavelengths_[i] < wavelengths_[i - 1];
                if (!ok) throw Error(Errc::WavelengthOrder, "wavelengths not strictly monotonic");
            }
        }
        for (float w : wavelengths_) {
            if (!std::isfinite(w)) throw Error(Errc::WavelengthOrder, "non-finite wavelength");
        }
        for (float v : planes_) {
            if (!std::isfinite(v)) throw Error(Errc::NonFiniteInput, "non-finite plane sample");
        }
    }

    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> wavelengths_;
    std::vector<float> planes_;
};

/// 1-based band numbers, matching how sensor products number their bands.
struct BandTriplet {
    std::size_t r = 33;
    std::size_t g = 45;
    std::size_t b = 56;

    [[nodiscard]] std::array<std::size_t, 3> as_array() const noexcept { return {r, g, b}; }
    friend bool operator==(const BandTriplet&, const BandTriplet&) = default;
};

inline void check_band(const HyperCube& cube, std::size_t band_1based) {
    if (band_1based < 1 || band_1based > cube.bands()) {
        throw Error(Errc::BandOutOfRange, "band " + std::to_string(band_1based) +
                                              " outside 1.." + std::to_string(cube.bands()));
    }
}

inline void check_triplet(const HyperCube& cube, const BandTriplet& t) {
    for (auto b : t.as_array()) check_band(cube, b);
    if (t.r == t.g || t.r == t.b || t.g == t.b) {
        throw Error(Errc::BandOutOfRange, "band triplet must be distinct");
    }
}

// ---------------------------------------------------------------------------
// HCUB container: little-endian "HCUB", u32 version, u32 height, u32 width,
// u32 bands, bands*(height*width) f32 planes, bands f32 wavelengths.

inline constexpr std::uint32_t kHcubVersion = 1;

namespace detail {

inline void put_u32(std::vector<char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::vector<char>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t get_u32(const std::vector<char>& in, std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[off + i])) << (8 * i);
    }
    return v;
}

inline float get_f32(const std::vector<char>& in, std::size_t off) {
    return std::bit_cast<float>(get_u32(in, off));
}

} // namespace detail

inline std::vector<char> encode_cube(const HyperCube& cube) {
    std::vector<char> out;
    out.reserve(20 + 4 * (cube.planes().size() + cube.bands()));
    for (char c : std::string_view("HCUB")) out.push_back(c);
    detail::put_u32(out, kHcubVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(cube.height()));
    detail::put_u32(out, static_cast<std::uint32_t>(cube.width()));
    detail::put_u32(out, static_cast<std::uint32_t>(cube.bands()));
    for (float v : cube.planes()) detail::put_f32(out, v);
    for (float w : cube.wavelengths()) detail::put_f32(out, w);
    return out;
}

inline HyperCube decode_cube(const std::vector<char>& bytes) {
    if (bytes.size() < 4) throw Error(Errc::TruncatedFile, "file shorter than magic");
    if (std::memcmp(bytes.data(), "HCUB", 4) != 0) throw Error(Errc::BadMagic, "magic is not HCUB");
    if (bytes.size() < 20) throw Error(Errc::TruncatedFile, "header incomplete");
    const auto version = detail::get_u32(bytes, 4);
    if (version != kHcubVersion) {
        throw Error(Errc::VersionUnsupported, "HCUB version " + std::to_string(version));
    }
    const std::uint64_t h = detail::get_u32(bytes, 8);
    const std::uint64_t w = detail::get_u32(bytes, 12);
    const std::uint64_t b = detail::get_u32(bytes, 16);
    const std::uint64_t samples = h * w * b;
    const std::uint64_t need = 20 + 4 * (samples + b);
    if (bytes.size() < need) throw Error(Errc::TruncatedFile, "payload shorter than header promises");
    if (bytes.size() > need) throw Error(Errc::DecodeError, "trailing bytes after payload");

    std::vector<float> planes(samples);
    std::size_t off = 20;
    for (auto& v : planes) {
        v = detail::get_f32(bytes, off);
        off += 4;
    }
    std::vector<float> wl(b);
    for (auto& v : wl) {
        v = detail::get_f32(bytes, off);
        off += 4;
    }
    return HyperCube(h, w, std::move(planes), std::move(wl));
}

inline void save_cube(const HyperCube& cube, const std::filesystem::path& path) {
    const auto bytes = encode_cube(cube);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline HyperCube load_cube(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
    std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_cube(bytes);
}

// ---------------------------------------------------------------------------

/// Three selected planes as an RGB raster, clamped to [0,1].
inline RasterImage compose_rgb(const HyperCube& cube, const BandTriplet& bands = {}) {
    check_triplet(cube, bands);
    RasterImage out(cube.height(), cube.width(), 3);
    const auto idx = bands.as_array();
    for (std::size_t c = 0; c < 3; ++c) {
        const auto p = cube.plane(idx[c] - 1);
        for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
            out.data()[i * 3 + c] = std::clamp(static_cast<double>(p[i]), 0.0, 1.0);
        }
    }
    return out;
}

/// One plane as a grey raster, clamped to [0,1].
inline RasterImage band_image(const HyperCube& cube, std::size_t band_1based) {
    check_band(cube, band_1based);
    RasterImage out(cube.height(), cube.width(), 1);
    const auto p = cube.plane(band_1based - 1);
    for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
        out.data()[i] = std::clamp(static_cast<double>(p[i]), 0.0, 1.0);
    }
    return out;
}

/// 1-based index of the band whose centre wavelength is closest to nm.
inline std::size_t nearest_band(const HyperCube& cube, double nm) {
    if (cube.bands() == 0) throw Error(Errc::BandOutOfRange, "cube has no bands");
    std::size_t best = 0;
    for (std::size_t i = 1; i < cube.bands(); ++i) {
        if (std::abs(cube.wavelengths()[i] - nm) < std::abs(cube.wavelengths()[best] - nm)) best = i;
    }
    return best + 1;
}

inline constexpr double kDefaultMaskThreshold = 0.1;
inline constexpr double kDefaultNirWavelength = 860.0;

/// Water absorbs near-infrared strongly: water where NIR reflectance < threshold.
inline WaterMask infer_water_mask(const HyperCube& cube, std::size_t nir_band,
                                  double threshold = kDefaultMaskThreshold) {
    check_band(cube, nir_band);
    WaterMask m(cube.height(), cube.width(), false);
    const auto p = cube.plane(nir_band - 1);
    for (std::size_t y = 0; y < cube.height(); ++y)
        for (std::size_t x = 0; x < cube.width(); ++x)
            m.set(y, x, p[y * cube.width() + x] < threshold);
    return m;
}

/// Evenly spaced centre wavelengths from first_nm to last_nm (either direction).
inline std::vector<float> linear_wavelengths(std::size_t bands, double first_nm, double last_nm) {
    std::vector<float> wl(bands);
    for (std::size_t i = 0; i < bands; ++i) {
        const double t = bands > 1 ? static_cast<double>(i) / static_cast<double>(bands - 1) : 0.0;
        wl[i] = static_cast<float>(first_nm + t * (last_nm - first_nm));
    }
    return wl;
}

/**
 * Deterministic coastal scene: shallow water over sand with a blue-green
 * water body, and vegetated land with a red edge. Bands run 1010 -> 400 nm
 * like a VNIR product, so the default triplet lands on red/green/blue.
 */
inline HyperCube make_synthetic_cube(std::uint64_t seed, std::size_t height, std::size_t width,
                                     std::size_t bands = 63) {
    Rng rng(seed);
    auto wl = linear_wavelengths(bands, 1010.0, 400.0);
    HyperCube cube(height, width, wl);

    // Coastline: a tilted sinusoid; water lies below it.
    const double tilt = rng.uniform(-0.4, 0.4);
    const double phase = rng.uniform(0.0, 6.28);
    const double amp = rng.uniform(0.05, 0.15) * static_cast<double>(height);
    const double base = rng.uniform(0.35, 0.6) * static_cast<double>(height);
    const double depth_scale = rng.uniform(1.0, 3.0);
    const double veg = rng.uniform(0.5, 1.0);

    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            const double xf = static_cast<double>(x);
            const double shore = base + tilt * (xf - width / 2.0) +
                                 amp * std::sin(phase + 6.28 * xf / static_cast<double>(width));
            const double dist = static_cast<double>(y) - shore; // > 0 is water
            const bool is_water = dist > 0.0;
            const double depth = is_water ? depth_scale * (1.0 - std::exp(-dist / 8.0)) + 0.6 : 0.0;
            const double jitter = rng.uniform(-0.01, 0.01);
            for (std::size_t b = 0; b < bands; ++b) {
                const double lam = wl[b];
                const double u = (lam - 400.0) / 610.0; // 0 at blue, 1 at NIR end
                double r = 0.0;
                if (is_water) {
                    const double bottom = 0.25 + 0.15 * u;                  // sand
                    const double alpha = 0.03 + 4.0 * u * u;                // red/NIR absorbed
                    const double deep = 0.06 * std::exp(-3.0 * u) + 0.005;  // blue-green body
                    const double att = std::exp(-2.0 * alpha * depth);
                    r = bottom * att + deep * (1.0 - att);
                } else {
                    const double green = 0.06 * std::exp(-std::pow((lam - 550.0) / 35.0, 2.0));
                    const double edge = 0.45 / (1.0 + std::exp(-(lam - 715.0) / 15.0));
                    const double soil = 0.1 + 0.2 * u;
                    r = veg * (0.04 + green + edge) + (1.0 - veg) * soil;
                }
                cube.at(b, y, x) = static_cast<float>(std::max(0.0, r + jitter * (0.5 + u)));
            }
        }
    }
    return cube;
}

} // namespace dewater
