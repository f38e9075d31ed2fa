#pragma once

#include "dewater/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dewater {

/**
 * Floating-point raster, interleaved row-major (y, x, c).
 *
 * Samples are radiance fractions with nominal range [0,1]; quantization to
 * 8 bits only happens at the file boundary (see png_io.hpp).
 */
class RasterImage {
public:
    RasterImage() = default;

    RasterImage(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels),
          data_(height * width * channels, fill) {
        check_channels();
    }

    RasterImage(std::size_t height, std::size_t width, std::size_t channels,
                std::vector<double> data)
        : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
        check_channels();
        if (data_.size() != height_ * width_ * channels_) {
            throw Error(Errc::DimensionMismatch,
                        "raster data length " + std::to_string(data_.size()) +
                            " != " + std::to_string(height_ * width_ * channels_));
        }
    }

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return height_ * width_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] double& at(std::size_t y, std::size_t x, std::size_t c = 0) {
        return data_[(y * width_ + x) * channels_ + c];
    }
    [[nodiscard]] double at(std::size_t y, std::size_t x, std::size_t c = 0) const {
        return data_[(y * width_ + x) * channels_ + c];
    }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    [[nodiscard]] bool same_extent(const RasterImage& o) const noexcept {
        return height_ == o.height_ && width_ == o.width_;
    }
    [[nodiscard]] bool same_shape(const RasterImage& o) const noexcept {
        return same_extent(o) && channels_ == o.channels_;
    }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;

private:
    void check_channels() const {
        if (channels_ != 1 && channels_ != 3) {
            throw Error(Errc::InvalidArgument,
                        "raster channels must be 1 or 3, got " + std::to_string(channels_));
        }
    }

    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 1;
    std::vector<double> data_;
};

/// Binary raster: 1 = water, 0 = land or cloud.
class WaterMask {
public:
    WaterMask() = default;

    WaterMask(std::size_t height, std::size_t width, bool fill = true)
        : height_(height), width_(width), bits_(height * width, fill ? 1 : 0) {}

    WaterMask(std::size_t height, std::size_t width, std::vector<std::uint8_t> bits)
        : height_(height), width_(width), bits_(std::move(bits)) {
        if (bits_.size() != height_ * width_) {
            throw Error(Errc::DimensionMismatch, "mask length does not match extent");
        }
        for (auto& b : bits_) b = b ? 1 : 0;
    }

    [[nodiscard]] std::size_t height() const noexcept { return height_; }
    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return bits_.size(); }

    [[nodiscard]] bool water(std::size_t y, std::size_t x) const { return bits_[y * width_ + x] != 0; }
    [[nodiscard]] bool water(std::size_t i) const { return bits_[i] != 0; }
    void set(std::size_t y, std::size_t x, bool v) { bits_[y * width_ + x] = v ? 1 : 0; }

    [[nodiscard]] std::size_t water_count() const noexcept {
        return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
    }
    [[nodiscard]] std::span<const std::uint8_t> bits() const noexcept { return bits_; }

    [[nodiscard]] bool matches(const RasterImage& img) const noexcept {
        return img.height() == height_ && img.width() == width_;
    }

    friend bool operator==(const WaterMask&, const WaterMask&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<std::uint8_t> bits_;
};

inline void require_same_shape(const RasterImage& a, const RasterImage& b, const char* what) {
    if (!a.same_shape(b)) {
        throw Error(Errc::DimensionMismatch,
                    std::string(what) + ": shapes " + std::to_string(a.height()) + "x" +
                        std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                        std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                        std::to_string(b.channels()));
    }
}

inline void require_mask_fits(const WaterMask& m, const RasterImage& img, const char* what) {
    if (!m.matches(img)) {
        throw Error(Errc::DimensionMismatch, std::string(what) + ": mask extent differs from raster");
    }
}

/**
 * Linearly interpolated percentile of an ascending-sorted sample list.
 * p in [0,1]; position p*(n-1) between neighbouring order statistics.
 */
inline double sorted_percentile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw Error(Errc::InvalidArgument, "percentile of empty sample");
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct StretchResult {
    RasterImage image;
    std::vector<bool> constant_channel; ///< channels whose percentiles coincided

    [[nodiscard]] bool any_constant() const noexcept {
        return std::find(constant_channel.begin(), constant_channel.end(), true) !=
               constant_channel.end();
    }
};

/**
 * Per-channel affine stretch sending the lo_pct percentile to 0 and the
 * hi_pct percentile to 1, clamped to [0,1]. A channel whose two percentiles
 * coincide becomes all zeros and is flagged.
 */
inline StretchResult linear_stretch(const RasterImage& img, double lo_pct = 0.01,
                                    double hi_pct = 0.99) {
    if (!(lo_pct >= 0.0 && lo_pct < hi_pct && hi_pct <= 1.0)) {
        throw Error(Errc::InvalidArgument, "stretch percentiles must satisfy 0 <= lo < hi <= 1");
    }
    if (img.empty()) throw Error(Errc::InvalidArgument, "stretch of empty raster");

    StretchResult out{RasterImage(img.height(), img.width(), img.channels()),
                      std::vector<bool>(img.channels(), false)};
    const std::size_t n = img.pixel_count();
    const std::size_t nc = img.channels();
    std::vector<double> samples(n);
    for (std::size_t c = 0; c < nc; ++c) {
        for (std::size_t i = 0; i < n; ++i) samples[i] = img.data()[i * nc + c];
        std::sort(samples.begin(), samples.end());
        const double lo = sorted_percentile(samples, lo_pct);
        const double hi = sorted_percentile(samples, hi_pct);
        auto dst = out.image.data();
        if (!(hi > lo)) {
            out.constant_channel[c] = true;
            for (std::size_t i = 0; i < n; ++i) dst[i * nc + c] = 0.0;
            continue;
        }
        const double scale = 1.0 / (hi - lo);
        for (std::size_t i = 0; i < n; ++i) {
            dst[i * nc + c] = std::clamp((img.data()[i * nc + c] - lo) * scale, 0.0, 1.0);
        }
    }
    return out;
}

/// Mean of |a-b| over water pixels and all channels; 0 for an empty mask.
inline double masked_mean_abs(const RasterImage& a, const RasterImage& b, const WaterMask& m) {
    require_same_shape(a, b, "masked_mean_abs");
    require_mask_fits(m, a, "masked_mean_abs");
    const std::size_t nc = a.channels();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        if (!m.water(i)) continue;
        ++count;
        for (std::size_t c = 0; c < nc; ++c) {
            sum += std::abs(a.data()[i * nc + c] - b.data()[i * nc + c]);
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count * nc);
}

/// Euclidean norm of (a-b) restricted to water pixels; 0 for an empty mask.
inline double masked_l2_norm(const RasterImage& a, const RasterImage& b, const WaterMask& m) {
    require_same_shape(a, b, "masked_l2_norm");
    require_mask_fits(m, a, "masked_l2_norm");
    const std::size_t nc = a.channels();
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixel_count(); ++i) {
        if (!m.water(i)) continue;
        for (std::size_t c = 0; c < nc; ++c) {
            const double d = a.data()[i * nc + c] - b.data()[i * nc + c];
            sum += d * d;
        }
    }
    return std::sqrt(sum);
}

inline RasterImage clamp01(RasterImage img) {
    for (auto& v : img.data()) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    return img;
}

/// Channel mean for 3-channel rasters, identity for 1-channel.
inline RasterImage to_gray(const RasterImage& img) {
    if (img.channels() == 1) return img;
    RasterImage g(img.height(), img.width(), 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const auto* p = &img.data()[i * 3];
        g.data()[i] = (p[0] + p[1] + p[2]) / 3.0;
    }
    return g;
}

inline RasterImage gray_to_rgb(const RasterImage& img) {
    if (img.channels() == 3) return img;
    RasterImage out(img.height(), img.width(), 3);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) out.data()[i * 3 + c] = img.data()[i];
    }
    return out;
}

/// Extracts one channel as a 1-channel raster.
inline RasterImage channel(const RasterImage& img, std::size_t c) {
    if (c >= img.channels()) throw Error(Errc::InvalidArgument, "channel index out of range");
    RasterImage out(img.height(), img.width(), 1);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        out.data()[i] = img.data()[i * img.channels() + c];
    }
    return out;
}

/// Horizontal concatenation of equally tall rasters (gray inputs are replicated to RGB).
inline RasterImage hstack(std::span<const RasterImage> parts) {
    if (parts.empty()) return {};
    const std::size_t h = parts.front().height();
    std::size_t w = 0;
    for (const auto& p : parts) {
        if (p.height() != h) throw Error(Errc::DimensionMismatch, "hstack heights differ");
        w += p.width();
    }
    RasterImage out(h, w, 3);
    std::size_t x0 = 0;
    for (const auto& p : parts) {
        const RasterImage rgb = gray_to_rgb(p);
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < rgb.width(); ++x)
                for (std::size_t c = 0; c < 3; ++c) out.at(y, x0 + x, c) = rgb.at(y, x, c);
        x0 += rgb.width();
    }
    return out;
}

} // namespace dewater
