#pragma once

#include "dewater/imagecore.hpp"

#include <array>
#include <cmath>
#include <string>

namespace dewater {

inline constexpr double kTransmissionFloor = 1e-3;
inline constexpr double kDefaultAttenuation = 0.9; ///< deep-water setting

using Veiling = std::array<double, 3>;

/// Underwater optics at a nadir view, where the diffuse-attenuation terms vanish.
struct OpticalParams {
    double alpha = kDefaultAttenuation; ///< absorption + scattering per unit range
    Veiling veiling{0.0, 0.0, 0.0};
    double zenith_cos = 0.0;
};

/**
 * Transmission raster with every value in [kTransmissionFloor, 1].
 * 1 channel for a wavelength-independent attenuation, 3 for per-channel.
 */
class TransmissionMap {
public:
    TransmissionMap() = default;

    /// Clamps an arbitrary raster into the admissible range.
    explicit TransmissionMap(RasterImage t) : map_(std::move(t)) {
        for (auto& v : map_.data()) {
            v = std::isfinite(v) ? std::clamp(v, kTransmissionFloor, 1.0) : kTransmissionFloor;
        }
    }

    [[nodiscard]] const RasterImage& image() const noexcept { return map_; }
    [[nodiscard]] std::size_t channels() const noexcept { return map_.channels(); }

    /// Transmission seen by channel c of a 3-channel raster.
    [[nodiscard]] double at(std::size_t pixel, std::size_t c) const {
        return map_.channels() == 1 ? map_.data()[pixel] : map_.data()[pixel * 3 + c];
    }

private:
    RasterImage map_;
};

namespace detail {

inline void check_range(const RasterImage& range) {
    if (range.channels() != 1) throw Error(Errc::DimensionMismatch, "range map must be 1-channel");
    for (double r : range.data()) {
        if (!(r >= 0.0)) throw Error(Errc::NegativeRange, "range map has a negative or NaN sample");
    }
}

inline void check_alpha(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(Errc::InvalidArgument, "attenuation must be positive and finite");
    }
}

inline void check_uifm_args(const RasterImage& img, const TransmissionMap& t, const WaterMask& m,
                            const char* what) {
    if (img.channels() != 3) throw Error(Errc::DimensionMismatch, std::string(what) + ": needs RGB");
    if (!t.image().same_extent(img)) {
        throw Error(Errc::DimensionMismatch, std::string(what) + ": transmission extent differs");
    }
    require_mask_fits(m, img, what);
}

} // namespace detail

/// T(u) = exp(-r(u) alpha), clamped to [floor, 1].
inline TransmissionMap transmission_from_range(const RasterImage& range, double alpha = kDefaultAttenuation) {
    detail::check_range(range);
    detail::check_alpha(alpha);
    RasterImage t(range.height(), range.width(), 1);
    for (std::size_t i = 0; i < range.size(); ++i) t.data()[i] = std::exp(-range.data()[i] * alpha);
    return TransmissionMap(std::move(t));
}

/// Per-channel attenuation variant; yields a 3-channel map.
inline TransmissionMap transmission_from_range(const RasterImage& range, const std::array<double, 3>& alpha) {
    detail::check_range(range);
    for (double a : alpha) detail::check_alpha(a);
    RasterImage t(range.height(), range.width(), 3);
    for (std::size_t i = 0; i < range.pixel_count(); ++i)
        for (std::size_t c = 0; c < 3; ++c) t.data()[i * 3 + c] = std::exp(-range.data()[i] * alpha[c]);
    return TransmissionMap(std::move(t));
}

/// Veiling light by grey world: per-channel mean over water pixels.
inline Veiling veiling_grey_world(const RasterImage& img, const WaterMask& mask) {
    if (img.channels() != 3) throw Error(Errc::DimensionMismatch, "veiling_grey_world needs RGB");
    require_mask_fits(mask, img, "veiling_grey_world");
    const std::size_t n = mask.water_count();
    if (n == 0) throw Error(Errc::EmptyMask, "veiling_grey_world: no water pixels");
    Veiling v{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        if (!mask.water(i)) continue;
        for (std::size_t c = 0; c < 3; ++c) v[c] += img.data()[i * 3 + c];
    }
    for (auto& x : v) x /= static_cast<double>(n);
    return v;
}

/// N = J T + V (1 - T) on water pixels; land is copied through untouched.
inline RasterImage synthesize_underwater(const RasterImage& J, const TransmissionMap& T,
                                         const Veiling& V, const WaterMask& mask) {
    detail::check_uifm_args(J, T, mask, "synthesize_underwater");
    RasterImage N = J;
    for (std::size_t i = 0; i < J.pixel_count(); ++i) {
        if (!mask.water(i)) continue;
        for (std::size_t c = 0; c < 3; ++c) {
            const double t = T.at(i, c);
            N.data()[i * 3 + c] = std::clamp(J.data()[i * 3 + c] * t + V[c] * (1.0 - t), 0.0, 1.0);
        }
    }
    return N;
}

/// J = (N - V) / T + V on water pixels; land is copied through untouched.
inline RasterImage dewater(const RasterImage& N, const TransmissionMap& T, const Veiling& V,
                           const WaterMask& mask) {
    detail::check_uifm_args(N, T, mask, "dewater");
    RasterImage J = N;
    for (std::size_t i = 0; i < N.pixel_count(); ++i) {
        if (!mask.water(i)) continue;
        for (std::size_t c = 0; c < 3; ++c) {
            const double t = T.at(i, c);
            J.data()[i * 3 + c] = std::clamp((N.data()[i * 3 + c] - V[c]) / t + V[c], 0.0, 1.0);
        }
    }
    return J;
}

} // namespace dewater
