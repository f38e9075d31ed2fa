#pragma once

#include "dewater/hypercube.hpp"
#include "dewater/imagecore.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace dewater {

/// Illuminant divisions skip bands whose estimate falls below this floor.
inline constexpr double kIlluminantFloor = 1e-6;

struct IlluminantSpectrum {
    std::vector<double> values; ///< one entry per band

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

/// Per-band g(u)S(u, lambda) stack, band-sequential like HyperCube.
struct SpectralStack {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> wavelengths;
    std::vector<double> values;

    [[nodiscard]] std::size_t bands() const noexcept { return wavelengths.size(); }
    [[nodiscard]] std::size_t pixel_count() const noexcept { return height * width; }
    [[nodiscard]] double& at(std::size_t b, std::size_t i) { return values[b * pixel_count() + i]; }
    [[nodiscard]] double at(std::size_t b, std::size_t i) const { return values[b * pixel_count() + i]; }
};

/// Wraps an RGB raster as a 3-band cube (650/550/450 nm) so the spectral
/// routines can run on plain colour images.
inline HyperCube cube_from_rgb(const RasterImage& rgb) {
    if (rgb.channels() != 3) throw Error(Errc::DimensionMismatch, "cube_from_rgb needs 3 channels");
    HyperCube cube(rgb.height(), rgb.width(), {650.0f, 550.0f, 450.0f});
    for (std::size_t c = 0; c < 3; ++c) {
        auto p = cube.plane(c);
        for (std::size_t i = 0; i < rgb.pixel_count(); ++i) {
            p[i] = static_cast<float>(rgb.data()[i * 3 + c]);
        }
    }
    return cube;
}

namespace detail {

inline IlluminantSpectrum grey_world_impl(const HyperCube& cube, const WaterMask* mask) {
    if (cube.empty()) throw Error(Errc::InvalidArgument, "grey world of empty cube");
    if (mask && (mask->height() != cube.height() || mask->width() != cube.width())) {
        throw Error(Errc::DimensionMismatch, "grey_world: mask extent differs from cube");
    }
    const std::size_t n = mask ? mask->water_count() : cube.pixel_count();
    if (n == 0) throw Error(Errc::EmptyMask, "grey_world: mask has no water pixels");
    IlluminantSpectrum L{std::vector<double>(cube.bands(), 0.0)};
    for (std::size_t b = 0; b < cube.bands(); ++b) {
        const auto p = cube.plane(b);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!mask || mask->water(i)) sum += p[i];
        }
        L.values[b] = sum / static_cast<double>(n);
    }
    return L;
}

inline void require_bands(const HyperCube& cube, const IlluminantSpectrum& L) {
    if (L.size() != cube.bands()) {
        throw Error(Errc::DimensionMismatch, "illuminant has " + std::to_string(L.size()) +
                                                 " bands, cube has " + std::to_string(cube.bands()));
    }
}

inline std::vector<std::size_t> usable_bands(const IlluminantSpectrum& L) {
    std::vector<std::size_t> ok;
    for (std::size_t b = 0; b < L.size(); ++b) {
        if (L[b] >= kIlluminantFloor) ok.push_back(b);
    }
    if (ok.empty()) throw Error(Errc::ZeroIlluminantBand, "every illuminant band is below the floor");
    return ok;
}

} // namespace detail

/// Grey-world illuminant: per-band mean over all pixels.
inline IlluminantSpectrum grey_world(const HyperCube& cube) {
    return detail::grey_world_impl(cube, nullptr);
}

/// Grey-world illuminant restricted to water pixels.
inline IlluminantSpectrum grey_world(const HyperCube& cube, const WaterMask& mask) {
    return detail::grey_world_impl(cube, &mask);
}

struct SpecularExpectation {
    RasterImage k_expect;                    ///< E[k(u)], 1 channel
    std::vector<std::size_t> rejected_bands; ///< 0-based bands skipped for L < floor
};

/// E[k(u)] = mean over usable bands of I(u, band) / L(band).
inline SpecularExpectation specular_expectation(const HyperCube& cube, const IlluminantSpectrum& L) {
    detail::require_bands(cube, L);
    const auto usable = detail::usable_bands(L);
    SpecularExpectation out{RasterImage(cube.height(), cube.width(), 1), {}};
    for (std::size_t b = 0; b < L.size(); ++b) {
        if (L[b] < kIlluminantFloor) out.rejected_bands.push_back(b);
    }
    auto k = out.k_expect.data();
    for (std::size_t b : usable) {
        const auto p = cube.plane(b);
        const double inv = 1.0 / L[b];
        for (std::size_t i = 0; i < p.size(); ++i) k[i] += p[i] * inv;
    }
    const double inv_m = 1.0 / static_cast<double>(usable.size());
    for (auto& v : k) v *= inv_m;
    return out;
}

/// gS(u, band) = I(u, band) / L(band) - E[k(u)]; rejected bands are left at 0.
inline SpectralStack shading_reflectance(const HyperCube& cube, const IlluminantSpectrum& L,
                                         const RasterImage& k_expect) {
    detail::require_bands(cube, L);
    if (k_expect.height() != cube.height() || k_expect.width() != cube.width() ||
        k_expect.channels() != 1) {
        throw Error(Errc::DimensionMismatch, "shading_reflectance: k_expect extent differs");
    }
    const auto usable = detail::usable_bands(L);
    SpectralStack gs{cube.height(), cube.width(),
                     std::vector<float>(cube.wavelengths().begin(), cube.wavelengths().end()),
                     std::vector<double>(cube.bands() * cube.pixel_count(), 0.0)};
    const auto k = k_expect.data();
    for (std::size_t b : usable) {
        const auto p = cube.plane(b);
        const double inv = 1.0 / L[b];
        for (std::size_t i = 0; i < p.size(); ++i) gs.at(b, i) = p[i] * inv - k[i];
    }
    return gs;
}

/// Dichromatic forward model: I(u, band) = L(band) gS(u, band) + k(u) L(band).
inline HyperCube compose_dichromatic(const SpectralStack& gs, const RasterImage& k,
                                     const IlluminantSpectrum& L) {
    if (k.height() != gs.height || k.width() != gs.width || k.channels() != 1) {
        throw Error(Errc::DimensionMismatch, "compose_dichromatic: k extent differs from gS");
    }
    if (L.size() != gs.bands() || gs.values.size() != gs.bands() * gs.pixel_count()) {
        throw Error(Errc::DimensionMismatch, "compose_dichromatic: band counts disagree");
    }
    HyperCube cube(gs.height, gs.width, gs.wavelengths);
    for (std::size_t b = 0; b < gs.bands(); ++b) {
        auto p = cube.plane(b);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<float>(L[b] * gs.at(b, i) + k.data()[i] * L[b]);
        }
    }
    return cube;
}

struct DecomposeOptions {
    double stretch_lo = 0.01;
    double stretch_hi = 0.99;
};

struct Decomposition {
    IlluminantSpectrum illuminant;
    RasterImage k_expect;      ///< E[k(u)]
    SpectralStack gs;          ///< g(u)S(u, band) for every band
    RasterImage diffuse_raw;   ///< I_c - E[k] L_c on the RGB bands, signed
    RasterImage specular_raw;  ///< E[k] times the mean RGB illuminant
    RasterImage diffuse;       ///< clamped >= 0 and stretched: G_d training target
    RasterImage specular;      ///< stretched: G_s training target
    std::vector<bool> diffuse_constant;
    bool specular_constant = false;
    std::vector<std::size_t> rejected_bands;
};

/**
 * Closed-form diffuse/specular split of a cube. The raw components satisfy
 * diffuse_raw_c + k_expect * L_c = I_c exactly; the stretched ones are the
 * targets the generators learn.
 */
inline Decomposition decompose(const HyperCube& cube, const BandTriplet& bands = {},
                               const std::optional<WaterMask>& mask = std::nullopt,
                               const DecomposeOptions& opt = {}) {
    check_triplet(cube, bands);
    Decomposition d;
    d.illuminant = mask ? grey_world(cube, *mask) : grey_world(cube);
    auto se = specular_expectation(cube, d.illuminant);
    d.k_expect = std::move(se.k_expect);
    d.rejected_bands = std::move(se.rejected_bands);
    d.gs = shading_reflectance(cube, d.illuminant, d.k_expect);

    const auto idx = bands.as_array();
    const double l_mean =
        (d.illuminant[idx[0] - 1] + d.illuminant[idx[1] - 1] + d.illuminant[idx[2] - 1]) / 3.0;
    d.diffuse_raw = RasterImage(cube.height(), cube.width(), 3);
    d.specular_raw = RasterImage(cube.height(), cube.width(), 1);
    RasterImage diffuse_clamped(cube.height(), cube.width(), 3);
    for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
        const double k = d.k_expect.data()[i];
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t b = idx[c] - 1;
            const double v = static_cast<double>(cube.plane(b)[i]) - k * d.illuminant[b];
            d.diffuse_raw.data()[i * 3 + c] = v;
            diffuse_clamped.data()[i * 3 + c] = std::max(0.0, v);
        }
        d.specular_raw.data()[i] = k * l_mean;
    }
    auto ds = linear_stretch(diffuse_clamped, opt.stretch_lo, opt.stretch_hi);
    auto ss = linear_stretch(d.specular_raw, opt.stretch_lo, opt.stretch_hi);
    d.diffuse = std::move(ds.image);
    d.diffuse_constant = std::move(ds.constant_channel);
    d.specular = std::move(ss.image);
    d.specular_constant = ss.constant_channel.front();
    return d;
}

/**
 * Masked L2 norm of I_c - (diffuse_c + specular * L_c) over the RGB bands,
 * where specular is the per-pixel specular coefficient.
 */
inline double reconstruction_residual(const HyperCube& cube, const RasterImage& diffuse,
                                      const RasterImage& specular, const WaterMask& mask,
                                      const BandTriplet& bands, const IlluminantSpectrum& L) {
    check_triplet(cube, bands);
    detail::require_bands(cube, L);
    if (diffuse.channels() != 3 || specular.channels() != 1 ||
        diffuse.height() != cube.height() || diffuse.width() != cube.width() ||
        !specular.same_extent(diffuse) || mask.height() != cube.height() ||
        mask.width() != cube.width()) {
        throw Error(Errc::DimensionMismatch, "reconstruction_residual: extents disagree");
    }
    const auto idx = bands.as_array();
    double sum = 0.0;
    for (std::size_t i = 0; i < cube.pixel_count(); ++i) {
        if (!mask.water(i)) continue;
        for (std::size_t c = 0; c < 3; ++c) {
            const std::size_t b = idx[c] - 1;
            const double r = static_cast<double>(cube.plane(b)[i]) -
                             (diffuse.data()[i * 3 + c] + specular.data()[i] * L[b]);
            sum += r * r;
        }
    }
    return std::sqrt(sum);
}

/// As above with the illuminant estimated by masked grey world; an empty mask yields 0.
inline double reconstruction_residual(const HyperCube& cube, const RasterImage& diffuse,
                                      const RasterImage& specular, const WaterMask& mask,
                                      const BandTriplet& bands = {}) {
    if (mask.height() != cube.height() || mask.width() != cube.width()) {
        throw Error(Errc::DimensionMismatch, "reconstruction_residual: mask extent differs");
    }
    if (mask.water_count() == 0) return 0.0;
    return reconstruction_residual(cube, diffuse, specular, mask, bands, grey_world(cube, mask));
}

} // namespace dewater
