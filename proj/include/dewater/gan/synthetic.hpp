#pragma once

#include "dewater/gan/tensor.hpp"
#include "dewater/photometry.hpp"
#include "dewater/random.hpp"
#include "dewater/watercolumn.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace dewater::gan {

/// One synthetic training tuple; x is the observed underwater RGB.
struct SyntheticSample {
    RasterImage x;
    RasterImage diffuse;      ///< 3 channels, >= 0
    RasterImage specular;     ///< 1 channel
    RasterImage range;        ///< 1 channel, in [0, 2]
    TransmissionMap transmission;
    RasterImage J;
    RasterImage N;
    WaterMask mask;
    Veiling veiling{};
};

inline constexpr double kSyntheticMaxRange = 2.0;
inline constexpr double kMinWaterFraction = 0.3;
inline constexpr double kMaxWaterFraction = 0.9;

namespace detail {

/// Voronoi patches of flat colours in [0.05, 0.95].
inline RasterImage seafloor(Rng& rng, std::size_t size) {
    const std::size_t k = 4 + rng.index(5);
    std::vector<std::array<double, 5>> seeds(k);
    for (auto& s : seeds) {
        s[0] = rng.uniform(0.0, static_cast<double>(size));
        s[1] = rng.uniform(0.0, static_cast<double>(size));
        const double base = rng.uniform(0.2, 0.8);
        for (std::size_t c = 2; c < 5; ++c) s[c] = std::clamp(base + rng.uniform(-0.15, 0.15), 0.05, 0.95);
    }
    RasterImage J(size, size, 3);
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            std::size_t best = 0;
            double bd = 1e300;
            for (std::size_t i = 0; i < k; ++i) {
                const double dy = seeds[i][0] - static_cast<double>(y), dx = seeds[i][1] - static_cast<double>(x);
                if (dy * dy + dx * dx < bd) {
                    bd = dy * dy + dx * dx;
                    best = i;
                }
            }
            for (std::size_t c = 0; c < 3; ++c) J.at(y, x, c) = seeds[best][c + 2];
        }
    return J;
}

/// Land disks on open water, redrawn until the water fraction is in range.
inline WaterMask land_blobs(Rng& rng, std::size_t size) {
    const auto s = static_cast<double>(size);
    for (;;) {
        WaterMask m(size, size, true);
        const std::size_t blobs = 1 + rng.index(3);
        for (std::size_t b = 0; b < blobs; ++b) {
            const double cy = rng.uniform(0.0, s), cx = rng.uniform(0.0, s);
            const double r = rng.uniform(0.1, 0.35) * s;
            for (std::size_t y = 0; y < size; ++y)
                for (std::size_t x = 0; x < size; ++x) {
                    const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                    if (dy * dy + dx * dx <= r * r) m.set(y, x, false);
                }
        }
        const double frac = static_cast<double>(m.water_count()) / static_cast<double>(m.pixel_count());
        if (frac >= kMinWaterFraction && frac <= kMaxWaterFraction) return m;
    }
}

/// Bilinear blend of four corner ranges in [0, max].
inline RasterImage range_field(Rng& rng, std::size_t size) {
    double c[4];
    for (auto& v : c) v = rng.uniform(0.0, kSyntheticMaxRange);
    RasterImage r(size, size, 1);
    const double d = size > 1 ? static_cast<double>(size - 1) : 1.0;
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double fy = static_cast<double>(y) / d, fx = static_cast<double>(x) / d;
            r.at(y, x) = (1 - fy) * ((1 - fx) * c[0] + fx * c[1]) + fy * ((1 - fx) * c[2] + fx * c[3]);
        }
    return r;
}

} // namespace detail

/**
 * Synthetic underwater scenes: seafloor J, range r -> T (alpha 0.9), V by
 * grey world over a noisy water-colour field, N = J T + V (1 - T), and
 * dichromatic targets from decomposing N.
 */
inline std::vector<SyntheticSample> make_synthetic_batch(std::uint64_t seed, std::size_t n, std::size_t size) {
    if (size != 16 && size != 32 && size != 64) {
        throw Error(Errc::InvalidArgument, "synthetic image size must be 16, 32 or 64");
    }
    Rng rng(seed);
    std::vector<SyntheticSample> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SyntheticSample s;
        s.J = detail::seafloor(rng, size);
        s.mask = detail::land_blobs(rng, size);
        s.range = detail::range_field(rng, size);
        s.transmission = transmission_from_range(s.range, kDefaultAttenuation);

        const std::array<double, 3> tint{rng.uniform(0.05, 0.2), rng.uniform(0.3, 0.5), rng.uniform(0.4, 0.6)};
        RasterImage water(size, size, 3);
        for (std::size_t p = 0; p < water.pixel_count(); ++p)
            for (std::size_t c = 0; c < 3; ++c) water.data()[p * 3 + c] = tint[c] + rng.uniform(-0.03, 0.03);
        s.veiling = veiling_grey_world(water, s.mask);

        s.N = synthesize_underwater(s.J, s.transmission, s.veiling, s.mask);
        s.x = s.N;

        const auto dec = decompose(cube_from_rgb(s.x), BandTriplet{1, 2, 3}, s.mask);
        s.diffuse = clamp01(dec.diffuse_raw);
        s.specular = dec.specular_raw;
        out.push_back(std::move(s));
    }
    return out;
}

/// A batch laid out as NCHW tensors (constants, no grad).
struct TensorBatch {
    Tensor x, diffuse, specular, transmission, J, N;
    Tensor mask;    ///< (B,1,H,W), 1 on water
    Tensor veiling; ///< (B,3,1,1)
};

inline void raster_into(const RasterImage& img, std::vector<double>& dst, std::size_t offset) {
    const std::size_t plane = img.pixel_count(), nc = img.channels();
    for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < nc; ++c) dst[offset + c * plane + p] = img.data()[p * nc + c];
}

/// Sample b of an NCHW tensor as a raster.
inline RasterImage tensor_to_raster(const Tensor& t, int b) {
    const auto C = static_cast<std::size_t>(t.dim(1)), H = static_cast<std::size_t>(t.dim(2)),
               W = static_cast<std::size_t>(t.dim(3));
    RasterImage img(H, W, C);
    const std::size_t plane = H * W, off = static_cast<std::size_t>(b) * C * plane;
    for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < C; ++c) img.data()[p * C + c] = t.value()[off + c * plane + p];
    return img;
}

inline TensorBatch to_tensors(std::span<const SyntheticSample* const> samples) {
    if (samples.empty()) throw Error(Errc::InvalidArgument, "empty batch");
    const int B = static_cast<int>(samples.size());
    const int H = static_cast<int>(samples[0]->x.height()), W = static_cast<int>(samples[0]->x.width());
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    auto stack = [&](auto get, int C) {
        std::vector<double> v(static_cast<std::size_t>(B) * C * plane);
        for (int b = 0; b < B; ++b) {
            const RasterImage& img = get(*samples[static_cast<std::size_t>(b)]);
            if (static_cast<int>(img.height()) != H || static_cast<int>(img.width()) != W ||
                static_cast<int>(img.channels()) != C) {
                throw Error(Errc::ShapeMismatch, "batch samples differ in shape");
            }
            raster_into(img, v, static_cast<std::size_t>(b) * C * plane);
        }
        return Tensor::constant({B, C, H, W}, std::move(v));
    };
    TensorBatch t;
    t.x = stack([](const SyntheticSample& s) -> const RasterImage& { return s.x; }, 3);
    t.diffuse = stack([](const SyntheticSample& s) -> const RasterImage& { return s.diffuse; }, 3);
    t.specular = stack([](const SyntheticSample& s) -> const RasterImage& { return s.specular; }, 1);
    t.transmission = stack([](const SyntheticSample& s) -> const RasterImage& { return s.transmission.image(); }, 1);
    t.J = stack([](const SyntheticSample& s) -> const RasterImage& { return s.J; }, 3);
    t.N = stack([](const SyntheticSample& s) -> const RasterImage& { return s.N; }, 3);

    std::vector<double> m(static_cast<std::size_t>(B) * plane), v(static_cast<std::size_t>(B) * 3);
    for (int b = 0; b < B; ++b) {
        const auto& s = *samples[static_cast<std::size_t>(b)];
        for (std::size_t p = 0; p < plane; ++p) m[b * plane + p] = s.mask.water(p) ? 1.0 : 0.0;
        for (std::size_t c = 0; c < 3; ++c) v[b * 3 + c] = s.veiling[c];
    }
    t.mask = Tensor::constant({B, 1, H, W}, std::move(m));
    t.veiling = Tensor::constant({B, 3, 1, 1}, std::move(v));
    return t;
}

} // namespace dewater::gan
