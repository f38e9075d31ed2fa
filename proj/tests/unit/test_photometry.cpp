#include "dewater/photometry.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dewater;

namespace {

HyperCube random_cube(Rng& rng, std::size_t h, std::size_t w, std::size_t b) {
    HyperCube c(h, w, linear_wavelengths(b, 900, 400));
    for (std::size_t k = 0; k < b; ++k)
        for (auto& v : c.plane(k)) v = static_cast<float>(rng.uniform(0.01, 1.0));
    return c;
}

} // namespace

TEST(GreyWorld, IsPerBandMean) {
    Rng rng(1);
    const auto c = random_cube(rng, 3, 4, 5);
    const auto L = grey_world(c);
    for (std::size_t b = 0; b < 5; ++b) {
        double s = 0.0;
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 4; ++x) s += c.at(b, y, x);
        EXPECT_NEAR(L[b], s / 12.0, 1e-12);
    }
}

TEST(GreyWorld, MaskedMeanAndEmptyMask) {
    HyperCube c(1, 2, {500});
    c.at(0, 0, 0) = 0.2f;
    c.at(0, 0, 1) = 0.8f;
    WaterMask m(1, 2, std::vector<std::uint8_t>{0, 1});
    EXPECT_NEAR(grey_world(c, m)[0], 0.8, 1e-7);
    try {
        grey_world(c, WaterMask(1, 2, false));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyMask);
    }
}

TEST(SpecularExpectation, ScalarOracle) {
    Rng rng(2);
    const auto c = random_cube(rng, 4, 4, 6);
    const auto L = grey_world(c);
    const auto se = specular_expectation(c, L);
    EXPECT_TRUE(se.rejected_bands.empty());
    for (std::size_t i = 0; i < c.pixel_count(); ++i) {
        double k = 0.0;
        for (std::size_t b = 0; b < 6; ++b) k += static_cast<double>(c.plane(b)[i]) / L[b];
        EXPECT_NEAR(se.k_expect.data()[i], k / 6.0, 1e-12);
    }
}

TEST(SpecularExpectation, RejectsDarkBands) {
    Rng rng(3);
    auto c = random_cube(rng, 2, 2, 4);
    for (auto& v : c.plane(2)) v = 0.0f;
    const auto L = grey_world(c);
    const auto se = specular_expectation(c, L);
    ASSERT_EQ(se.rejected_bands, std::vector<std::size_t>{2});
    const auto gs = shading_reflectance(c, L, se.k_expect);
    for (std::size_t i = 0; i < c.pixel_count(); ++i) EXPECT_EQ(gs.at(2, i), 0.0);
}

TEST(SpecularExpectation, AllBandsDarkIsError) {
    HyperCube c(1, 1, {500, 400});
    try {
        specular_expectation(c, grey_world(c));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ZeroIlluminantBand);
    }
}

TEST(ShadingReflectance, ScalarOracleAndZeroBandMean) {
    Rng rng(4);
    const auto c = random_cube(rng, 3, 3, 5);
    const auto L = grey_world(c);
    const auto k = specular_expectation(c, L).k_expect;
    const auto gs = shading_reflectance(c, L, k);
    for (std::size_t i = 0; i < c.pixel_count(); ++i) {
        double mean = 0.0;
        for (std::size_t b = 0; b < 5; ++b) {
            const double expect = static_cast<double>(c.plane(b)[i]) / L[b] - k.data()[i];
            EXPECT_NEAR(gs.at(b, i), expect, 1e-12);
            mean += gs.at(b, i) / 5.0;
        }
        EXPECT_NEAR(mean, 0.0, 1e-12);
    }
}

TEST(ComposeDichromatic, ReconstructsCube) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_cube(rng, 1 + rng.index(6), 1 + rng.index(6), 2 + rng.index(10));
        const auto L = grey_world(c);
        const auto k = specular_expectation(c, L).k_expect;
        const auto back = compose_dichromatic(shading_reflectance(c, L, k), k, L);
        for (std::size_t i = 0; i < c.planes().size(); ++i) EXPECT_NEAR(back.planes()[i], c.planes()[i], 1e-6);
    }
}

TEST(ComposeDichromatic, ZeroShadingGivesPureSpecular) {
    // gS = 0 everywhere: I = k L.
    SpectralStack gs{1, 2, {600, 500, 400}, std::vector<double>(6, 0.0)};
    RasterImage k(1, 2, 1, std::vector<double>{0.5, 2.0});
    IlluminantSpectrum L{{0.2, 0.4, 0.8}};
    const auto c = compose_dichromatic(gs, k, L);
    for (std::size_t b = 0; b < 3; ++b) {
        EXPECT_FLOAT_EQ(c.at(b, 0, 0), static_cast<float>(0.5 * L[b]));
        EXPECT_FLOAT_EQ(c.at(b, 0, 1), static_cast<float>(2.0 * L[b]));
    }
}

TEST(Decompose, RawPartsSatisfyDichromaticIdentity) {
    const auto c = make_synthetic_cube(6, 12, 12);
    const auto d = decompose(c);
    const auto idx = BandTriplet{}.as_array();
    for (std::size_t i = 0; i < c.pixel_count(); ++i)
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const std::size_t b = idx[ch] - 1;
            EXPECT_NEAR(d.diffuse_raw.data()[i * 3 + ch] + d.k_expect.data()[i] * d.illuminant[b],
                        c.plane(b)[i], 1e-9);
        }
    EXPECT_NEAR(reconstruction_residual(c, d.diffuse_raw, d.k_expect, WaterMask(12, 12), BandTriplet{}, d.illuminant),
                0.0, 1e-9);
}

TEST(Decompose, TargetsAreInUnitRange) {
    const auto d = decompose(make_synthetic_cube(7, 16, 16));
    for (double v : d.diffuse.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    for (double v : d.specular.data()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Decompose, MaskedIlluminantUsesWaterOnly) {
    const auto c = make_synthetic_cube(8, 16, 16);
    const auto m = infer_water_mask(c, nearest_band(c, kDefaultNirWavelength));
    const auto d = decompose(c, {}, m);
    const auto L = grey_world(c, m);
    for (std::size_t b = 0; b < c.bands(); ++b) EXPECT_DOUBLE_EQ(d.illuminant[b], L[b]);
}

TEST(ReconstructionResidual, OracleAndEmptyMask) {
    HyperCube c(1, 2, {600, 500, 400});
    for (std::size_t b = 0; b < 3; ++b) {
        c.at(b, 0, 0) = 0.5f;
        c.at(b, 0, 1) = 0.25f;
    }
    RasterImage diffuse(1, 2, 3, 0.1), spec(1, 2, 1, 0.0);
    IlluminantSpectrum L{{1.0, 1.0, 1.0}};
    WaterMask m(1, 2, std::vector<std::uint8_t>{1, 0});
    // Only pixel 0: three residuals of 0.4.
    EXPECT_NEAR(reconstruction_residual(c, diffuse, spec, m, {1, 2, 3}, L), std::sqrt(3 * 0.16), 1e-7);
    EXPECT_EQ(reconstruction_residual(c, diffuse, spec, WaterMask(1, 2, false), {1, 2, 3}), 0.0);
}

TEST(CubeFromRgb, KeepsChannelOrder) {
    RasterImage rgb(1, 1, 3, std::vector<double>{0.1, 0.2, 0.3});
    const auto c = cube_from_rgb(rgb);
    EXPECT_EQ(c.bands(), 3u);
    EXPECT_FLOAT_EQ(c.at(0, 0, 0), 0.1f);
    EXPECT_FLOAT_EQ(c.at(2, 0, 0), 0.3f);
}
