#include "dewater/watercolumn.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dewater;

TEST(Transmission, ExponentialOfRange) {
    RasterImage r(1, 4, 1, std::vector<double>{0.0, 0.5, 1.0, 2.0});
    const auto T = transmission_from_range(r);
    EXPECT_EQ(T.at(0, 0), 1.0);
    EXPECT_NEAR(T.at(1, 0), std::exp(-0.45), 1e-15);
    EXPECT_NEAR(T.at(2, 0), std::exp(-0.9), 1e-15);
    EXPECT_NEAR(T.at(3, 0), std::exp(-1.8), 1e-15);
}

TEST(Transmission, ClampedToFloor) {
    RasterImage r(1, 1, 1, 100.0);
    EXPECT_EQ(transmission_from_range(r).at(0, 0), kTransmissionFloor);
    const TransmissionMap t(RasterImage(1, 2, 1, std::vector<double>{-1.0, 3.0}));
    EXPECT_EQ(t.at(0, 0), kTransmissionFloor);
    EXPECT_EQ(t.at(1, 0), 1.0);
}

TEST(Transmission, PerChannelAttenuation) {
    RasterImage r(1, 1, 1, 1.0);
    const auto T = transmission_from_range(r, std::array<double, 3>{0.1, 0.5, 1.0});
    EXPECT_EQ(T.channels(), 3u);
    EXPECT_NEAR(T.at(0, 2), std::exp(-1.0), 1e-15);
}

TEST(Transmission, Errors) {
    RasterImage r(1, 2, 1, std::vector<double>{0.5, -0.1});
    try {
        transmission_from_range(r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NegativeRange);
    }
    RasterImage nan(1, 1, 1, std::numeric_limits<double>::quiet_NaN());
    EXPECT_THROW(transmission_from_range(nan), Error);
    EXPECT_THROW(transmission_from_range(RasterImage(1, 1, 1), 0.0), Error);
}

TEST(Veiling, GreyWorldOverWater) {
    RasterImage img(1, 3, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        img.at(0, 0, c) = 0.2;
        img.at(0, 1, c) = 0.4;
        img.at(0, 2, c) = 9.0;
    }
    const WaterMask m(1, 3, std::vector<std::uint8_t>{1, 1, 0});
    for (double v : veiling_grey_world(img, m)) EXPECT_NEAR(v, 0.3, 1e-15);
    try {
        veiling_grey_world(img, WaterMask(1, 3, false));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyMask);
    }
}

TEST(Uifm, SynthesizeFormulaAndLandPassThrough) {
    RasterImage J(1, 2, 3, 0.8);
    const TransmissionMap T(RasterImage(1, 2, 1, 0.25));
    const Veiling V{0.1, 0.3, 0.5};
    const WaterMask m(1, 2, std::vector<std::uint8_t>{1, 0});
    const auto N = synthesize_underwater(J, T, V, m);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_NEAR(N.at(0, 0, c), 0.8 * 0.25 + V[c] * 0.75, 1e-15);
        EXPECT_EQ(N.at(0, 1, c), 0.8);
    }
}

TEST(Uifm, FullTransmissionIsIdentity) {
    Rng rng(1);
    const auto J = testing_support::random_image(rng, 4, 4, 3);
    const TransmissionMap T(RasterImage(4, 4, 1, 1.0));
    EXPECT_EQ(synthesize_underwater(J, T, {0.2, 0.2, 0.2}, WaterMask(4, 4)), J);
}

TEST(Uifm, RoundTripInMemory) {
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto J = testing_support::random_image(rng, 6, 5, 3, 0.05, 0.95);
        const auto r = testing_support::random_image(rng, 6, 5, 1, 0.0, 2.0);
        const Veiling V{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
        const auto m = testing_support::random_mask(rng, 6, 5);
        const auto T = transmission_from_range(r);
        const auto back = dewater::dewater(synthesize_underwater(J, T, V, m), T, V, m);
        for (std::size_t i = 0; i < J.size(); ++i) EXPECT_NEAR(back.data()[i], J.data()[i], 1e-12);
    }
}

TEST(Uifm, ShapeErrors) {
    const RasterImage grey(2, 2, 1);
    const TransmissionMap T(RasterImage(2, 2, 1, 0.5));
    EXPECT_THROW(synthesize_underwater(grey, T, {}, WaterMask(2, 2)), Error);
    EXPECT_THROW(dewater::dewater(RasterImage(2, 3, 3), T, {}, WaterMask(2, 3)), Error);
    EXPECT_THROW(dewater::dewater(RasterImage(2, 2, 3), T, {}, WaterMask(3, 2)), Error);
}
