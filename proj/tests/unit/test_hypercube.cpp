#include "dewater/hypercube.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dewater;
using testing_support::TempDir;

namespace {

HyperCube small_cube(std::uint64_t seed, std::size_t h, std::size_t w, std::size_t b) {
    Rng rng(seed);
    HyperCube c(h, w, linear_wavelengths(b, 400, 1000));
    for (std::size_t k = 0; k < b; ++k)
        for (auto& v : c.plane(k)) v = static_cast<float>(rng.uniform());
    return c;
}

Errc decode_error(const std::vector<char>& bytes) {
    try {
        decode_cube(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    return Errc::InvalidArgument;
}

} // namespace

TEST(HyperCube, WavelengthsMustBeStrictlyMonotonic) {
    EXPECT_NO_THROW(HyperCube(1, 1, {400, 500, 600}));
    EXPECT_NO_THROW(HyperCube(1, 1, {600, 500, 400}));
    try {
        HyperCube(1, 1, {400, 500, 500});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::WavelengthOrder);
    }
    EXPECT_THROW(HyperCube(1, 1, {400, 600, 500}), Error);
}

TEST(HyperCube, RejectsNonFiniteSamples) {
    try {
        HyperCube(1, 2, {1.0f, std::numeric_limits<float>::quiet_NaN()}, {500.0f});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonFiniteInput);
    }
}

TEST(HyperCube, BandSequentialLayout) {
    HyperCube c(2, 3, {450, 550});
    c.at(1, 1, 2) = 7.0f;
    EXPECT_EQ(c.planes()[6 + 5], 7.0f);
}

TEST(Hcub, RoundTripIsBitExact) {
    TempDir dir("hcub");
    const auto c = small_cube(1, 5, 4, 7);
    save_cube(c, dir.path() / "c.hcub");
    EXPECT_EQ(load_cube(dir.path() / "c.hcub"), c);
}

TEST(Hcub, HeaderLayout) {
    const auto bytes = encode_cube(small_cube(2, 2, 3, 4));
    ASSERT_EQ(bytes.size(), 20u + 4u * (2 * 3 * 4 + 4));
    EXPECT_EQ(std::string(bytes.data(), 4), "HCUB");
    EXPECT_EQ(bytes[4], 1);  // version, little-endian
    EXPECT_EQ(bytes[8], 2);  // height
    EXPECT_EQ(bytes[12], 3); // width
    EXPECT_EQ(bytes[16], 4); // bands
}

TEST(Hcub, DecodeErrors) {
    const auto good = encode_cube(small_cube(3, 2, 2, 3));
    EXPECT_EQ(decode_error({'H', 'C'}), Errc::TruncatedFile);
    auto bad_magic = good;
    bad_magic[0] = 'X';
    EXPECT_EQ(decode_error(bad_magic), Errc::BadMagic);
    EXPECT_EQ(decode_error(std::vector<char>(good.begin(), good.begin() + 12)), Errc::TruncatedFile);
    auto v2 = good;
    v2[4] = 2;
    EXPECT_EQ(decode_error(v2), Errc::VersionUnsupported);
    EXPECT_EQ(decode_error(std::vector<char>(good.begin(), good.end() - 1)), Errc::TruncatedFile);
    auto trailing = good;
    trailing.push_back(0);
    EXPECT_EQ(decode_error(trailing), Errc::DecodeError);
}

TEST(Hcub, MissingFileIsIoError) {
    try {
        load_cube("/nonexistent/dir/x.hcub");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::IoError);
    }
}

TEST(ComposeRgb, PicksOneBasedBandsAndClamps) {
    HyperCube c(1, 2, {700, 600, 500, 400});
    for (std::size_t b = 0; b < 4; ++b) {
        c.at(b, 0, 0) = 0.1f * static_cast<float>(b + 1);
        c.at(b, 0, 1) = 2.0f;
    }
    const auto rgb = compose_rgb(c, {4, 2, 1});
    EXPECT_FLOAT_EQ(static_cast<float>(rgb.at(0, 0, 0)), 0.4f);
    EXPECT_FLOAT_EQ(static_cast<float>(rgb.at(0, 0, 1)), 0.2f);
    EXPECT_FLOAT_EQ(static_cast<float>(rgb.at(0, 0, 2)), 0.1f);
    EXPECT_EQ(rgb.at(0, 1, 0), 1.0);
}

TEST(ComposeRgb, BandErrors) {
    HyperCube c(1, 1, {700, 600, 500});
    auto code = [&](BandTriplet t) {
        try {
            compose_rgb(c, t);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::InvalidArgument;
    };
    EXPECT_EQ(code({0, 1, 2}), Errc::BandOutOfRange);
    EXPECT_EQ(code({1, 2, 4}), Errc::BandOutOfRange);
    EXPECT_EQ(code({1, 1, 2}), Errc::BandOutOfRange);
}

TEST(ComposeRgb, DefaultTripletIsRedGreenBlueOnVnirOrder) {
    const auto c = make_synthetic_cube(5, 4, 4);
    EXPECT_EQ(c.bands(), 63u);
    EXPECT_NEAR(c.wavelengths()[32], 1010.0 - 32 * 610.0 / 62, 1e-3);
    EXPECT_GT(c.wavelengths()[32], 620.0); // red
    EXPECT_GT(c.wavelengths()[44], 495.0); // green
    EXPECT_LT(c.wavelengths()[44], 620.0);
    EXPECT_LT(c.wavelengths()[55], 495.0); // blue
}

TEST(WaterMask, NirThreshold) {
    HyperCube c(1, 3, {860});
    c.at(0, 0, 0) = 0.05f;
    c.at(0, 0, 1) = 0.1f;
    c.at(0, 0, 2) = 0.3f;
    const auto m = infer_water_mask(c, 1);
    EXPECT_TRUE(m.water(0));
    EXPECT_FALSE(m.water(1)); // strict
    EXPECT_FALSE(m.water(2));
}

TEST(WaterMask, SyntheticCoastHasBothClasses) {
    const auto c = make_synthetic_cube(9, 32, 48);
    const auto nir = nearest_band(c, kDefaultNirWavelength);
    EXPECT_NEAR(c.wavelengths()[nir - 1], 860.0, 5.0);
    const auto m = infer_water_mask(c, nir);
    EXPECT_GT(m.water_count(), 0u);
    EXPECT_LT(m.water_count(), m.pixel_count());
}

TEST(Synthetic, Deterministic) {
    EXPECT_EQ(make_synthetic_cube(4, 8, 8), make_synthetic_cube(4, 8, 8));
    EXPECT_FALSE(make_synthetic_cube(4, 8, 8) == make_synthetic_cube(5, 8, 8));
}
