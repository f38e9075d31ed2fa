#include "dewater/gan/nets.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dewater;
using namespace dewater::gan;
using testing_support::grad_check;
using testing_support::random_tensor;

TEST(Generator, ParameterCountsMatchHandCount) {
    // Width 16, depth 3, 3 input channels:
    //   enc0 3->16 (3x3): 448, enc1 16->32 (3x3 s2): 4640, enc2 32->64 (3x3 s2): 18496,
    //   dec1 (64+32)->32: 27680, dec0 (32+16)->16: 6928, head 16->out (1x1): 17*out.
    EXPECT_EQ(UNetGenerator(GeneratorSpec::for_kind(GeneratorKind::Gd), 1).parameter_count(), 58192u + 51u);
    EXPECT_EQ(UNetGenerator(GeneratorSpec::for_kind(GeneratorKind::Gj), 1).parameter_count(), 58192u + 51u);
    EXPECT_EQ(UNetGenerator(GeneratorSpec::for_kind(GeneratorKind::Gs), 1).parameter_count(), 58192u + 17u);
    EXPECT_EQ(UNetGenerator(GeneratorSpec::for_kind(GeneratorKind::Gt), 1).parameter_count(), 58192u + 17u);
    for (int depth : {1, 2, 4}) {
        auto s = GeneratorSpec::for_kind(GeneratorKind::Gd);
        s.depth = depth;
        s.base_width = 4;
        EXPECT_EQ(UNetGenerator(s, 1).parameter_count(), UNetGenerator::expected_parameter_count(s));
    }
}

TEST(Generator, ChannelsAndSquashing) {
    EXPECT_EQ(GeneratorSpec::for_kind(GeneratorKind::Gd).out_channels, 3);
    EXPECT_EQ(GeneratorSpec::for_kind(GeneratorKind::Gs).out_channels, 1);
    EXPECT_EQ(GeneratorSpec::for_kind(GeneratorKind::Gt).out_channels, 1);
    EXPECT_EQ(GeneratorSpec::for_kind(GeneratorKind::Gj).out_channels, 3);
    EXPECT_TRUE(GeneratorSpec::for_kind(GeneratorKind::Gt).squash);
    EXPECT_FALSE(GeneratorSpec::for_kind(GeneratorKind::Gj).squash);
}

TEST(Generator, OutputShapeAndRange) {
    dewater::Rng rng(1);
    const auto x = random_tensor(rng, {2, 3, 32, 32}, -3, 3, false);
    const UNetGenerator gt(GeneratorSpec::for_kind(GeneratorKind::Gt), 5);
    const auto y = gt.forward(x);
    EXPECT_EQ(y.shape(), (Shape{2, 1, 32, 32}));
    for (double v : y.value()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    const UNetGenerator gd(GeneratorSpec::for_kind(GeneratorKind::Gd), 5);
    EXPECT_EQ(gd.forward(x).shape(), (Shape{2, 3, 32, 32}));
    EXPECT_THROW(gd.forward(Tensor::constant({1, 3, 30, 30}, 0.0)), Error);
}

TEST(Generator, SeedDeterminesParameters) {
    const auto spec = GeneratorSpec::for_kind(GeneratorKind::Gs);
    UNetGenerator a(spec, 42), b(spec, 42), c(spec, 43);
    bool differs = false;
    for (std::size_t i = 0; i < a.parameters().size(); ++i) {
        const auto va = a.parameters()[i].tensor.value(), vb = b.parameters()[i].tensor.value();
        EXPECT_TRUE(std::equal(va.begin(), va.end(), vb.begin()));
        const auto vc = c.parameters()[i].tensor.value();
        differs |= !std::equal(va.begin(), va.end(), vc.begin());
    }
    EXPECT_TRUE(differs);
}

TEST(Generator, InitWithinFanInBound) {
    UNetGenerator g(GeneratorSpec::for_kind(GeneratorKind::Gd), 3);
    const auto& w = g.parameters()[0]; // enc0 weight, fan-in 27
    EXPECT_EQ(w.name, "Gd.enc0.weight");
    for (double v : w.tensor.value()) EXPECT_LE(std::abs(v), 1.0 / std::sqrt(27.0));
}

TEST(Generator, GradientCheckSmall) {
    auto spec = GeneratorSpec::for_kind(GeneratorKind::Gs);
    spec.base_width = 3;
    UNetGenerator g(spec, 9);
    dewater::Rng rng(2);
    auto x = random_tensor(rng, {1, 3, 8, 8}, -1, 1);
    std::vector<Tensor> inputs{x};
    for (auto& p : g.parameters()) inputs.push_back(p.tensor);
    const auto r = grad_check([&] { return testing_support::weighted_sum(g.forward(x)); }, inputs, 1e-3, 7);
    EXPECT_LE(r.rel_error, 1e-3);
}

TEST(Discriminator, OutputIsProbabilityPerImage) {
    const AttentionDiscriminator d({}, 1);
    dewater::Rng rng(3);
    const auto x = random_tensor(rng, {3, 3, 32, 32}, 0, 1, false);
    const auto y = random_tensor(rng, {3, 3, 32, 32}, 0, 1, false);
    const auto p = d.forward(x, y);
    EXPECT_EQ(p.shape(), (Shape{3, 1, 1, 1}));
    for (double v : p.value()) {
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    EXPECT_EQ(d.tokens(), 64);
}

TEST(Discriminator, ImageSizeMustDivideByPatch) {
    DiscriminatorSpec s;
    s.image_size = 30;
    try {
        AttentionDiscriminator d(s, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::ShapeMismatch);
    }
    EXPECT_THROW(AttentionDiscriminator({}, 1).forward(Tensor::constant({1, 3, 16, 16}, 0.0),
                                                       Tensor::constant({1, 3, 16, 16}, 0.0)),
                 Error);
}

TEST(Discriminator, PermutingPatchesChangesOutput) {
    const AttentionDiscriminator d({}, 4);
    dewater::Rng rng(5);
    const auto x = random_tensor(rng, {1, 3, 32, 32}, 0, 1, false);
    auto y = random_tensor(rng, {1, 3, 32, 32}, 0, 1, false);
    const double before = d.forward(x, y).item();
    // Swap the top-left and bottom-right 4x4 patches of the candidate.
    auto v = y.value();
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                std::swap(v[static_cast<std::size_t>(c * 1024 + i * 32 + j)],
                          v[static_cast<std::size_t>(c * 1024 + (28 + i) * 32 + 28 + j)]);
    EXPECT_NE(d.forward(x, y).item(), before);
}

TEST(Discriminator, GradientCheck) {
    DiscriminatorSpec s;
    s.image_size = 8;
    s.dim = 8;
    s.mlp_hidden = 12;
    const AttentionDiscriminator d(s, 6);
    dewater::Rng rng(7);
    auto x = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
    auto y = random_tensor(rng, {2, 3, 8, 8}, 0, 1);
    std::vector<Tensor> inputs{x, y};
    for (const auto& p : d.parameters()) inputs.push_back(p.tensor);
    const auto r = grad_check([&] { return bce_with_clamp(d.forward(x, y), 1.0); }, inputs, 1e-3);
    EXPECT_LE(r.rel_error, 1e-3);
}

TEST(Adam, FirstStepMovesByLearningRate) {
    // With bias correction the first update is lr * g / (|g| + eps) ~ lr * sign(g).
    struct One : Module {
        Tensor p;
        One() { p = add_zero_param("p", {1, 1, 1, 2}); }
    } m;
    m.p.value()[0] = 1.0;
    m.p.value()[1] = -1.0;
    sum(mul(m.p, Tensor::constant({1, 1, 1, 2}, {3.0, -0.5}))).backward();
    Adam opt(m);
    opt.step();
    EXPECT_NEAR(m.p.value()[0], 1.0 - 2e-4, 1e-10);
    EXPECT_NEAR(m.p.value()[1], -1.0 + 2e-4, 1e-10);
    EXPECT_EQ(opt.config().beta1, 0.5);
    EXPECT_EQ(opt.config().beta2, 0.999);
}

TEST(Adam, SecondStepOracle) {
    struct One : Module {
        Tensor p;
        One() { p = add_zero_param("p", {1, 1, 1, 1}); }
    } m;
    Adam opt(m, {0.1, 0.5, 0.999, 1e-8});
    const double g1 = 2.0, g2 = -1.0;
    m.p.grad_mut()[0] = g1;
    opt.step();
    m.p.grad_mut()[0] = g2;
    opt.step();
    double m1 = 0.5 * g1, v1 = 0.001 * g1 * g1;
    double p = -0.1 * (m1 / 0.5) / (std::sqrt(v1 / 0.001) + 1e-8);
    const double m2 = 0.5 * m1 + 0.5 * g2, v2 = 0.999 * v1 + 0.001 * g2 * g2;
    p -= 0.1 * (m2 / (1 - 0.25)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
    EXPECT_NEAR(m.p.value()[0], p, 1e-12);
}
