#include "dewater/objectives.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace dewater;

TEST(LossWeights, PublishedDefaults) {
    const LossWeights w;
    EXPECT_EQ(w.gamma, 30.0);
    EXPECT_EQ(w.sigma, 90.0);
    EXPECT_EQ(w.iota, 100.0);
    EXPECT_EQ(w.tau, 50.0);
    EXPECT_EQ(w.nu, 10.0);
}

TEST(TotalObjective, ZeroAndUnitParts) {
    EXPECT_EQ(total_objective({}).total, 0.0);
    const LossParts ones{1, 1, 1, 1, 1, 1, 1};
    // 1 + 30*2 + 90 + 100 + 50 + 10
    EXPECT_DOUBLE_EQ(total_objective(ones).total, 311.0);
}

TEST(TotalObjective, RejectsNonFinite) {
    LossParts p;
    p.l_t = std::numeric_limits<double>::infinity();
    try {
        total_objective(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonFiniteInput);
    }
    LossWeights w;
    w.nu = -1.0;
    EXPECT_THROW(total_objective({}, w), Error);
}

TEST(DepthLoss, WorkedExample) {
    // d = pred - target = [[0, 0.4], [0, 0]]: |dx| sum 0.4, |dy| sum 0.4, mean over 4 -> 0.2.
    RasterImage pred(2, 2, 1, std::vector<double>{0.0, 0.4, 0.0, 0.0});
    RasterImage target(2, 2, 1, 0.0);
    EXPECT_NEAR(loss_depth_scale_invariant(0.0, pred, target), std::log(0.5) + 0.2, 1e-15);
}

TEST(DepthLoss, LowerBoundForConstantOffset) {
    RasterImage pred(3, 3, 1, 0.7), target(3, 3, 1, 0.2);
    EXPECT_NEAR(loss_depth_scale_invariant(0.0, pred, target), std::log(0.5), 1e-15);
    EXPECT_THROW(loss_depth_scale_invariant(-1.0, pred, target), Error);
}

TEST(MaskedLosses, ZeroIffEqualOnWater) {
    Rng rng(1);
    const auto a = testing_support::random_image(rng, 5, 5, 3);
    auto b = a;
    WaterMask m(5, 5, true);
    m.set(2, 2, false);
    b.at(2, 2, 1) += 0.5; // land only
    EXPECT_EQ(loss_diffuse(a, b, m), 0.0);
    EXPECT_EQ(loss_dewatered(a, b, m), 0.0);
    EXPECT_EQ(loss_radiance_l2(a, b, m), 0.0);
    b.at(1, 1, 0) += 0.1;
    EXPECT_GT(loss_resynthesis(a, b, m), 0.0);
    EXPECT_GT(loss_specular(a, b, m), 0.0);
}

TEST(Adversarial, HandValues) {
    const std::vector<double> half(4, 0.5);
    const auto ns = adversarial_losses(half, half);
    EXPECT_NEAR(ns.disc, 2.0 * std::log(2.0), 1e-15);
    EXPECT_NEAR(ns.gen, std::log(2.0), 1e-15);
    const auto sat = adversarial_losses(half, half, AdversarialForm::Saturating);
    EXPECT_NEAR(sat.gen, -std::log(2.0), 1e-15);
}

TEST(Adversarial, ClampKeepsLossFinite) {
    const std::vector<double> zeros(3, 0.0), ones(3, 1.0);
    const auto r = adversarial_losses(zeros, ones);
    EXPECT_TRUE(std::isfinite(r.disc));
    EXPECT_NEAR(r.disc, -2.0 * std::log(kProbabilityClamp), 1e-6);
    EXPECT_THROW(adversarial_losses({}, ones), Error);
}

TEST(Adversarial, NashIndifferenceAtHalf) {
    // d/dp of the discriminator loss at p_real = p_fake = 0.5 over one sample:
    // -1/p_real for the real term and +1/(1-p_fake) for the fake term cancel.
    const double h = 1e-6;
    auto disc = [](double pr, double pf) {
        return adversarial_losses(std::vector<double>{pr}, std::vector<double>{pf}).disc;
    };
    const double d_real = (disc(0.5 + h, 0.5) - disc(0.5 - h, 0.5)) / (2 * h);
    const double d_fake = (disc(0.5, 0.5 + h) - disc(0.5, 0.5 - h)) / (2 * h);
    EXPECT_NEAR(d_real, -2.0, 1e-6);
    EXPECT_NEAR(d_fake, 2.0, 1e-6);
    EXPECT_NEAR(d_real + d_fake, 0.0, 1e-6);
}
