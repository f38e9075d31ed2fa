#pragma once

#include "dewater/imagecore.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <string>

namespace dewater {

/// Weights of the combined generator objective. Defaults are the published training values.
struct LossWeights {
    double gamma = 30.0;  ///< diffuse + specular terms
    double sigma = 90.0;  ///< dichromatic reconstruction
    double iota = 100.0;  ///< dewatered radiance
    double tau = 50.0;    ///< scale-invariant transmission
    double nu = 10.0;     ///< re-synthesised underwater image

    [[nodiscard]] bool valid() const noexcept {
        for (double w : {gamma, sigma, iota, tau, nu}) {
            if (!std::isfinite(w) || w < 0.0) return false;
        }
        return true;
    }
};

/// Individual loss terms before weighting.
struct LossParts {
    double l_gd = 0.0;
    double l_gs = 0.0;
    double l_r = 0.0;
    double l_gj = 0.0;
    double l_t = 0.0;
    double l_n = 0.0;
    double l_adv = 0.0;
};

struct LossReport {
    double l_gd = 0.0;
    double l_gs = 0.0;
    double l_r = 0.0;
    double l_gj = 0.0;
    double l_t = 0.0;
    double l_n = 0.0;
    double l_adv = 0.0;
    double total = 0.0;
};

inline double loss_diffuse(const RasterImage& target, const RasterImage& pred, const WaterMask& m) {
    return masked_mean_abs(target, pred, m);
}

inline double loss_specular(const RasterImage& target, const RasterImage& pred, const WaterMask& m) {
    return masked_mean_abs(target, pred, m);
}

/// Masked L2 norm between the observed RGB radiance and G_d + G_s.
inline double loss_radiance_l2(const RasterImage& cube_rgb, const RasterImage& pred_sum,
                               const WaterMask& m) {
    return masked_l2_norm(cube_rgb, pred_sum, m);
}

/// The masked L1 transmission error t fed into the scale-invariant loss.
inline double loss_transmission(const RasterImage& target, const RasterImage& pred, const WaterMask& m) {
    return masked_mean_abs(target, pred, m);
}

/// Mean over pixels and channels of |dx d| + |dy d|, forward differences, zero past the border.
inline double mean_gradient_l1(const RasterImage& d) {
    const std::size_t h = d.height(), w = d.width(), nc = d.channels();
    if (d.empty()) return 0.0;
    double sum = 0.0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < nc; ++c) {
                const double v = d.at(y, x, c);
                if (x + 1 < w) sum += std::abs(d.at(y, x + 1, c) - v);
                if (y + 1 < h) sum += std::abs(d.at(y + 1, x, c) - v);
            }
    return sum / static_cast<double>(d.size());
}

/**
 * log(t + 0.5) + mean(|dx d| + |dy d|) with d = pred - target.
 *
 * The gradient operands are read as forward differences of the error map;
 * this is the usual form of the scale-invariant depth loss it comes from.
 */
inline double loss_depth_scale_invariant(double t, const RasterImage& pred_T, const RasterImage& target_T) {
    require_same_shape(pred_T, target_T, "loss_depth_scale_invariant");
    if (!(t >= 0.0)) throw Error(Errc::InvalidArgument, "transmission L1 value must be >= 0");
    RasterImage d = pred_T;
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] -= target_T.data()[i];
    return std::log(t + 0.5) + mean_gradient_l1(d);
}

inline double loss_dewatered(const RasterImage& target_J, const RasterImage& pred_J, const WaterMask& m) {
    return masked_mean_abs(target_J, pred_J, m);
}

inline double loss_resynthesis(const RasterImage& n_real, const RasterImage& n_fake, const WaterMask& m) {
    return masked_mean_abs(n_real, n_fake, m);
}

inline constexpr double kProbabilityClamp = 1e-7;

enum class AdversarialForm {
    NonSaturating, ///< generator minimises -log D(fake)
    Saturating,    ///< generator minimises log(1 - D(fake)), the literal min-max term
};

struct AdversarialLosses {
    double gen = 0.0;
    double disc = 0.0;
};

/// Cross-entropy adversarial terms over discriminator probability maps.
inline AdversarialLosses adversarial_losses(std::span<const double> d_real, std::span<const double> d_fake,
                                            AdversarialForm form = AdversarialForm::NonSaturating) {
    if (d_real.empty() || d_fake.empty()) {
        throw Error(Errc::InvalidArgument, "adversarial_losses: empty probability map");
    }
    auto clampp = [](double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); };
    double log_real = 0.0, log_fake = 0.0, log_one_minus_fake = 0.0;
    for (double p : d_real) log_real += std::log(clampp(p));
    for (double p : d_fake) {
        log_fake += std::log(clampp(p));
        log_one_minus_fake += std::log(1.0 - clampp(p));
    }
    const double nr = static_cast<double>(d_real.size());
    const double nf = static_cast<double>(d_fake.size());
    AdversarialLosses out;
    out.disc = -log_real / nr - log_one_minus_fake / nf;
    out.gen = form == AdversarialForm::NonSaturating ? -log_fake / nf : log_one_minus_fake / nf;
    return out;
}

/// Weighted total: l_adv + gamma (l_gs + l_gd) + sigma l_r + iota l_gj + tau l_t + nu l_n.
inline LossReport total_objective(const LossParts& p, const LossWeights& w = {}) {
    for (double v : {p.l_gd, p.l_gs, p.l_r, p.l_gj, p.l_t, p.l_n, p.l_adv}) {
        if (!std::isfinite(v)) throw Error(Errc::NonFiniteInput, "loss part is not finite");
    }
    if (!w.valid()) throw Error(Errc::NonFiniteInput, "loss weights must be finite and >= 0");
    LossReport r{p.l_gd, p.l_gs, p.l_r, p.l_gj, p.l_t, p.l_n, p.l_adv, 0.0};
    r.total = p.l_adv + w.gamma * (p.l_gs + p.l_gd) + w.sigma * p.l_r + w.iota * p.l_gj +
              w.tau * p.l_t + w.nu * p.l_n;
    return r;
}

} // namespace dewater
