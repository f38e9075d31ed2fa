#pragma once

#include "dewater/imagecore.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace dewater {

struct MetricReport {
    std::optional<double> psnr_db; ///< +infinity for identical inputs
    std::optional<double> ssim;
    std::optional<double> uiqm;
    std::optional<double> uicm;
    std::optional<double> uism;
    std::optional<double> uiconm;
    // Reserved: NIQE and CCF need pretrained scene-statistics models.
    std::optional<double> niqe;
    std::optional<double> ccf;
};

inline double mean_squared_error(const RasterImage& a, const RasterImage& b) {
    require_same_shape(a, b, "mse");
    if (a.empty()) throw Error(Errc::InvalidArgument, "mse of empty rasters");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        sum += d * d;
    }
    return sum / static_cast<double>(a.size());
}

/// Peak signal-to-noise ratio for unit dynamic range; +inf when the inputs agree.
inline double psnr(const RasterImage& a, const RasterImage& b) {
    const double mse = mean_squared_error(a, b);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

struct SsimParams {
    std::size_t window = 11;
    double sigma = 1.5;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
};

inline std::vector<double> gaussian_window(std::size_t size, double sigma) {
    std::vector<double> w(size * size);
    const double c = (static_cast<double>(size) - 1.0) / 2.0;
    double sum = 0.0;
    for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) {
            const double dy = static_cast<double>(y) - c, dx = static_cast<double>(x) - c;
            w[y * size + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            sum += w[y * size + x];
        }
    for (auto& v : w) v /= sum;
    return w;
}

/**
 * Mean structural similarity over all fully-contained Gaussian windows.
 * Colour inputs are reduced to grey by channel averaging first.
 */
inline double ssim(const RasterImage& a, const RasterImage& b, const SsimParams& p = {}) {
    require_same_shape(a, b, "ssim");
    if (a.height() < p.window || a.width() < p.window) {
        throw Error(Errc::ImageTooSmall, "ssim needs at least a " + std::to_string(p.window) +
                                             "x" + std::to_string(p.window) + " image");
    }
    const RasterImage ga = to_gray(a), gb = to_gray(b);
    const auto w = gaussian_window(p.window, p.sigma);
    const double c1 = std::pow(p.k1 * p.dynamic_range, 2.0);
    const double c2 = std::pow(p.k2 * p.dynamic_range, 2.0);
    const std::size_t oh = a.height() - p.window + 1, ow = a.width() - p.window + 1;
    double total = 0.0;
    for (std::size_t y0 = 0; y0 < oh; ++y0) {
        for (std::size_t x0 = 0; x0 < ow; ++x0) {
            double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
            for (std::size_t y = 0; y < p.window; ++y)
                for (std::size_t x = 0; x < p.window; ++x) {
                    const double wt = w[y * p.window + x];
                    const double va = ga.at(y0 + y, x0 + x), vb = gb.at(y0 + y, x0 + x);
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
            total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    return total / static_cast<double>(oh * ow);
}

/**
 * UIQM constants, from Panetta, Gao & Agaian, "Human-Visual-System-Inspired
 * Underwater Image Quality Measures", IEEE J. Oceanic Eng. 41(3), 2016.
 * Samples are taken on the 0..255 scale the weights were fitted on.
 */
struct UiqmParams {
    double c_uicm = 0.0282;
    double c_uism = 0.2953;
    double c_uiconm = 3.5753;
    double trim_low = 0.1;   ///< alpha_L of the asymmetric trimmed mean
    double trim_high = 0.1;  ///< alpha_R
    double uicm_mean_weight = -0.0268;
    double uicm_spread_weight = 0.1586;
    std::array<double, 3> uism_channel_weights{0.299, 0.587, 0.114};
    std::size_t block = 8;
    double scale = 255.0;
    std::size_t min_extent = 32;
};

struct UiqmResult {
    double uiqm = 0.0;
    double uicm = 0.0;
    double uism = 0.0;
    double uiconm = 0.0;
};

namespace detail {

/// Asymmetric alpha-trimmed mean: drop ceil(aL K) smallest and floor(aR K) largest.
inline double trimmed_mean(std::vector<double> v, double a_low, double a_high) {
    std::sort(v.begin(), v.end());
    const auto k = v.size();
    const auto lo = static_cast<std::size_t>(std::ceil(a_low * static_cast<double>(k)));
    const auto hi = static_cast<std::size_t>(std::floor(a_high * static_cast<double>(k)));
    double sum = 0.0;
    for (std::size_t i = lo; i < k - hi; ++i) sum += v[i];
    return sum / static_cast<double>(k - lo - hi);
}

inline double spread_about(const std::vector<double>& v, double mu) {
    double s = 0.0;
    for (double x : v) s += (x - mu) * (x - mu);
    return s / static_cast<double>(v.size());
}

/// Sobel gradient magnitude with replicated borders.
inline std::vector<double> sobel_magnitude(const std::vector<double>& img, std::size_t h, std::size_t w) {
    auto px = [&](std::ptrdiff_t y, std::ptrdiff_t x) {
        y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(h) - 1);
        x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(w) - 1);
        return img[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)];
    };
    std::vector<double> out(h * w);
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y)
        for (std::ptrdiff_t x = 0; x < static_cast<std::ptrdiff_t>(w); ++x) {
            const double gx = (px(y - 1, x + 1) + 2 * px(y, x + 1) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2 * px(y, x - 1) + px(y + 1, x - 1));
            const double gy = (px(y + 1, x - 1) + 2 * px(y + 1, x) + px(y + 1, x + 1)) -
                              (px(y - 1, x - 1) + 2 * px(y - 1, x) + px(y - 1, x + 1));
            out[static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x)] = std::hypot(gx, gy);
        }
    return out;
}

/// Block EME: 2/(k1 k2) sum log(max/min); blocks with a zero extreme contribute nothing.
inline double eme(const std::vector<double>& img, std::size_t h, std::size_t w, std::size_t block) {
    const std::size_t k1 = w / block, k2 = h / block;
    double val = 0.0;
    for (std::size_t by = 0; by < k2; ++by)
        for (std::size_t bx = 0; bx < k1; ++bx) {
            double mx = -std::numeric_limits<double>::infinity();
            double mn = std::numeric_limits<double>::infinity();
            for (std::size_t y = by * block; y < (by + 1) * block; ++y)
                for (std::size_t x = bx * block; x < (bx + 1) * block; ++x) {
                    mx = std::max(mx, img[y * w + x]);
                    mn = std::min(mn, img[y * w + x]);
                }
            if (mn > 0.0 && mx > 0.0) val += std::log(mx / mn);
        }
    return 2.0 / static_cast<double>(k1 * k2) * val;
}

/// Block logAMEE over the joint RGB block extremes.
inline double log_amee(const RasterImage& img, double scale, std::size_t block) {
    const std::size_t k1 = img.width() / block, k2 = img.height() / block;
    double val = 0.0;
    for (std::size_t by = 0; by < k2; ++by)
        for (std::size_t bx = 0; bx < k1; ++bx) {
            double mx = -std::numeric_limits<double>::infinity();
            double mn = std::numeric_limits<double>::infinity();
            for (std::size_t y = by * block; y < (by + 1) * block; ++y)
                for (std::size_t x = bx * block; x < (bx + 1) * block; ++x)
                    for (std::size_t c = 0; c < img.channels(); ++c) {
                        mx = std::max(mx, img.at(y, x, c) * scale);
                        mn = std::min(mn, img.at(y, x, c) * scale);
                    }
            const double top = mx - mn, bot = mx + mn;
            if (top > 0.0 && bot > 0.0) val += (top / bot) * std::log(top / bot);
        }
    return -val / static_cast<double>(k1 * k2);
}

} // namespace detail

/// Colourfulness from the RG and YB opponent channels.
inline double uicm(const RasterImage& img, const UiqmParams& p = {}) {
    const std::size_t n = img.pixel_count();
    std::vector<double> rg(n), yb(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = img.data()[i * 3] * p.scale;
        const double g = img.data()[i * 3 + 1] * p.scale;
        const double b = img.data()[i * 3 + 2] * p.scale;
        rg[i] = r - g;
        yb[i] = (r + g) / 2.0 - b;
    }
    const double mu_rg = detail::trimmed_mean(rg, p.trim_low, p.trim_high);
    const double mu_yb = detail::trimmed_mean(yb, p.trim_low, p.trim_high);
    const double s_rg = detail::spread_about(rg, mu_rg);
    const double s_yb = detail::spread_about(yb, mu_yb);
    return p.uicm_mean_weight * std::sqrt(mu_rg * mu_rg + mu_yb * mu_yb) +
           p.uicm_spread_weight * std::sqrt(s_rg + s_yb);
}

/// Sharpness: luma-weighted EME of each channel's Sobel edge map times the channel.
inline double uism(const RasterImage& img, const UiqmParams& p = {}) {
    const std::size_t h = img.height(), w = img.width();
    double total = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> ch(h * w);
        for (std::size_t i = 0; i < h * w; ++i) ch[i] = img.data()[i * 3 + c] * p.scale;
        auto edge = detail::sobel_magnitude(ch, h, w);
        for (std::size_t i = 0; i < h * w; ++i) edge[i] *= ch[i];
        total += p.uism_channel_weights[c] * detail::eme(edge, h, w, p.block);
    }
    return total;
}

inline double uiconm(const RasterImage& img, const UiqmParams& p = {}) {
    return detail::log_amee(img, p.scale, p.block);
}

/// No-reference underwater quality: c1 UICM + c2 UISM + c3 UIConM.
inline UiqmResult uiqm(const RasterImage& img, const UiqmParams& p = {}) {
    if (img.channels() != 3) throw Error(Errc::DimensionMismatch, "uiqm needs an RGB image");
    if (img.height() < p.min_extent || img.width() < p.min_extent) {
        throw Error(Errc::ImageTooSmall, "uiqm needs at least " + std::to_string(p.min_extent) +
                                             "x" + std::to_string(p.min_extent));
    }
    UiqmResult r;
    r.uicm = uicm(img, p);
    r.uism = uism(img, p);
    r.uiconm = uiconm(img, p);
    r.uiqm = p.c_uicm * r.uicm + p.c_uism * r.uism + p.c_uiconm * r.uiconm;
    return r;
}

} // namespace dewater
