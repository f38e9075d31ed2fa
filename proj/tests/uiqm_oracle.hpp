#pragma once

// Second, deliberately plain UIQM implementation used only as a test oracle.
// Written from the metric's published formulas without sharing code with metrics.hpp.

#include "dewater/imagecore.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace uiqm_oracle {

struct Parts {
    double uicm, uism, uiconm, uiqm;
};

inline double alpha_trimmed_mean(std::vector<double> x) {
    std::sort(x.begin(), x.end());
    const double K = static_cast<double>(x.size());
    const int tl = static_cast<int>(std::ceil(0.1 * K));
    const int tr = static_cast<int>(std::floor(0.1 * K));
    double s = 0.0;
    for (int i = tl + 1; i <= static_cast<int>(K) - tr; ++i) s += x[static_cast<std::size_t>(i - 1)];
    return s / (K - tl - tr);
}

inline double uicm(const dewater::RasterImage& im) {
    std::vector<double> rg, yb;
    for (std::size_t y = 0; y < im.height(); ++y)
        for (std::size_t x = 0; x < im.width(); ++x) {
            const double R = 255.0 * im.at(y, x, 0), G = 255.0 * im.at(y, x, 1), B = 255.0 * im.at(y, x, 2);
            rg.push_back(R - G);
            yb.push_back(0.5 * (R + G) - B);
        }
    const double mrg = alpha_trimmed_mean(rg), myb = alpha_trimmed_mean(yb);
    double vrg = 0.0, vyb = 0.0;
    for (double v : rg) vrg += std::pow(v - mrg, 2);
    for (double v : yb) vyb += std::pow(v - myb, 2);
    vrg /= static_cast<double>(rg.size());
    vyb /= static_cast<double>(yb.size());
    return -0.0268 * std::sqrt(mrg * mrg + myb * myb) + 0.1586 * std::sqrt(vrg + vyb);
}

inline double uism(const dewater::RasterImage& im) {
    const int H = static_cast<int>(im.height()), W = static_cast<int>(im.width());
    const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
    const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
    const double lambda[3] = {0.299, 0.587, 0.114};
    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        auto val = [&](int y, int x) {
            y = y < 0 ? 0 : (y >= H ? H - 1 : y);
            x = x < 0 ? 0 : (x >= W ? W - 1 : x);
            return 255.0 * im.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), static_cast<std::size_t>(c));
        };
        std::vector<std::vector<double>> edge(static_cast<std::size_t>(H), std::vector<double>(static_cast<std::size_t>(W)));
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double gx = 0.0, gy = 0.0;
                for (int j = -1; j <= 1; ++j)
                    for (int i = -1; i <= 1; ++i) {
                        gx += kx[j + 1][i + 1] * val(y + j, x + i);
                        gy += ky[j + 1][i + 1] * val(y + j, x + i);
                    }
                edge[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = std::sqrt(gx * gx + gy * gy) * val(y, x);
            }
        const int k1 = W / 8, k2 = H / 8;
        double s = 0.0;
        for (int l = 0; l < k2; ++l)
            for (int k = 0; k < k1; ++k) {
                double mx = edge[static_cast<std::size_t>(8 * l)][static_cast<std::size_t>(8 * k)], mn = mx;
                for (int y = 8 * l; y < 8 * l + 8; ++y)
                    for (int x = 8 * k; x < 8 * k + 8; ++x) {
                        mx = std::max(mx, edge[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]);
                        mn = std::min(mn, edge[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)]);
                    }
                if (mn > 0.0) s += std::log(mx / mn);
            }
        total += lambda[c] * (2.0 / (k1 * k2)) * s;
    }
    return total;
}

inline double uiconm(const dewater::RasterImage& im) {
    const int k1 = static_cast<int>(im.width()) / 8, k2 = static_cast<int>(im.height()) / 8;
    double s = 0.0;
    for (int l = 0; l < k2; ++l)
        for (int k = 0; k < k1; ++k) {
            double mx = -1e300, mn = 1e300;
            for (int y = 8 * l; y < 8 * l + 8; ++y)
                for (int x = 8 * k; x < 8 * k + 8; ++x)
                    for (int c = 0; c < 3; ++c) {
                        const double v = 255.0 * im.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), static_cast<std::size_t>(c));
                        mx = std::max(mx, v);
                        mn = std::min(mn, v);
                    }
            const double ratio = (mx + mn) > 0.0 ? (mx - mn) / (mx + mn) : 0.0;
            if (ratio > 0.0) s += ratio * std::log(ratio);
        }
    return -s / (k1 * k2);
}

inline Parts uiqm(const dewater::RasterImage& im) {
    Parts p{uiqm_oracle::uicm(im), uiqm_oracle::uism(im), uiqm_oracle::uiconm(im), 0.0};
    p.uiqm = 0.0282 * p.uicm + 0.2953 * p.uism + 3.5753 * p.uiconm;
    return p;
}

} // namespace uiqm_oracle
