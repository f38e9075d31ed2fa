#pragma once

#include "dewater/gan/ops.hpp"
#include "dewater/imagecore.hpp"
#include "dewater/random.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

namespace testing_support {

using dewater::gan::Shape;
using dewater::gan::Tensor;

/// Uniform values in [lo, hi); with `away_from` set, values closer than `gap` to it are pushed off.
inline Tensor random_tensor(dewater::Rng& rng, const Shape& s, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true, double gap = 0.0, double away_from = 0.0) {
    std::vector<double> v(dewater::gan::numel(s));
    for (auto& x : v) {
        x = rng.uniform(lo, hi);
        if (gap > 0.0 && std::abs(x - away_from) < gap) x = away_from + (x < away_from ? -gap : gap);
    }
    return dewater::gan::Tensor::make(s, std::move(v), requires_grad);
}

struct GradCheck {
    double rel_error = 0.0; ///< ||analytic - numeric|| / (||analytic|| + ||numeric||)
    double max_abs = 0.0;
    std::size_t checked = 0;
};

/**
 * Central differences of a scalar-valued builder against its backward pass.
 * `build` must rebuild the graph from the current input values each call.
 * `stride` > 1 samples every stride-th element to bound the cost.
 */
inline GradCheck grad_check(const std::function<Tensor()>& build, std::vector<Tensor> inputs,
                            double h = 1e-3, std::size_t stride = 1) {
    for (auto& t : inputs) t.zero_grad();
    const Tensor out = build();
    out.backward();
    double num = 0.0, den_a = 0.0, den_n = 0.0;
    GradCheck r;
    for (auto& t : inputs) {
        const auto g = t.grad();
        auto v = t.value();
        for (std::size_t i = 0; i < v.size(); i += stride) {
            const double keep = v[i];
            v[i] = keep + h;
            const double fp = build().item();
            v[i] = keep - h;
            const double fm = build().item();
            v[i] = keep;
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = g.empty() ? 0.0 : g[i];
            num += (analytic - numeric) * (analytic - numeric);
            den_a += analytic * analytic;
            den_n += numeric * numeric;
            r.max_abs = std::max(r.max_abs, std::abs(analytic - numeric));
            ++r.checked;
        }
    }
    const double den = std::sqrt(den_a) + std::sqrt(den_n);
    r.rel_error = den == 0.0 ? 0.0 : std::sqrt(num) / den;
    return r;
}

/// Weighted sum with fixed random weights, so every output element matters to the scalar.
inline Tensor weighted_sum(const Tensor& y, std::uint64_t seed = 7) {
    dewater::Rng rng(seed);
    auto w = random_tensor(rng, y.shape(), -1.0, 1.0, false);
    return dewater::gan::sum(dewater::gan::mul(y, w));
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("dewater_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Every regular file under root, keyed by relative path, with its bytes.
inline std::vector<std::pair<std::string, std::string>> snapshot_tree(const std::filesystem::path& root) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out.emplace_back(std::filesystem::relative(e.path(), root).string(), read_file(e.path()));
    }
    std::sort(out.begin(), out.end());
    return out;
}

inline dewater::RasterImage random_image(dewater::Rng& rng, std::size_t h, std::size_t w, std::size_t c,
                                         double lo = 0.0, double hi = 1.0) {
    dewater::RasterImage img(h, w, c);
    for (auto& v : img.data()) v = rng.uniform(lo, hi);
    return img;
}

inline dewater::WaterMask random_mask(dewater::Rng& rng, std::size_t h, std::size_t w, double p_water = 0.7) {
    dewater::WaterMask m(h, w, false);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) m.set(y, x, rng.uniform() < p_water);
    return m;
}

} // namespace testing_support
