// Regenerates the committed test fixtures: two small synthetic cubes and a 64x64 RGB image.
// Usage: make_fixtures <fixtures-dir>

#include "dewater/hypercube.hpp"
#include "dewater/png_io.hpp"
#include "dewater/random.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

using namespace dewater;

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: make_fixtures <fixtures-dir>\n");
        return 2;
    }
    const std::filesystem::path dir(argv[1]);
    try {
        std::filesystem::create_directories(dir / "cubes");
        save_cube(make_synthetic_cube(11, 32, 48), dir / "cubes" / "scene_a.hcub");
        save_cube(make_synthetic_cube(12, 40, 32), dir / "cubes" / "scene_b.hcub");

        // Smooth colour ramps, a few flat patches and mild noise.
        Rng rng(64);
        RasterImage img(64, 64, 3);
        for (std::size_t y = 0; y < 64; ++y)
            for (std::size_t x = 0; x < 64; ++x) {
                const double fy = static_cast<double>(y) / 63.0, fx = static_cast<double>(x) / 63.0;
                img.at(y, x, 0) = 0.15 + 0.5 * fx * fy;
                img.at(y, x, 1) = 0.35 + 0.3 * std::sin(std::numbers::pi * fx);
                img.at(y, x, 2) = 0.55 - 0.25 * fy;
            }
        for (int k = 0; k < 6; ++k) {
            const std::size_t y0 = rng.index(48), x0 = rng.index(48), s = 6 + rng.index(10);
            const double c[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
            for (std::size_t y = y0; y < std::min<std::size_t>(64, y0 + s); ++y)
                for (std::size_t x = x0; x < std::min<std::size_t>(64, x0 + s); ++x)
                    for (std::size_t ch = 0; ch < 3; ++ch) img.at(y, x, ch) = c[ch];
        }
        for (auto& v : img.data()) v = std::clamp(v + 0.03 * rng.normal(), 0.0, 1.0);
        write_image(img, dir / "uiqm_64.png");
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
