#pragma once

#include "dewater/hypercube.hpp"
#include "dewater/png_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace dewater {

/// One tile of the paired dataset. Paths are relative to the dataset root.
struct DatasetRecord {
    std::string source_id;
    std::size_t row = 0; ///< pixel offset of the tile in the source cube
    std::size_t col = 0;
    std::string rgb;
    std::string mask;
    std::vector<std::string> bands;

    friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

struct DatasetOptions {
    BandTriplet bands{};
    std::size_t tile = 256;
    std::optional<std::size_t> nir_band; ///< 1-based; nearest to 860 nm when unset
    double mask_threshold = kDefaultMaskThreshold;
    unsigned jobs = 1;
};

inline std::string manifest_line(const DatasetRecord& r) {
    nlohmann::ordered_json j;
    j["source_id"] = r.source_id;
    j["row"] = r.row;
    j["col"] = r.col;
    j["rgb"] = r.rgb;
    j["mask"] = r.mask;
    j["bands"] = r.bands;
    return j.dump();
}

inline DatasetRecord parse_manifest_line(const std::string& line) {
    try {
        const auto j = nlohmann::json::parse(line);
        DatasetRecord r;
        r.source_id = j.at("source_id").get<std::string>();
        r.row = j.at("row").get<std::size_t>();
        r.col = j.at("col").get<std::size_t>();
        r.rgb = j.at("rgb").get<std::string>();
        r.mask = j.at("mask").get<std::string>();
        r.bands = j.at("bands").get<std::vector<std::string>>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::DecodeError, std::string("manifest line: ") + e.what());
    }
}

inline void write_manifest(const std::vector<DatasetRecord>& records,
                           const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
    for (const auto& r : records) f << manifest_line(r) << '\n';
    if (!f) throw Error(Errc::IoError, "write failed for " + path.string());
}

inline std::vector<DatasetRecord> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
    std::vector<DatasetRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty()) out.push_back(parse_manifest_line(line));
    }
    return out;
}

/// Number of whole tiles a cube yields; partial edge tiles are dropped.
constexpr std::size_t tile_count(std::size_t height, std::size_t width, std::size_t tile) {
    return tile == 0 ? 0 : (height / tile) * (width / tile);
}

inline std::vector<std::filesystem::path> list_cubes(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> cubes;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) {
        throw Error(Errc::IoError, "not a directory: " + dir.string());
    }
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".hcub") cubes.push_back(e.path());
    }
    std::sort(cubes.begin(), cubes.end());
    return cubes;
}

namespace detail {

inline std::string tile_dir_name(std::size_t row, std::size_t col) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "r%05zu_c%05zu", row, col);
    return buf;
}

inline std::string band_file_name(std::size_t band_1based) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "band_%02zu.png", band_1based);
    return buf;
}

inline DatasetRecord emit_tile(const HyperCube& cube, const std::string& source_id,
                               std::size_t row, std::size_t col,
                               const std::filesystem::path& out_dir, const DatasetOptions& opt) {
    const HyperCube tile = cube.crop(row, col, opt.tile, opt.tile);
    const std::filesystem::path rel = std::filesystem::path(source_id) / tile_dir_name(row, col);
    std::filesystem::create_directories(out_dir / rel);

    DatasetRecord rec;
    rec.source_id = source_id;
    rec.row = row;
    rec.col = col;
    rec.rgb = (rel / "rgb.png").generic_string();
    rec.mask = (rel / "mask.png").generic_string();

    write_image(compose_rgb(tile, opt.bands), out_dir / rec.rgb);
    const std::size_t nir = opt.nir_band.value_or(nearest_band(tile, kDefaultNirWavelength));
    write_mask(infer_water_mask(tile, nir, opt.mask_threshold), out_dir / rec.mask);
    for (std::size_t b = 1; b <= tile.bands(); ++b) {
        rec.bands.push_back((rel / band_file_name(b)).generic_string());
        write_image(band_image(tile, b), out_dir / rec.bands.back());
    }
    return rec;
}

} // namespace detail

/**
 * Tiles every *.hcub cube in cube_dir into RGB, mask and per-band PNGs under
 * out_dir and writes out_dir/manifest.jsonl. Records are ordered by
 * (source, row, col) regardless of the worker count.
 */
inline std::vector<DatasetRecord> build_dataset(const std::filesystem::path& cube_dir,
                                                const std::filesystem::path& out_dir,
                                                const DatasetOptions& opt = {}) {
    if (opt.tile == 0) throw Error(Errc::InvalidArgument, "tile size must be positive");
    const auto cubes = list_cubes(cube_dir);
    if (cubes.empty()) throw Error(Errc::NoCubesFound, "no .hcub files in " + cube_dir.string());
    std::filesystem::create_directories(out_dir);

    std::vector<DatasetRecord> records;
    for (const auto& path : cubes) {
        const HyperCube cube = load_cube(path);
        check_triplet(cube, opt.bands);
        if (opt.nir_band) check_band(cube, *opt.nir_band);
        const std::string source_id = path.stem().string();

        std::vector<std::pair<std::size_t, std::size_t>> origins;
        for (std::size_t r = 0; r + opt.tile <= cube.height(); r += opt.tile)
            for (std::size_t c = 0; c + opt.tile <= cube.width(); c += opt.tile)
                origins.emplace_back(r, c);

        std::vector<DatasetRecord> local(origins.size());
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr first_error;
        auto worker = [&] {
            for (std::size_t i = next++; i < origins.size(); i = next++) {
                try {
                    local[i] = detail::emit_tile(cube, source_id, origins[i].first,
                                                 origins[i].second, out_dir, opt);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        const unsigned n_workers = std::max(1u, std::min<unsigned>(opt.jobs, origins.size()));
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < n_workers; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
        records.insert(records.end(), local.begin(), local.end());
    }

    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.source_id, a.row, a.col) < std::tie(b.source_id, b.row, b.col);
    });
    write_manifest(records, out_dir / "manifest.jsonl");
    return records;
}

struct VerifyReport {
    std::size_t records = 0;
    std::vector<std::string> problems;

    [[nodiscard]] bool ok() const noexcept { return problems.empty(); }
};

/// Checks that every file a manifest references exists, decodes, and shares its record's extent.
inline VerifyReport verify_dataset(const std::filesystem::path& manifest,
                                   std::optional<std::filesystem::path> root = std::nullopt) {
    const auto base = root.value_or(manifest.parent_path());
    const auto records = read_manifest(manifest);
    VerifyReport rep;
    rep.records = records.size();
    std::optional<std::size_t> band_count;
    for (const auto& r : records) {
        const std::string tag = r.source_id + "@" + std::to_string(r.row) + "," + std::to_string(r.col);
        if (band_count && *band_count != r.bands.size()) {
            rep.problems.push_back(tag + ": band count " + std::to_string(r.bands.size()) +
                                   " differs from " + std::to_string(*band_count));
        }
        band_count = r.bands.size();
        if (r.bands.empty()) rep.problems.push_back(tag + ": no band files");

        std::optional<std::pair<std::size_t, std::size_t>> extent;
        auto check = [&](const std::string& rel, bool is_mask) {
            try {
                std::size_t h = 0, w = 0;
                if (is_mask) {
                    const auto m = read_mask(base / rel);
                    h = m.height();
                    w = m.width();
                } else {
                    const auto img = read_image(base / rel);
                    h = img.height();
                    w = img.width();
                }
                if (!extent) extent = {h, w};
                else if (*extent != std::pair{h, w}) rep.problems.push_back(tag + ": " + rel + " extent differs");
            } catch (const Error& e) {
                rep.problems.push_back(tag + ": " + e.what());
            }
        };
        check(r.rgb, false);
        check(r.mask, true);
        for (const auto& b : r.bands) check(b, false);
    }
    return rep;
}

} // namespace dewater
