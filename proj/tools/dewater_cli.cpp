// dewater: command-line front end for the dataset, physics, metric and toy-training modules.

#include "dewater/dataset.hpp"
#include "dewater/gan/train.hpp"
#include "dewater/metrics.hpp"
#include "dewater/objectives.hpp"
#include "dewater/photometry.hpp"
#include "dewater/png_io.hpp"
#include "dewater/watercolumn.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace dewater;

namespace {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("DEWATER_LOG");
        const std::string v = env ? env : "warn";
        if (v == "error") return LogLevel::Error;
        if (v == "info") return LogLevel::Info;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Warn;
    }();
    return level;
}

void log(LogLevel l, const std::string& msg) {
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (l <= log_level()) std::fprintf(stderr, "[%s] %s\n", names[static_cast<int>(l)], msg.c_str());
}

/// Non-finite doubles become strings so the output stays valid JSON.
json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

BandTriplet parse_bands(const std::vector<std::size_t>& v) {
    if (v.size() != 3) throw Error(Errc::InvalidArgument, "--bands takes three 1-based band numbers");
    return {v[0], v[1], v[2]};
}

std::optional<Veiling> parse_veiling(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    if (v.size() != 3) throw Error(Errc::InvalidArgument, "--veiling takes three values");
    return Veiling{v[0], v[1], v[2]};
}

WaterMask mask_or_all(const std::string& path, const RasterImage& img) {
    if (path.empty()) return WaterMask(img.height(), img.width(), true);
    WaterMask m = read_mask(path);
    require_mask_fits(m, img, "mask");
    return m;
}

json veiling_json(const Veiling& v) { return json::array({v[0], v[1], v[2]}); }

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

// ---- build-dataset ---------------------------------------------------------

struct BuildArgs {
    std::string cubes, out;
    std::vector<std::size_t> bands{33, 45, 56};
    std::size_t tile = 256;
    std::size_t nir_band = 0;
    double threshold = kDefaultMaskThreshold;
    unsigned jobs = 1;
};

int run_build(const BuildArgs& a) {
    DatasetOptions opt;
    opt.bands = parse_bands(a.bands);
    opt.tile = a.tile;
    if (a.nir_band) opt.nir_band = a.nir_band;
    opt.mask_threshold = a.threshold;
    opt.jobs = a.jobs;
    const auto records = build_dataset(a.cubes, a.out, opt);
    std::set<std::string> sources;
    for (const auto& r : records) sources.insert(r.source_id);
    print({{"records", records.size()},
           {"sources", sources.size()},
           {"manifest", (fs::path(a.out) / "manifest.jsonl").string()}});
    return 0;
}

// ---- decompose -------------------------------------------------------------

struct DecomposeArgs {
    std::string cube, image, mask, out;
    std::vector<std::size_t> bands{33, 45, 56};
    std::vector<double> stretch{0.01, 0.99};
};

int run_decompose(const DecomposeArgs& a) {
    if (a.cube.empty() == a.image.empty()) throw Error(Errc::InvalidArgument, "give exactly one of --cube or --image");
    HyperCube cube;
    BandTriplet bands = parse_bands(a.bands);
    if (!a.cube.empty()) {
        cube = load_cube(a.cube);
    } else {
        cube = cube_from_rgb(read_image(a.image));
        bands = {1, 2, 3};
    }
    std::optional<WaterMask> mask;
    if (!a.mask.empty()) mask = read_mask(a.mask);
    const auto d = decompose(cube, bands, mask, {a.stretch[0], a.stretch[1]});
    fs::create_directories(a.out);
    write_image(d.diffuse, fs::path(a.out) / "diffuse.png");
    write_image(d.specular, fs::path(a.out) / "specular.png");
    write_image(compose_rgb(cube, bands), fs::path(a.out) / "rgb.png");

    const WaterMask all = mask.value_or(WaterMask(cube.height(), cube.width(), true));
    const double residual =
        reconstruction_residual(cube, d.diffuse_raw, d.k_expect, all, bands, d.illuminant);
    const auto idx = bands.as_array();
    json j;
    j["illuminant_rgb"] = json::array({d.illuminant[idx[0] - 1], d.illuminant[idx[1] - 1], d.illuminant[idx[2] - 1]});
    j["rejected_bands"] = d.rejected_bands;
    j["specular_constant"] = d.specular_constant;
    j["reconstruction_residual"] = number(residual);
    j["diffuse"] = (fs::path(a.out) / "diffuse.png").string();
    j["specular"] = (fs::path(a.out) / "specular.png").string();
    print(j);
    return 0;
}

// ---- synthesize / dewater --------------------------------------------------

struct SynthArgs {
    std::string image, range, mask, out;
    double range_scale = 2.0;
    double alpha = kDefaultAttenuation;
    std::vector<double> veiling;
    int bit_depth = 16;
};

PngDepth png_depth(int bits) {
    if (bits == 8) return PngDepth::Eight;
    if (bits == 16) return PngDepth::Sixteen;
    throw Error(Errc::InvalidArgument, "--bit-depth must be 8 or 16");
}

int run_synthesize(const SynthArgs& a) {
    const RasterImage J = read_image(a.image);
    if (J.channels() != 3) throw Error(Errc::DimensionMismatch, "--image must be RGB");
    RasterImage r = to_gray(read_image(a.range));
    if (!r.same_extent(J)) throw Error(Errc::DimensionMismatch, "--range extent differs from --image");
    for (auto& v : r.data()) v *= a.range_scale;
    const WaterMask m = mask_or_all(a.mask, J);
    const auto T = transmission_from_range(r, a.alpha);
    const Veiling V = parse_veiling(a.veiling).value_or(veiling_grey_world(J, m));
    const RasterImage N = synthesize_underwater(J, T, V, m);
    fs::create_directories(a.out);
    write_image(N, fs::path(a.out) / "N.png", png_depth(a.bit_depth));
    write_image(T.image(), fs::path(a.out) / "T.png", png_depth(a.bit_depth));
    print({{"veiling", veiling_json(V)},
           {"alpha", a.alpha},
           {"water_pixels", m.water_count()},
           {"N", (fs::path(a.out) / "N.png").string()},
           {"T", (fs::path(a.out) / "T.png").string()}});
    return 0;
}

struct DewaterArgs {
    std::string image, transmission, mask, out;
    std::vector<double> veiling;
    int bit_depth = 8;
};

int run_dewater(const DewaterArgs& a) {
    const RasterImage N = read_image(a.image);
    if (N.channels() != 3) throw Error(Errc::DimensionMismatch, "--image must be RGB");
    const TransmissionMap T(read_image(a.transmission));
    const WaterMask m = mask_or_all(a.mask, N);
    const Veiling V = parse_veiling(a.veiling).value_or(veiling_grey_world(N, m));
    const RasterImage J = dewater::dewater(N, T, V, m);
    fs::create_directories(a.out);
    write_image(J, fs::path(a.out) / "J.png", png_depth(a.bit_depth));
    print({{"veiling", veiling_json(V)}, {"J", (fs::path(a.out) / "J.png").string()}});
    return 0;
}

// ---- evaluate --------------------------------------------------------------

struct EvalArgs {
    std::string ref, test, mask, manifest, pred_dir, root;
    std::string metrics = "psnr,ssim,uiqm";
    bool losses = false;
    std::vector<double> weights{30, 90, 100, 50, 10};
};

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

LossWeights parse_weights(const std::vector<double>& w) {
    if (w.size() != 5) throw Error(Errc::InvalidArgument, "--weights takes gamma,sigma,iota,tau,nu");
    return {w[0], w[1], w[2], w[3], w[4]};
}

json metrics_json(const RasterImage& ref, const RasterImage& test, const std::vector<std::string>& names) {
    json j;
    for (const auto& n : names) {
        if (n == "psnr") {
            j["psnr_db"] = number(psnr(ref, test));
        } else if (n == "ssim") {
            j["ssim"] = number(ssim(ref, test));
        } else if (n == "uiqm") {
            const auto u = uiqm(test);
            j["uiqm"] = number(u.uiqm);
            j["uicm"] = number(u.uicm);
            j["uism"] = number(u.uism);
            j["uiconm"] = number(u.uiconm);
        } else if (n == "niqe" || n == "ccf") {
            j[n] = nullptr;
        } else {
            throw Error(Errc::InvalidArgument, "unknown metric '" + n + "'");
        }
    }
    return j;
}

/// Every term of the objective with `ref` as target and `test` as prediction; no adversary.
json losses_json(const RasterImage& ref, const RasterImage& test, const WaterMask& m, const LossWeights& w) {
    require_same_shape(ref, test, "losses");
    LossParts p;
    p.l_gd = loss_diffuse(ref, test, m);
    p.l_gs = loss_specular(ref, test, m);
    p.l_r = loss_radiance_l2(ref, test, m);
    p.l_gj = loss_dewatered(ref, test, m);
    const RasterImage gr = to_gray(ref), gt = to_gray(test);
    p.l_t = loss_depth_scale_invariant(loss_transmission(gr, gt, m), gt, gr);
    p.l_n = loss_resynthesis(ref, test, m);
    const auto r = total_objective(p, w);
    return {{"l_gd", r.l_gd}, {"l_gs", r.l_gs}, {"l_r", r.l_r},   {"l_gj", r.l_gj},
            {"l_t", r.l_t},   {"l_n", r.l_n},   {"l_adv", r.l_adv}, {"total", r.total}};
}

json evaluate_pair(const RasterImage& ref, const RasterImage& test, const WaterMask& m, const EvalArgs& a) {
    json j = metrics_json(ref, test, split_list(a.metrics));
    if (a.losses) j["losses"] = losses_json(ref, test, m, parse_weights(a.weights));
    return j;
}

int run_evaluate(const EvalArgs& a) {
    if (!a.manifest.empty()) {
        if (a.pred_dir.empty()) throw Error(Errc::InvalidArgument, "--manifest needs --pred-dir");
        const fs::path root = a.root.empty() ? fs::path(a.manifest).parent_path() : fs::path(a.root);
        json out = json::array();
        for (const auto& rec : read_manifest(a.manifest)) {
            const RasterImage ref = read_image(root / rec.rgb);
            const RasterImage test = read_image(fs::path(a.pred_dir) / rec.rgb);
            const WaterMask m = read_mask(root / rec.mask);
            json j = evaluate_pair(ref, test, m, a);
            j["rgb"] = rec.rgb;
            out.push_back(std::move(j));
            log(LogLevel::Debug, "evaluated " + rec.rgb);
        }
        print(out);
        return 0;
    }
    if (a.ref.empty() || a.test.empty()) throw Error(Errc::InvalidArgument, "give --ref and --test, or --manifest");
    const RasterImage ref = read_image(a.ref), test = read_image(a.test);
    print(evaluate_pair(ref, test, mask_or_all(a.mask, ref), a));
    return 0;
}

// ---- train-toy -------------------------------------------------------------

struct TrainArgs {
    std::size_t size = 32;
    std::size_t steps = 200;
    std::uint64_t seed = gan::kDefaultSeed;
    std::size_t batch = 6;
    std::size_t dataset = 16;
    std::size_t sample_every = 50;
    double lr = 2e-4, beta1 = 0.5, beta2 = 0.999;
    std::vector<double> weights{30, 90, 100, 50, 10};
    bool saturating = false;
    bool no_adversarial = false;
    std::string out;
};

RasterImage to_rgb(RasterImage img) { return img.channels() == 3 ? img : gray_to_rgb(img); }

void write_sample_grid(gan::Trainer& tr, const fs::path& path) {
    const auto b = tr.fixed_batch(4);
    const auto f = tr.networks().forward(b);
    std::vector<RasterImage> rows;
    for (int i = 0; i < b.x.dim(0); ++i) {
        const std::vector<RasterImage> cells{
            gan::tensor_to_raster(b.x, i), clamp01(gan::tensor_to_raster(f.y_r, i)),
            to_rgb(gan::tensor_to_raster(f.y_t, i)), clamp01(gan::tensor_to_raster(f.y_j, i)),
            clamp01(gan::tensor_to_raster(f.n_hat, i))};
        rows.push_back(hstack(cells));
    }
    // Stack rows vertically.
    const std::size_t w = rows[0].width(), h = rows[0].height();
    RasterImage grid(h * rows.size(), w, 3);
    for (std::size_t r = 0; r < rows.size(); ++r)
        std::copy(rows[r].data().begin(), rows[r].data().end(), grid.data().begin() + r * h * w * 3);
    write_image(grid, path);
}

int run_train(const TrainArgs& a) {
    gan::TrainConfig cfg;
    cfg.image_size = a.size;
    cfg.batch = a.batch;
    cfg.seed = a.seed;
    cfg.dataset_size = a.dataset;
    cfg.lr = a.lr;
    cfg.beta1 = a.beta1;
    cfg.beta2 = a.beta2;
    cfg.weights = parse_weights(a.weights);
    cfg.adversarial = !a.no_adversarial;
    cfg.adversarial_form = a.saturating ? AdversarialForm::Saturating : AdversarialForm::NonSaturating;

    gan::Trainer tr(cfg);
    const fs::path out(a.out);
    fs::create_directories(out / "samples");
    std::ofstream csv(out / "losses.csv");
    if (!csv) throw Error(Errc::IoError, "cannot write " + (out / "losses.csv").string());
    csv << "step,l_gd,l_gs,l_r,l_gj,l_t,l_n,l_adv,total,disc\n";
    csv.precision(10);

    LossReport first{}, last{};
    for (std::size_t s = 1; s <= a.steps; ++s) {
        const auto r = tr.step();
        const auto& g = r.gen;
        csv << s << ',' << g.l_gd << ',' << g.l_gs << ',' << g.l_r << ',' << g.l_gj << ',' << g.l_t << ','
            << g.l_n << ',' << g.l_adv << ',' << g.total << ',' << r.disc << '\n';
        if (s == 1) first = g;
        last = g;
        if (a.sample_every && (s % a.sample_every == 0 || s == a.steps)) {
            char name[32];
            std::snprintf(name, sizeof name, "step_%05zu.png", s);
            write_sample_grid(tr, out / "samples" / name);
        }
        log(LogLevel::Info, "step " + std::to_string(s) + " total " + std::to_string(g.total));
    }
    gan::save_checkpoint(tr.networks(), out);
    print({{"steps", a.steps},
           {"first_total", number(first.total)},
           {"last_total", number(last.total)},
           {"first_l_gj", number(first.l_gj)},
           {"last_l_gj", number(last.l_gj)},
           {"losses", (out / "losses.csv").string()},
           {"checkpoint", (out / "params.json").string()}});
    return 0;
}

// ---- verify ----------------------------------------------------------------

int run_verify(const std::string& manifest, const std::string& root) {
    const auto rep = root.empty() ? verify_dataset(manifest) : verify_dataset(manifest, fs::path(root));
    print({{"records", rep.records}, {"ok", rep.ok()}, {"problems", rep.problems}});
    return rep.ok() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Underwater hyperspectral dewatering pipeline"};
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default();

    BuildArgs build;
    auto* c_build = app.add_subcommand("build-dataset", "Tile .hcub cubes into an RGB/mask/band PNG dataset");
    c_build->add_option("--cubes", build.cubes, "Directory of .hcub cubes")->required();
    c_build->add_option("--out", build.out, "Output dataset root")->required();
    c_build->add_option("--bands", build.bands, "RGB band triplet, 1-based")->expected(3)->delimiter(',');
    c_build->add_option("--tile", build.tile, "Tile edge in pixels");
    c_build->add_option("--nir-band", build.nir_band, "NIR band for the water mask (0 = nearest 860 nm)");
    c_build->add_option("--mask-threshold", build.threshold, "Water where NIR reflectance is below this");
    c_build->add_option("--jobs", build.jobs, "Worker threads")->check(CLI::PositiveNumber);

    DecomposeArgs dec;
    auto* c_dec = app.add_subcommand("decompose", "Split a cube or RGB image into diffuse and specular parts");
    c_dec->add_option("--cube", dec.cube, "Input .hcub cube");
    c_dec->add_option("--image", dec.image, "Input RGB PNG (treated as a 3-band cube)");
    c_dec->add_option("--mask", dec.mask, "Water mask PNG (grey world over water only)");
    c_dec->add_option("--bands", dec.bands, "RGB band triplet, 1-based")->expected(3)->delimiter(',');
    c_dec->add_option("--stretch", dec.stretch, "Percentile bounds of the linear stretch, lo,hi in [0,1]")
        ->expected(2)
        ->delimiter(',');
    c_dec->add_option("--out", dec.out, "Output directory")->required();

    SynthArgs syn;
    auto* c_syn = app.add_subcommand("synthesize", "Render an underwater view N = J T + V (1 - T)");
    c_syn->add_option("--image", syn.image, "Above-water scene J (RGB PNG)")->required();
    c_syn->add_option("--range", syn.range, "Range map PNG; sample value times --range-scale")->required();
    c_syn->add_option("--range-scale", syn.range_scale, "Range at a white range-map pixel");
    c_syn->add_option("--alpha", syn.alpha, "Attenuation coefficient");
    c_syn->add_option("--veiling", syn.veiling, "Veiling light r,g,b (default: grey world of J over water)")
        ->expected(3)->delimiter(',');
    c_syn->add_option("--mask", syn.mask, "Water mask PNG (default: all water)");
    c_syn->add_option("--bit-depth", syn.bit_depth, "Sample depth of N.png and T.png (8 or 16)");
    c_syn->add_option("--out", syn.out, "Output directory")->required();

    DewaterArgs dw;
    auto* c_dw = app.add_subcommand("dewater", "Invert the underwater model: J = (N - V) / T + V");
    c_dw->add_option("--image", dw.image, "Underwater image N (RGB PNG)")->required();
    c_dw->add_option("--transmission", dw.transmission, "Transmission map PNG")->required();
    c_dw->add_option("--veiling", dw.veiling, "Veiling light r,g,b (default: grey world of N over water)")
        ->expected(3)->delimiter(',');
    c_dw->add_option("--mask", dw.mask, "Water mask PNG (default: all water)");
    c_dw->add_option("--bit-depth", dw.bit_depth, "Sample depth of J.png (8 or 16)");
    c_dw->add_option("--out", dw.out, "Output directory")->required();

    EvalArgs ev;
    auto* c_ev = app.add_subcommand("evaluate", "Image quality metrics and loss terms for an image pair or a manifest");
    c_ev->add_option("--ref", ev.ref, "Reference image");
    c_ev->add_option("--test", ev.test, "Image under test");
    c_ev->add_option("--mask", ev.mask, "Water mask for --losses (default: all water)");
    c_ev->add_option("--metrics", ev.metrics, "Comma list of psnr, ssim, uiqm");
    c_ev->add_flag("--losses", ev.losses, "Also report every objective term with ref as target");
    c_ev->add_option("--weights", ev.weights, "gamma,sigma,iota,tau,nu")->expected(5)->delimiter(',');
    c_ev->add_option("--manifest", ev.manifest, "Batch mode: dataset manifest");
    c_ev->add_option("--pred-dir", ev.pred_dir, "Batch mode: predictions laid out like the dataset");
    c_ev->add_option("--root", ev.root, "Batch mode: dataset root (default: manifest directory)");

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train-toy", "Train the four generators and discriminator on synthetic scenes");
    c_tr->add_option("--size", tr.size, "Image edge (16, 32 or 64)");
    c_tr->add_option("--steps", tr.steps, "Training steps");
    c_tr->add_option("--seed", tr.seed, "Seed for data and initialisation");
    c_tr->add_option("--batch", tr.batch, "Batch size");
    c_tr->add_option("--dataset", tr.dataset, "Size of the fixed synthetic set");
    c_tr->add_option("--sample-every", tr.sample_every, "Write a sample grid every N steps (0 = never)");
    c_tr->add_option("--lr", tr.lr, "Adam learning rate");
    c_tr->add_option("--beta1", tr.beta1, "Adam beta1");
    c_tr->add_option("--beta2", tr.beta2, "Adam beta2");
    c_tr->add_option("--weights", tr.weights, "gamma,sigma,iota,tau,nu")->expected(5)->delimiter(',');
    c_tr->add_flag("--saturating", tr.saturating, "Use log(1 - D) for the generator adversarial term");
    c_tr->add_flag("--no-adversarial", tr.no_adversarial, "Drop the discriminator");
    c_tr->add_option("--out", tr.out, "Checkpoint directory")->required();

    std::string v_manifest, v_root;
    auto* c_ver = app.add_subcommand("verify", "Check that a dataset manifest is complete and consistent");
    c_ver->add_option("--manifest", v_manifest, "Manifest path")->required();
    c_ver->add_option("--root", v_root, "Dataset root (default: manifest directory)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (c_build->parsed()) return run_build(build);
        if (c_dec->parsed()) return run_decompose(dec);
        if (c_syn->parsed()) return run_synthesize(syn);
        if (c_dw->parsed()) return run_dewater(dw);
        if (c_ev->parsed()) return run_evaluate(ev);
        if (c_tr->parsed()) return run_train(tr);
        if (c_ver->parsed()) return run_verify(v_manifest, v_root);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == Errc::InvalidArgument ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
