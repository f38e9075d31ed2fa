#pragma once

#include "dewater/gan/nets.hpp"
#include "dewater/gan/synthetic.hpp"
#include "dewater/objectives.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

namespace dewater::gan {

inline constexpr std::uint64_t kDefaultSeed = 100;

struct TrainConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    std::size_t batch = 6;
    std::size_t epochs = 1;
    std::uint64_t seed = kDefaultSeed;
    LossWeights weights{};
    std::size_t image_size = 32;
    std::size_t dataset_size = 16; ///< fixed synthetic set the batches cycle over
    bool adversarial = true;
    AdversarialForm adversarial_form = AdversarialForm::NonSaturating;
    int depth = 3;
    int base_width = 16;

    [[nodiscard]] AdamConfig adam() const { return {lr, beta1, beta2, 1e-8}; }
};

/// The generator-side graph of one step; every field is a scalar tensor except the images.
struct ForwardPass {
    Tensor y_d, y_s, y_r, y_t, y_j, n_hat;
    Tensor l_gd, l_gs, l_r, l_gj, l_t, l_n, l_adv, total;
};

struct StepResult {
    LossReport gen;
    double disc = 0.0;
};

/// Masked L1 over water pixels of the whole batch, averaged over water pixels x channels.
inline Tensor masked_l1(const Tensor& a, const Tensor& b, const Tensor& mask) {
    double water = 0.0;
    for (double m : mask.value()) water += m;
    if (water == 0.0) return Tensor::scalar(0.0);
    const double denom = water * static_cast<double>(std::max(a.dim(1), b.dim(1)));
    return scale(sum(mul(abs_diff(a, b), mask)), 1.0 / denom);
}

/// Batch mean of the per-sample masked L2 norm of a - b.
inline Tensor masked_l2(const Tensor& a, const Tensor& b, const Tensor& mask) {
    const Tensor d = mul(sub(a, b), mask);
    return mean(sqrt(add_scalar(sum_per_sample(mul(d, d)), 1e-12)));
}

/// log(t + 0.5) + mean(|dx d| + |dy d|), d = pred - target, t = masked L1.
inline Tensor scale_invariant_transmission(const Tensor& pred, const Tensor& target, const Tensor& mask) {
    const Tensor t = masked_l1(pred, target, mask);
    const Tensor d = sub(pred, target);
    const Tensor grad = add(sum(abs(forward_diff(d, 3))), sum(abs(forward_diff(d, 2))));
    return add(log(add_scalar(t, 0.5)), scale(grad, 1.0 / static_cast<double>(d.size())));
}

/// The four generators, the discriminator and one Adam state for each.
class Networks {
public:
    explicit Networks(const TrainConfig& cfg) : cfg_(cfg) {
        Rng seeds(cfg.seed);
        for (auto k : {GeneratorKind::Gd, GeneratorKind::Gs, GeneratorKind::Gt, GeneratorKind::Gj}) {
            auto spec = GeneratorSpec::for_kind(k);
            spec.depth = cfg.depth;
            spec.base_width = cfg.base_width;
            generators_.push_back(std::make_unique<UNetGenerator>(spec, seeds.next()));
        }
        DiscriminatorSpec ds;
        ds.image_size = static_cast<int>(cfg.image_size);
        disc_ = std::make_unique<AttentionDiscriminator>(ds, seeds.next());
        for (auto& g : generators_) adam_.emplace_back(*g, cfg.adam());
        adam_.emplace_back(*disc_, cfg.adam());
    }

    UNetGenerator& gen(GeneratorKind k) { return *generators_[static_cast<std::size_t>(k)]; }
    const UNetGenerator& gen(GeneratorKind k) const { return *generators_[static_cast<std::size_t>(k)]; }
    AttentionDiscriminator& disc() { return *disc_; }
    const AttentionDiscriminator& disc() const { return *disc_; }
    const TrainConfig& config() const { return cfg_; }

    /// Every module in a fixed order: Gd, Gs, Gt, Gj, D.
    std::vector<Module*> modules() {
        std::vector<Module*> m;
        for (auto& g : generators_) m.push_back(g.get());
        m.push_back(disc_.get());
        return m;
    }

    Adam& optimizer(std::size_t i) { return adam_[i]; }

    /// Builds the full generator objective for a batch.
    ForwardPass forward(const TensorBatch& b) const {
        ForwardPass f;
        f.y_d = gen(GeneratorKind::Gd).forward(b.x);
        f.y_s = gen(GeneratorKind::Gs).forward(b.x);
        f.y_r = add(f.y_d, f.y_s);
        f.y_j = gen(GeneratorKind::Gj).forward(f.y_r);
        f.y_t = gen(GeneratorKind::Gt).forward(b.x);
        f.n_hat = add(mul(f.y_j, f.y_t), mul(b.veiling, add_scalar(scale(f.y_t, -1.0), 1.0)));

        f.l_gd = masked_l1(f.y_d, b.diffuse, b.mask);
        f.l_gs = masked_l1(f.y_s, b.specular, b.mask);
        f.l_r = masked_l2(b.x, f.y_r, b.mask);
        f.l_gj = masked_l1(f.y_j, b.J, b.mask);
        f.l_t = scale_invariant_transmission(f.y_t, b.transmission, b.mask);
        f.l_n = masked_l1(f.n_hat, b.N, b.mask);
        if (cfg_.adversarial) {
            const Tensor p = disc_->forward(b.x, f.y_j);
            f.l_adv = cfg_.adversarial_form == AdversarialForm::NonSaturating ? bce_with_clamp(p, 1.0)
                                                                              : scale(bce_with_clamp(p, 0.0), -1.0);
        } else {
            f.l_adv = Tensor::scalar(0.0);
        }
        const auto& w = cfg_.weights;
        f.total = add(f.l_adv, add(scale(add(f.l_gs, f.l_gd), w.gamma),
                                   add(scale(f.l_r, w.sigma),
                                       add(scale(f.l_gj, w.iota),
                                           add(scale(f.l_t, w.tau), scale(f.l_n, w.nu))))));
        return f;
    }

    /// -log D(x, J) - log(1 - D(x, y_j)) with y_j cut from the generator graph.
    Tensor discriminator_loss(const TensorBatch& b, const Tensor& y_j) const {
        return add(bce_with_clamp(disc_->forward(b.x, b.J), 1.0),
                   bce_with_clamp(disc_->forward(b.x, y_j.detach()), 0.0));
    }

private:
    TrainConfig cfg_;
    std::vector<std::unique_ptr<UNetGenerator>> generators_;
    std::unique_ptr<AttentionDiscriminator> disc_;
    std::vector<Adam> adam_;
};

namespace detail {

inline bool grads_finite(Module& m) {
    for (const auto& p : m.parameters())
        for (double g : p.tensor.grad())
            if (!std::isfinite(g)) return false;
    return true;
}

inline LossReport to_report(const ForwardPass& f) {
    return {f.l_gd.item(), f.l_gs.item(), f.l_r.item(), f.l_gj.item(),
            f.l_t.item(),  f.l_n.item(),  f.l_adv.item(), f.total.item()};
}

} // namespace detail

/**
 * One simultaneous step: a single backward pass of the weighted generator
 * objective updates Gd, Gs, Gt and Gj, then D takes one step on its own loss.
 * Nothing is updated if any loss or gradient is non-finite.
 */
inline StepResult train_step(const TensorBatch& batch, Networks& nets) {
    const ForwardPass f = nets.forward(batch);
    const std::array<std::pair<const char*, const Tensor*>, 8> terms{{{"l_gd", &f.l_gd},
                                                                       {"l_gs", &f.l_gs},
                                                                       {"l_r", &f.l_r},
                                                                       {"l_gj", &f.l_gj},
                                                                       {"l_t", &f.l_t},
                                                                       {"l_n", &f.l_n},
                                                                       {"l_adv", &f.l_adv},
                                                                       {"total", &f.total}}};
    for (const auto& [name, t] : terms) {
        if (!std::isfinite(t->item())) throw Error(Errc::NonFiniteGradient, std::string(name) + " is not finite");
    }
    auto mods = nets.modules();
    for (auto* m : mods) m->zero_grad();
    f.total.backward();
    for (std::size_t i = 0; i + 1 < mods.size(); ++i) {
        if (detail::grads_finite(*mods[i])) continue;
        // Find the term responsible before giving up.
        for (const auto& [name, t] : terms) {
            if (!t->requires_grad()) continue;
            for (auto* m : mods) m->zero_grad();
            t->backward();
            for (std::size_t j = 0; j + 1 < mods.size(); ++j) {
                if (!detail::grads_finite(*mods[j])) {
                    throw Error(Errc::NonFiniteGradient, std::string("gradient of ") + name + " is not finite");
                }
            }
        }
        throw Error(Errc::NonFiniteGradient, "gradient of total is not finite");
    }

    StepResult r;
    r.gen = detail::to_report(f);
    if (!nets.config().adversarial) {
        for (std::size_t i = 0; i + 1 < mods.size(); ++i) nets.optimizer(i).step();
        return r;
    }

    const Tensor d_loss = nets.discriminator_loss(batch, f.y_j);
    r.disc = d_loss.item();
    if (!std::isfinite(r.disc)) throw Error(Errc::NonFiniteGradient, "discriminator loss is not finite");
    for (std::size_t i = 0; i + 1 < mods.size(); ++i) nets.optimizer(i).step();
    mods.back()->zero_grad();
    d_loss.backward();
    if (!detail::grads_finite(*mods.back())) {
        throw Error(Errc::NonFiniteGradient, "gradient of discriminator loss is not finite");
    }
    nets.optimizer(mods.size() - 1).step();
    return r;
}

/// Deterministic run over a fixed synthetic set; batches cycle through it in order.
class Trainer {
public:
    explicit Trainer(const TrainConfig& cfg)
        : cfg_(cfg), nets_(cfg), data_(make_synthetic_batch(cfg.seed, cfg.dataset_size, cfg.image_size)) {
        if (cfg.batch == 0 || cfg.batch > cfg.dataset_size) {
            throw Error(Errc::InvalidArgument, "batch must be in [1, dataset_size]");
        }
    }

    TensorBatch batch_for_step(std::size_t step) const {
        std::vector<const SyntheticSample*> picks;
        for (std::size_t k = 0; k < cfg_.batch; ++k) picks.push_back(&data_[(step * cfg_.batch + k) % data_.size()]);
        return to_tensors(picks);
    }

    StepResult step() { return train_step(batch_for_step(step_++), nets_); }

    /// The first `count` samples of the synthetic set as one batch.
    TensorBatch fixed_batch(std::size_t count) const {
        std::vector<const SyntheticSample*> picks;
        for (std::size_t k = 0; k < std::min(count, data_.size()); ++k) picks.push_back(&data_[k]);
        return to_tensors(picks);
    }

    Networks& networks() { return nets_; }
    const std::vector<SyntheticSample>& data() const { return data_; }
    std::size_t steps_done() const { return step_; }

private:
    TrainConfig cfg_;
    Networks nets_;
    std::vector<SyntheticSample> data_;
    std::size_t step_ = 0;
};

inline constexpr const char* kCheckpointFormat = "dewater-params-v1";

/// Writes params.bin (little-endian float32 blobs back to back) and params.json (the index).
inline void save_checkpoint(Networks& nets, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw Error(Errc::IoError, "cannot write " + (dir / "params.bin").string());
    nlohmann::ordered_json index;
    index["format"] = kCheckpointFormat;
    index["dtype"] = "float32";
    index["byte_order"] = "little";
    auto& entries = index["tensors"] = nlohmann::ordered_json::array();
    std::uint64_t offset = 0;
    for (auto* m : nets.modules()) {
        for (const auto& p : m->parameters()) {
            for (double v : p.tensor.value()) {
                auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
                if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
                bin.write(reinterpret_cast<const char*>(&bits), 4);
            }
            const auto& s = p.tensor.shape();
            entries.push_back({{"name", p.name},
                               {"shape", {s[0], s[1], s[2], s[3]}},
                               {"offset", offset},
                               {"count", p.tensor.size()}});
            offset += 4 * p.tensor.size();
        }
    }
    if (!bin) throw Error(Errc::IoError, "short write to params.bin");
    std::ofstream js(dir / "params.json");
    js << index.dump(2) << '\n';
    if (!js) throw Error(Errc::IoError, "cannot write " + (dir / "params.json").string());
}

/// Loads values by name; every parameter of `nets` must be present with the same shape.
inline void load_checkpoint(Networks& nets, const std::filesystem::path& dir) {
    std::ifstream js(dir / "params.json");
    if (!js) throw Error(Errc::IoError, "cannot read " + (dir / "params.json").string());
    nlohmann::json index;
    try {
        js >> index;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::DecodeError, std::string("params.json: ") + e.what());
    }
    if (index.value("format", "") != kCheckpointFormat) throw Error(Errc::BadMagic, "unknown checkpoint format");
    std::ifstream bin(dir / "params.bin", std::ios::binary);
    if (!bin) throw Error(Errc::IoError, "cannot read " + (dir / "params.bin").string());
    const std::vector<char> raw((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());

    std::map<std::string, nlohmann::json> by_name;
    for (const auto& e : index.at("tensors")) by_name[e.at("name").get<std::string>()] = e;
    for (auto* m : nets.modules()) {
        for (auto& p : m->parameters()) {
            const auto it = by_name.find(p.name);
            if (it == by_name.end()) throw Error(Errc::DecodeError, "checkpoint lacks " + p.name);
            const auto shape = it->second.at("shape").get<std::array<int, 4>>();
            if (shape != p.tensor.shape()) throw Error(Errc::ShapeMismatch, "checkpoint shape differs for " + p.name);
            const auto off = it->second.at("offset").get<std::uint64_t>();
            if (off + 4 * p.tensor.size() > raw.size()) throw Error(Errc::TruncatedFile, "params.bin is truncated");
            auto val = p.tensor.value();
            for (std::size_t i = 0; i < val.size(); ++i) {
                std::uint32_t bits;
                std::memcpy(&bits, raw.data() + off + 4 * i, 4);
                if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
                val[i] = static_cast<double>(std::bit_cast<float>(bits));
            }
        }
    }
}

} // namespace dewater::gan
