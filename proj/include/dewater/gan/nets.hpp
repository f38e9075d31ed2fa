#pragma once

#include "dewater/gan/ops.hpp"
#include "dewater/random.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace dewater::gan {

struct NamedParam {
    std::string name;
    Tensor tensor;
};

/// Base for anything holding trainable tensors.
class Module {
public:
    [[nodiscard]] std::vector<NamedParam>& parameters() { return params_; }
    [[nodiscard]] const std::vector<NamedParam>& parameters() const { return params_; }

    [[nodiscard]] std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params_) n += p.tensor.size();
        return n;
    }

    void zero_grad() {
        for (auto& p : params_) p.tensor.zero_grad();
    }

protected:
    /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    Tensor add_param(const std::string& name, const Shape& shape, std::size_t fan_in, Rng& rng) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::vector<double> v(numel(shape));
        for (auto& x : v) x = rng.uniform(-bound, bound);
        auto t = Tensor::parameter(shape, std::move(v));
        params_.push_back({name, t});
        return t;
    }

    Tensor add_zero_param(const std::string& name, const Shape& shape) {
        auto t = Tensor::parameter(shape, std::vector<double>(numel(shape), 0.0));
        params_.push_back({name, t});
        return t;
    }

private:
    std::vector<NamedParam> params_;
};

struct ConvLayer {
    Tensor w, b;
    int stride = 1;
    int pad = 0;

    Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, pad); }
};

enum class GeneratorKind { Gd, Gs, Gt, Gj };

inline const char* generator_name(GeneratorKind k) {
    switch (k) {
    case GeneratorKind::Gd: return "Gd";
    case GeneratorKind::Gs: return "Gs";
    case GeneratorKind::Gt: return "Gt";
    case GeneratorKind::Gj: return "Gj";
    }
    return "?";
}

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::Gd;
    int in_channels = 3;
    int out_channels = 3;
    int depth = 3;
    int base_width = 16;
    bool squash = false; ///< sigmoid on the output

    static GeneratorSpec for_kind(GeneratorKind k) {
        GeneratorSpec s;
        s.kind = k;
        s.out_channels = (k == GeneratorKind::Gs || k == GeneratorKind::Gt) ? 1 : 3;
        s.squash = (k == GeneratorKind::Gs || k == GeneratorKind::Gt);
        return s;
    }
};

/**
 * U-Net: a 3x3 stem, (depth-1) stride-2 3x3 encoders doubling the width,
 * decoders that upsample, concatenate the skip and apply a 3x3 conv, then a
 * 1x1 head. Leaky ReLU (0.2) after every conv except the head.
 */
class UNetGenerator : public Module {
public:
    UNetGenerator(const GeneratorSpec& spec, std::uint64_t seed) : spec_(spec) {
        if (spec.depth < 1 || spec.base_width < 1 || spec.in_channels < 1 || spec.out_channels < 1) {
            throw Error(Errc::InvalidArgument, "generator spec needs positive depth, width and channels");
        }
        Rng rng(seed);
        const std::string pre = generator_name(spec.kind);
        int prev = spec.in_channels;
        for (int i = 0; i < spec.depth; ++i) {
            const int width = spec.base_width << i;
            encoders_.push_back(make_conv(pre + ".enc" + std::to_string(i), prev, width, 3, i == 0 ? 1 : 2, 1, rng));
            prev = width;
        }
        for (int i = spec.depth - 2; i >= 0; --i) {
            const int width = spec.base_width << i;
            decoders_.push_back(make_conv(pre + ".dec" + std::to_string(i), prev + width, width, 3, 1, 1, rng));
            prev = width;
        }
        head_ = make_conv(pre + ".head", prev, spec.out_channels, 1, 1, 0, rng);
    }

    [[nodiscard]] const GeneratorSpec& spec() const noexcept { return spec_; }

    /// Spatial extent must be divisible by 2^(depth-1).
    Tensor forward(const Tensor& x) const {
        const int div = 1 << (spec_.depth - 1);
        if (x.dim(1) != spec_.in_channels || x.dim(2) % div != 0 || x.dim(3) % div != 0) {
            throw Error(Errc::ShapeMismatch, std::string(generator_name(spec_.kind)) + " input " + shape_str(x.shape()));
        }
        std::vector<Tensor> skips;
        Tensor h = x;
        for (const auto& e : encoders_) {
            h = leaky_relu(e(h));
            skips.push_back(h);
        }
        for (std::size_t i = 0; i < decoders_.size(); ++i) {
            const Tensor& skip = skips[skips.size() - 2 - i];
            h = leaky_relu(decoders_[i](concat(upsample_nearest(h, 2), skip)));
        }
        h = head_(h);
        return spec_.squash ? sigmoid(h) : h;
    }

    /// Closed form for the parameter count.
    static std::size_t expected_parameter_count(const GeneratorSpec& s) {
        auto conv = [](std::size_t ci, std::size_t co, std::size_t k) { return co * ci * k * k + co; };
        std::size_t n = 0;
        std::size_t prev = static_cast<std::size_t>(s.in_channels);
        for (int i = 0; i < s.depth; ++i) {
            const auto w = static_cast<std::size_t>(s.base_width) << i;
            n += conv(prev, w, 3);
            prev = w;
        }
        for (int i = s.depth - 2; i >= 0; --i) {
            const auto w = static_cast<std::size_t>(s.base_width) << i;
            n += conv(prev + w, w, 3);
            prev = w;
        }
        return n + conv(prev, static_cast<std::size_t>(s.out_channels), 1);
    }

private:
    ConvLayer make_conv(const std::string& name, int ci, int co, int k, int stride, int pad, Rng& rng) {
        const auto fan_in = static_cast<std::size_t>(ci) * k * k;
        ConvLayer c;
        c.w = add_param(name + ".weight", {co, ci, k, k}, fan_in, rng);
        c.b = add_param(name + ".bias", {1, co, 1, 1}, fan_in, rng);
        c.stride = stride;
        c.pad = pad;
        return c;
    }

    GeneratorSpec spec_;
    std::vector<ConvLayer> encoders_;
    std::vector<ConvLayer> decoders_;
    ConvLayer head_;
};

struct DiscriminatorSpec {
    int image_size = 32;
    int in_channels = 6; ///< conditioning image and candidate, concatenated
    int patch = 4;
    int dim = 32;
    int mlp_hidden = 64;
};

/**
 * Patch embedding, one pre-norm single-head self-attention block with a tanh
 * MLP, mean pooling over tokens and a sigmoid head: one probability per image.
 */
class AttentionDiscriminator : public Module {
public:
    AttentionDiscriminator(const DiscriminatorSpec& spec, std::uint64_t seed) : spec_(spec) {
        if (spec.patch < 1 || spec.image_size % spec.patch != 0) {
            throw Error(Errc::ShapeMismatch, "image size must be divisible by the patch size");
        }
        Rng rng(seed);
        const int d = spec.dim, p = spec.patch;
        const auto fan_patch = static_cast<std::size_t>(spec.in_channels) * p * p;
        const auto dd = static_cast<std::size_t>(d);
        embed_.w = add_param("D.embed.weight", {d, spec.in_channels, p, p}, fan_patch, rng);
        embed_.b = add_param("D.embed.bias", {1, d, 1, 1}, fan_patch, rng);
        embed_.stride = p;
        pos_ = add_param("D.pos", {1, 1, tokens(), d}, dd, rng);
        wq_ = add_param("D.attn.q", {1, 1, d, d}, dd, rng);
        wk_ = add_param("D.attn.k", {1, 1, d, d}, dd, rng);
        wv_ = add_param("D.attn.v", {1, 1, d, d}, dd, rng);
        wo_ = add_param("D.attn.o", {1, 1, d, d}, dd, rng);
        w1_ = add_param("D.mlp.fc1.weight", {1, 1, d, spec.mlp_hidden}, dd, rng);
        b1_ = add_param("D.mlp.fc1.bias", {1, 1, 1, spec.mlp_hidden}, dd, rng);
        const auto fan_h = static_cast<std::size_t>(spec.mlp_hidden);
        w2_ = add_param("D.mlp.fc2.weight", {1, 1, spec.mlp_hidden, d}, fan_h, rng);
        b2_ = add_param("D.mlp.fc2.bias", {1, 1, 1, d}, fan_h, rng);
        wh_ = add_param("D.head.weight", {1, 1, d, 1}, dd, rng);
        bh_ = add_param("D.head.bias", {1, 1, 1, 1}, dd, rng);
    }

    [[nodiscard]] int tokens() const noexcept {
        const int g = spec_.image_size / spec_.patch;
        return g * g;
    }

    /// Probability that `candidate` is real given `condition`; shape (N,1,1,1).
    Tensor forward(const Tensor& condition, const Tensor& candidate) const {
        const Tensor x = concat(condition, candidate);
        if (x.dim(1) != spec_.in_channels || x.dim(2) != spec_.image_size || x.dim(3) != spec_.image_size) {
            throw Error(Errc::ShapeMismatch, "discriminator input " + shape_str(x.shape()));
        }
        return sigmoid(logit(x));
    }

    /// Pre-sigmoid score of an already concatenated input.
    Tensor logit(const Tensor& x) const {
        const int n = x.dim(0), d = spec_.dim, t = tokens();
        Tensor h = embed_(x);                              // (N, d, g, g)
        h = transpose(reshape(h, {n, 1, d, t}));           // (N, 1, t, d)
        h = add(h, pos_);

        const Tensor a = layer_norm(h);
        const Tensor q = matmul(a, wq_), k = matmul(a, wk_), v = matmul(a, wv_);
        const Tensor att = softmax(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(static_cast<double>(d))));
        h = add(h, matmul(matmul(att, v), wo_));

        const Tensor m = tanh(add(matmul(layer_norm(h), w1_), b1_));
        h = add(h, add(matmul(m, w2_), b2_));

        const Tensor pooled = mean_axis(h, 2);             // (N, 1, 1, d)
        return reshape(add(matmul(pooled, wh_), bh_), {n, 1, 1, 1});
    }

    [[nodiscard]] const DiscriminatorSpec& spec() const noexcept { return spec_; }

private:
    DiscriminatorSpec spec_;
    ConvLayer embed_;
    Tensor pos_, wq_, wk_, wv_, wo_, w1_, b1_, w2_, b2_, wh_, bh_;
};

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam over one module's parameters.
class Adam {
public:
    Adam(Module& module, const AdamConfig& cfg = {}) : module_(&module), cfg_(cfg) {
        for (const auto& p : module.parameters()) {
            m_.emplace_back(p.tensor.size(), 0.0);
            v_.emplace_back(p.tensor.size(), 0.0);
        }
    }

    /// Applies one update from the accumulated grads; missing grads count as zero.
    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        auto& params = module_->parameters();
        for (std::size_t i = 0; i < params.size(); ++i) {
            Tensor& p = params[i].tensor;
            const auto g = p.grad();
            if (g.empty()) continue;
            auto val = p.value();
            for (std::size_t j = 0; j < val.size(); ++j) {
                m_[i][j] = cfg_.beta1 * m_[i][j] + (1.0 - cfg_.beta1) * g[j];
                v_[i][j] = cfg_.beta2 * v_[i][j] + (1.0 - cfg_.beta2) * g[j] * g[j];
                const double mh = m_[i][j] / bc1, vh = v_[i][j] / bc2;
                val[j] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
            }
        }
    }

    [[nodiscard]] long steps() const noexcept { return t_; }
    [[nodiscard]] const AdamConfig& config() const noexcept { return cfg_; }

private:
    Module* module_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

} // namespace dewater::gan
