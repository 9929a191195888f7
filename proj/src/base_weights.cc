#include "adforge/base_weights.h"

#include <random>

ADFORGE_NAMESPACE_BEGIN

namespace {

constexpr Real kInitStd = Real(0.02);

BaseWeights Build(const ModelConfig &config, bool random) {
    config.Validate();
    std::mt19937_64 rng(config.seed);
    const int64_t d = config.d_model, ff = config.d_ff;
    auto matrix = [&](int64_t rows, int64_t cols) {
        return random ? Tensor::Gaussian({rows, cols}, kInitStd, rng) : Tensor::Zeros({rows, cols});
    };
    auto gain = [&](int64_t n) { return random ? Tensor::Filled({n}, Real(1)) : Tensor::Zeros({n}); };

    BaseWeights w;
    w.token_embedding = matrix(config.vocab_size, d);
    for (int l = 0; l < config.n_layers; ++l) {
        LayerWeights layer;
        layer.wq = matrix(d, d);
        layer.wk = matrix(d, d);
        layer.wv = matrix(d, d);
        layer.wo = matrix(d, d);
        layer.ff_in = matrix(ff, d);
        layer.ff_out = matrix(d, ff);
        layer.ln1_gain = gain(d);
        layer.ln1_bias = Tensor::Zeros({d});
        layer.ln2_gain = gain(d);
        layer.ln2_bias = Tensor::Zeros({d});
        w.layers.push_back(std::move(layer));
    }
    w.final_gain = gain(d);
    w.final_bias = Tensor::Zeros({d});
    return w;
}

template <typename Weights, typename Ptr>
std::vector<std::pair<std::string, Ptr>> CollectNamed(Weights &w) {
    std::vector<std::pair<std::string, Ptr>> out;
    out.emplace_back("token_embedding", &w.token_embedding);
    for (size_t l = 0; l < w.layers.size(); ++l) {
        auto &layer = w.layers[l];
        const std::string p = "layers." + std::to_string(l) + ".";
        out.emplace_back(p + "wq", &layer.wq);
        out.emplace_back(p + "wk", &layer.wk);
        out.emplace_back(p + "wv", &layer.wv);
        out.emplace_back(p + "wo", &layer.wo);
        out.emplace_back(p + "ff_in", &layer.ff_in);
        out.emplace_back(p + "ff_out", &layer.ff_out);
        out.emplace_back(p + "ln1_gain", &layer.ln1_gain);
        out.emplace_back(p + "ln1_bias", &layer.ln1_bias);
        out.emplace_back(p + "ln2_gain", &layer.ln2_gain);
        out.emplace_back(p + "ln2_bias", &layer.ln2_bias);
    }
    out.emplace_back("final_gain", &w.final_gain);
    out.emplace_back("final_bias", &w.final_bias);
    return out;
}

} // namespace

uint64_t Fnv1a(const void *data, size_t size, uint64_t seed) {
    uint64_t h = seed;
    const auto *bytes = static_cast<const unsigned char *>(data);
    for (size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

BaseWeights BaseWeights::Initialize(const ModelConfig &config) { return Build(config, true); }

BaseWeights BaseWeights::Zeros(const ModelConfig &config) { return Build(config, false); }

std::vector<std::pair<std::string, const Tensor *>> BaseWeights::Named() const {
    return CollectNamed<const BaseWeights, const Tensor *>(*this);
}

std::vector<std::pair<std::string, Tensor *>> BaseWeights::Named() {
    return CollectNamed<BaseWeights, Tensor *>(*this);
}

uint64_t BaseWeights::Checksum() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto &[name, t] : Named()) {
        h = Fnv1a(name.data(), name.size(), h);
        h = Fnv1a(t->shape().data(), t->shape().size() * sizeof(int64_t), h);
        h = Fnv1a(t->raw(), static_cast<size_t>(t->numel()) * sizeof(Real), h);
    }
    return h;
}

int64_t BaseWeights::ParameterCount() const {
    int64_t n = 0;
    for (const auto &[name, t] : Named()) {
        n += t->numel();
    }
    return n;
}

int64_t BaseParameterCount(const ModelConfig &config) {
    const int64_t d = config.d_model;
    const int64_t per_layer = 4 * d * d + 2 * d * config.d_ff + 4 * d;
    return config.vocab_size * d + config.n_layers * per_layer + 2 * d;
}

ADFORGE_NAMESPACE_END
