#include "adforge/model.h"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "adforge/error.h"
#include "adforge/ops.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

constexpr Real kPositionScale = Real(0.02);

void CheckWeights(const ModelConfig &config, const BaseWeights &w) {
    const int64_t d = config.d_model;
    auto expect = [](const Tensor &t, const Shape &shape, const std::string &name) {
        if (t.shape() != shape) {
            throw ConfigError("base weight " + name + " has shape " + ShapeToString(t.shape()) + ", expected "
                              + ShapeToString(shape));
        }
        if (t.trainable()) {
            throw ConfigError("base weight " + name + " must be frozen");
        }
    };
    if (static_cast<int>(w.layers.size()) != config.n_layers) {
        throw ConfigError("base weights have " + std::to_string(w.layers.size()) + " layers, config n_layers is "
                          + std::to_string(config.n_layers));
    }
    expect(w.token_embedding, {config.vocab_size, d}, "token_embedding");
    for (size_t l = 0; l < w.layers.size(); ++l) {
        const auto &layer = w.layers[l];
        const std::string p = "layers." + std::to_string(l) + ".";
        expect(layer.wq, {d, d}, p + "wq");
        expect(layer.wk, {d, d}, p + "wk");
        expect(layer.wv, {d, d}, p + "wv");
        expect(layer.wo, {d, d}, p + "wo");
        expect(layer.ff_in, {config.d_ff, d}, p + "ff_in");
        expect(layer.ff_out, {d, config.d_ff}, p + "ff_out");
        expect(layer.ln1_gain, {d}, p + "ln1_gain");
        expect(layer.ln1_bias, {d}, p + "ln1_bias");
        expect(layer.ln2_gain, {d}, p + "ln2_gain");
        expect(layer.ln2_bias, {d}, p + "ln2_bias");
    }
    expect(w.final_gain, {d}, "final_gain");
    expect(w.final_bias, {d}, "final_bias");
}

void CheckAdapters(const ModelConfig &config, const AdapterSet &adapters) {
    const auto d = config.d_model;
    if (const auto *lora = adapters.lora()) {
        if (static_cast<int>(lora->layers.size()) != config.n_layers) {
            throw ConfigError("lora adapter has " + std::to_string(lora->layers.size())
                              + " layers, model n_layers is " + std::to_string(config.n_layers));
        }
        for (const auto &[name, t] : lora->Named()) {
            const bool is_a = name.ends_with(".a");
            const Shape want = is_a ? Shape{lora->rank, d} : Shape{d, lora->rank};
            if (t->shape() != want) {
                throw ConfigError("adapter tensor " + name + " has shape " + ShapeToString(t->shape())
                                  + ", expected " + ShapeToString(want) + " for d_model " + std::to_string(d));
            }
        }
    } else if (const auto *prefix = adapters.prefix()) {
        if (prefix->prompt_len > 0 && static_cast<int>(prefix->layers.size()) != config.n_layers) {
            throw ConfigError("prefix adapter has " + std::to_string(prefix->layers.size())
                              + " layers, model n_layers is " + std::to_string(config.n_layers));
        }
        for (const auto &[name, t] : prefix->Named()) {
            if (t->shape() != Shape{prefix->prompt_len, d}) {
                throw ConfigError("adapter tensor " + name + " has shape " + ShapeToString(t->shape())
                                  + ", expected [" + std::to_string(prefix->prompt_len) + "x" + std::to_string(d) + "]");
            }
        }
    }
}

VarId Project(Tape &tape, VarId x, const Tensor &w, const LoraFactors *factors, Real alpha, int rank) {
    if (!factors) {
        return ops::Linear(tape, x, tape.Param(w));
    }
    return LoraApply(tape, x, tape.Param(w), tape.Param(factors->a), tape.Param(factors->b), alpha, rank);
}

} // namespace

Tensor SinusoidalPositions(int64_t max_seq, int64_t d_model) {
    Tensor table({max_seq, d_model});
    for (int64_t pos = 0; pos < max_seq; ++pos) {
        for (int64_t i = 0; i < d_model; ++i) {
            const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model));
            const double angle = static_cast<double>(pos) * freq;
            table.at(pos, i) = kPositionScale * static_cast<Real>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
        }
    }
    return table;
}

Model::Model(ModelConfig config, BaseWeights weights) : config_(config), weights_(std::move(weights)) {
    config_.Validate();
    CheckWeights(config_, weights_);
    positions_ = SinusoidalPositions(config_.max_seq, config_.d_model);
}

Model Model::Initialize(const ModelConfig &config) { return Model(config, BaseWeights::Initialize(config)); }

int64_t Model::MaxTokens(const AdapterSet *adapters) const {
    return config_.max_seq - (adapters ? adapters->prefix_len() : 0);
}

VarId Model::Forward(Tape &tape, std::span<const int> ids, const AdapterSet *adapters,
                     const std::vector<int64_t> *logit_rows) const {
    const auto seq = static_cast<int64_t>(ids.size());
    if (seq == 0) {
        throw SequenceLengthError("empty token sequence");
    }
    const LoraAdapter *lora = nullptr;
    const PrefixAdapter *prefix = nullptr;
    if (adapters) {
        CheckAdapters(config_, *adapters);
        lora = adapters->lora();
        prefix = adapters->prefix();
        if (prefix && prefix->prompt_len == 0) {
            prefix = nullptr;
        }
    }
    if (prefix) {
        if (prefix->prompt_len + seq > config_.max_seq) {
            throw SequenceLengthError("prefix length " + std::to_string(prefix->prompt_len)
                                      + " plus sequence length " + std::to_string(seq) + " exceeds max_seq "
                                      + std::to_string(config_.max_seq));
        }
    } else {
        CheckSequenceLength(seq, config_.max_seq, "token sequence");
    }

    const int64_t d = config_.d_model;
    std::vector<Real> pos(positions_.raw(), positions_.raw() + seq * d);
    const VarId embed = tape.Param(weights_.token_embedding);
    VarId x = ops::Add(tape, ops::Embedding(tape, embed, ids), tape.Constant(Tensor({seq, d}, std::move(pos))));

    for (int l = 0; l < config_.n_layers; ++l) {
        const auto &w = weights_.layers[static_cast<size_t>(l)];
        const LoraLayer *lora_layer = lora ? &lora->layers[static_cast<size_t>(l)] : nullptr;
        const LoraFactors *fq = lora_layer && lora_layer->query ? &*lora_layer->query : nullptr;
        const LoraFactors *fv = lora_layer && lora_layer->value ? &*lora_layer->value : nullptr;
        const Real alpha = lora ? lora->alpha : 0;
        const int rank = lora ? lora->rank : 0;

        const VarId h = ops::LayerNorm(tape, x, tape.Param(w.ln1_gain), tape.Param(w.ln1_bias));
        const VarId q = Project(tape, h, w.wq, fq, alpha, rank);
        VarId k = ops::Linear(tape, h, tape.Param(w.wk));
        VarId v = Project(tape, h, w.wv, fv, alpha, rank);
        int64_t n_prefix = 0;
        if (prefix) {
            std::tie(k, v) = PrefixInject(tape, k, v, prefix->layers[static_cast<size_t>(l)], config_.max_seq);
            n_prefix = prefix->prompt_len;
        }
        const VarId attn = ops::CausalAttention(tape, q, k, v, config_.n_heads, n_prefix);
        x = ops::Add(tape, x, ops::Linear(tape, attn, tape.Param(w.wo)));

        const VarId h2 = ops::LayerNorm(tape, x, tape.Param(w.ln2_gain), tape.Param(w.ln2_bias));
        const VarId ff = ops::Gelu(tape, ops::Linear(tape, h2, tape.Param(w.ff_in)));
        x = ops::Add(tape, x, ops::Linear(tape, ff, tape.Param(w.ff_out)));
    }

    x = ops::LayerNorm(tape, x, tape.Param(weights_.final_gain), tape.Param(weights_.final_bias));
    if (logit_rows) {
        x = ops::SelectRows(tape, x, *logit_rows);
    }
    return ops::Linear(tape, x, embed);
}

Tensor Model::ForwardLogits(const TokenSeq &tokens, const AdapterSet *adapters) const {
    Tape tape(/*grad_enabled=*/false);
    const VarId logits = Forward(tape, tokens.ids, adapters);
    Tensor out = tape.value(logits);
    return out;
}

double Model::ScoreContinuation(const TokenSeq &prompt, std::span<const int> continuation,
                                const AdapterSet *adapters, bool normalize) const {
    if (continuation.empty()) {
        throw Error("score_continuation: empty continuation");
    }
    if (prompt.empty()) {
        throw Error("score_continuation: empty prompt");
    }
    std::vector<int> ids = prompt.ids;
    // Position i predicts token i + 1, so the closing EOS is never an input.
    ids.insert(ids.end(), continuation.begin(), continuation.end());
    std::vector<int> targets(continuation.begin(), continuation.end());
    targets.push_back(kEosToken);

    std::vector<int64_t> rows;
    const auto first = static_cast<int64_t>(prompt.size()) - 1;
    for (size_t i = 0; i < targets.size(); ++i) {
        rows.push_back(first + static_cast<int64_t>(i));
    }

    Tape tape(/*grad_enabled=*/false);
    const Tensor &logits = tape.value(Forward(tape, ids, adapters, &rows));
    const int64_t vocab = logits.cols();
    double total = 0;
    for (size_t i = 0; i < targets.size(); ++i) {
        const Real *row = logits.raw() + static_cast<int64_t>(i) * vocab;
        const double mx = *std::max_element(row, row + vocab);
        double z = 0;
        for (int64_t c = 0; c < vocab; ++c) {
            z += std::exp(static_cast<double>(row[c]) - mx);
        }
        total += static_cast<double>(row[targets[i]]) - mx - std::log(z);
    }
    return normalize ? total / static_cast<double>(targets.size()) : total;
}

std::string Model::GenerateGreedy(const TokenSeq &prompt, int max_new, const AdapterSet *adapters) const {
    if (max_new < 1) {
        throw Error("generate: max_new must be at least 1");
    }
    std::vector<int> ids = prompt.ids;
    std::vector<int> generated;
    const int64_t budget = MaxTokens(adapters);
    for (int step = 0; step < max_new && static_cast<int64_t>(ids.size()) < budget; ++step) {
        std::vector<int64_t> last{static_cast<int64_t>(ids.size()) - 1};
        Tape tape(/*grad_enabled=*/false);
        const Tensor &logits = tape.value(Forward(tape, ids, adapters, &last));
        const auto row = logits.data();
        // max_element returns the first maximum, i.e. the lowest id.
        const int next = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        if (next == kEosToken) {
            break;
        }
        generated.push_back(next);
        ids.push_back(next);
    }
    return Detokenize(generated);
}

ADFORGE_NAMESPACE_END
