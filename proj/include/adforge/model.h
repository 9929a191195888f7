#pragma once

#include <span>
#include <string>
#include <vector>

#include "adforge/adapters.h"
#include "adforge/base_weights.h"
#include "adforge/tape.h"
#include "adforge/tokenizer.h"

ADFORGE_NAMESPACE_BEGIN

// Pre-norm causal decoder over the byte vocabulary with a frozen base and an
// optional adapter set (LoRA on Q/V projections, or per-layer K/V prefixes).
//
// Positions are encoded by a fixed sinusoid scaled to the embedding init
// scale, so the base carries no position table.
class Model {
public:
    Model(ModelConfig config, BaseWeights weights);
    static Model Initialize(const ModelConfig &config);

    const ModelConfig &config() const { return config_; }
    const BaseWeights &weights() const { return weights_; }

    // Records the forward pass and returns logits [rows × vocab]. With
    // `logit_rows`, only those positions are projected to the vocabulary.
    VarId Forward(Tape &tape, std::span<const int> ids, const AdapterSet *adapters,
                  const std::vector<int64_t> *logit_rows = nullptr) const;

    // Logits [T × vocab] for every position.
    Tensor ForwardLogits(const TokenSeq &tokens, const AdapterSet *adapters) const;

    // Σ log p(c_i | prompt, c_<i) over the continuation plus a closing EOS,
    // divided by that token count when `normalize` is set.
    double ScoreContinuation(const TokenSeq &prompt, std::span<const int> continuation, const AdapterSet *adapters,
                             bool normalize = true) const;

    // Argmax decoding (ties to the lowest id) until EOS or `max_new` tokens.
    std::string GenerateGreedy(const TokenSeq &prompt, int max_new, const AdapterSet *adapters) const;

    // Length budget for the token sequence once the adapter prefix is counted.
    int64_t MaxTokens(const AdapterSet *adapters) const;

private:
    ModelConfig config_;
    BaseWeights weights_;
    Tensor positions_; // [max_seq × d_model]
};

// Fixed sinusoidal position table, scaled by 0.02.
Tensor SinusoidalPositions(int64_t max_seq, int64_t d_model);

ADFORGE_NAMESPACE_END
