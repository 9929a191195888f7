#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "adforge/model_config.h"
#include "adforge/tensor.h"

ADFORGE_NAMESPACE_BEGIN

struct LayerWeights {
    // Projections are stored [out × in].
    Tensor wq, wk, wv, wo;
    Tensor ff_in;  // [d_ff × d_model]
    Tensor ff_out; // [d_model × d_ff]
    Tensor ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

// Frozen parameters of the decoder. The output projection is tied to the
// token embedding.
struct BaseWeights {
    Tensor token_embedding; // [vocab × d_model]
    std::vector<LayerWeights> layers;
    Tensor final_gain, final_bias;
    // Set once a LoRA delta has been folded in.
    bool lora_merged = false;

    // Gaussian(0, 0.02) matrices from `config.seed`, unit gains, zero biases.
    static BaseWeights Initialize(const ModelConfig &config);
    // Every tensor zero (gains too): the model emits all-zero logits.
    static BaseWeights Zeros(const ModelConfig &config);

    std::vector<std::pair<std::string, const Tensor *>> Named() const;
    std::vector<std::pair<std::string, Tensor *>> Named();

    // FNV-1a over tensor names, shapes and raw bytes.
    uint64_t Checksum() const;
    int64_t ParameterCount() const;
};

// Closed-form parameter count of BaseWeights for a config.
int64_t BaseParameterCount(const ModelConfig &config);

uint64_t Fnv1a(const void *data, size_t size, uint64_t seed = 0xcbf29ce484222325ULL);

ADFORGE_NAMESPACE_END
