#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adforge/tokenizer.h"

ADFORGE_NAMESPACE_BEGIN

struct ModelConfig {
    int n_layers = 4;
    int n_heads = 4;
    int64_t d_model = 128;
    int64_t d_ff = 512;
    int64_t vocab_size = kVocabSize;
    int64_t max_seq = 256;
    uint64_t seed = 0;

    // Throws ConfigError naming the offending field.
    void Validate() const;
    int64_t head_dim() const { return d_model / n_heads; }

    friend bool operator==(const ModelConfig &, const ModelConfig &) = default;
};

// Named presets: "tiny" (2×64), "toy" (4×128, the default) and "toy8" (8×256).
ModelConfig ModelConfigPreset(const std::string &name);
std::vector<std::string> ModelConfigPresetNames();

ADFORGE_NAMESPACE_END
