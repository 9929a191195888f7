#include "adforge/model_config.h"

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

void ModelConfig::Validate() const {
    if (n_layers <= 0) {
        throw ConfigError("n_layers must be positive, got " + std::to_string(n_layers));
    }
    if (n_heads <= 0) {
        throw ConfigError("n_heads must be positive, got " + std::to_string(n_heads));
    }
    if (d_model <= 0 || d_model % n_heads != 0) {
        throw ConfigError("d_model " + std::to_string(d_model) + " must be a positive multiple of n_heads "
                          + std::to_string(n_heads));
    }
    if (d_ff <= 0) {
        throw ConfigError("d_ff must be positive, got " + std::to_string(d_ff));
    }
    if (vocab_size != kVocabSize) {
        throw ConfigError("vocab_size must be " + std::to_string(kVocabSize) + ", got " + std::to_string(vocab_size));
    }
    if (max_seq < 8) {
        throw ConfigError("max_seq must be at least 8, got " + std::to_string(max_seq));
    }
}

ModelConfig ModelConfigPreset(const std::string &name) {
    ModelConfig c;
    if (name == "toy") {
        return c;
    }
    if (name == "tiny") {
        c.n_layers = 2;
        c.n_heads = 4;
        c.d_model = 64;
        c.d_ff = 256;
        return c;
    }
    if (name == "toy8") {
        c.n_layers = 8;
        c.n_heads = 8;
        c.d_model = 256;
        c.d_ff = 1024;
        return c;
    }
    std::string names;
    for (const auto &n : ModelConfigPresetNames()) {
        names += (names.empty() ? "" : ", ") + n;
    }
    throw ConfigError("unknown model config '" + name + "' (available: " + names + ")");
}

std::vector<std::string> ModelConfigPresetNames() { return {"tiny", "toy", "toy8"}; }

ADFORGE_NAMESPACE_END
