#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "adforge/base_weights.h"
#include "adforge/tape.h"

ADFORGE_NAMESPACE_BEGIN

enum class AdapterKind { kLora, kPrefix };

const char *AdapterKindName(AdapterKind kind);
AdapterKind ParseAdapterKind(const std::string &name);

struct LoraSpec {
    int rank = 8;
    Real alpha = 16;
    bool target_query = true;
    bool target_value = true;
    // Layers that receive factors; empty means every layer.
    std::vector<int> layers;
};

struct PrefixSpec {
    int prompt_len = 32;
};

// What to attach before training. The LoRA and prefix mechanisms are
// mutually exclusive.
struct AdapterSpec {
    AdapterKind kind = AdapterKind::kLora;
    LoraSpec lora;
    PrefixSpec prefix;
};

// ΔW = (alpha / rank) · B · A with A [rank × d_in] and B [d_out × rank].
struct LoraFactors {
    Tensor a;
    Tensor b;
};

struct LoraLayer {
    std::optional<LoraFactors> query;
    std::optional<LoraFactors> value;
};

struct LoraAdapter {
    int rank = 8;
    Real alpha = 16;
    std::vector<LoraLayer> layers;

    // A ~ Gaussian(0, 0.02) from `seed`, B = 0, so the initial delta is zero.
    static LoraAdapter Initialize(const ModelConfig &config, const LoraSpec &spec, uint64_t seed);

    Real scale() const { return alpha / static_cast<Real>(rank); }
    std::vector<std::pair<std::string, const Tensor *>> Named() const;
    std::vector<std::pair<std::string, Tensor *>> Named();
};

// Per-layer trainable key/value rows prepended to the attention inputs.
struct PrefixLayer {
    Tensor keys;   // [prompt_len × d_model]
    Tensor values; // [prompt_len × d_model]
};

struct PrefixAdapter {
    int prompt_len = 32;
    // Empty when prompt_len == 0.
    std::vector<PrefixLayer> layers;

    static PrefixAdapter Initialize(const ModelConfig &config, const PrefixSpec &spec, uint64_t seed);

    std::vector<std::pair<std::string, const Tensor *>> Named() const;
    std::vector<std::pair<std::string, Tensor *>> Named();
};

struct AdapterProvenance {
    std::string schema;
    uint64_t train_config_hash = 0;
};

struct AdapterSet {
    std::variant<LoraAdapter, PrefixAdapter> adapter;
    AdapterProvenance provenance;

    static AdapterSet Initialize(const ModelConfig &config, const AdapterSpec &spec, uint64_t seed);

    AdapterKind kind() const;
    const LoraAdapter *lora() const { return std::get_if<LoraAdapter>(&adapter); }
    LoraAdapter *lora() { return std::get_if<LoraAdapter>(&adapter); }
    const PrefixAdapter *prefix() const { return std::get_if<PrefixAdapter>(&adapter); }
    PrefixAdapter *prefix() { return std::get_if<PrefixAdapter>(&adapter); }
    int64_t prefix_len() const { return prefix() ? prefix()->prompt_len : 0; }

    std::vector<std::pair<std::string, const Tensor *>> Named() const;
    std::vector<std::pair<std::string, Tensor *>> Named();
    int64_t ParameterCount() const;
};

// x·Wᵀ + (alpha/rank)·(x·Aᵀ)·Bᵀ, the row-major form of W·x + (alpha/rank)·B·A·x.
// Gradients reach A and B only (W is frozen).
VarId LoraApply(Tape &tape, VarId x, VarId w, VarId a, VarId b, Real alpha, int rank);

// Returns a copy of `weights` with every targeted projection replaced by
// W + (alpha/rank)·B·A. The result carries no adapter structure.
BaseWeights LoraMerge(const BaseWeights &weights, const ModelConfig &config, const LoraAdapter &adapter);

// Prepends the layer prefix to k and v. Throws SequenceLengthError naming
// the prefix length, sequence length and max_seq on overflow.
std::pair<VarId, VarId> PrefixInject(Tape &tape, VarId k, VarId v, const PrefixLayer &layer, int64_t max_seq);

struct ParameterCount {
    int64_t trainable = 0;
    int64_t base = 0;
    // trainable / (trainable + base)
    double ratio = 0;
};

// Closed-form counts: prefix = L·2·p·d_model, LoRA = Σ_targets 2·r·d_model.
ParameterCount CountTrainable(const ModelConfig &config, const AdapterSpec &spec);

ADFORGE_NAMESPACE_END
