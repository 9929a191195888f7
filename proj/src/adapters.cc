#include "adforge/adapters.h"

#include <algorithm>
#include <random>

#include "adforge/error.h"
#include "adforge/ops.h"
#include "adforge/tokenizer.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

constexpr Real kLoraInitStd = Real(0.02);
constexpr Real kPrefixInitStd = Real(0.02);

bool LayerTargeted(const LoraSpec &spec, int layer) {
    return spec.layers.empty() || std::find(spec.layers.begin(), spec.layers.end(), layer) != spec.layers.end();
}

template <typename Adapter, typename Ptr>
std::vector<std::pair<std::string, Ptr>> NamedLora(Adapter &adapter) {
    std::vector<std::pair<std::string, Ptr>> out;
    for (size_t l = 0; l < adapter.layers.size(); ++l) {
        auto &layer = adapter.layers[l];
        const std::string p = "lora.layers." + std::to_string(l) + ".";
        if (layer.query) {
            out.emplace_back(p + "q.a", &layer.query->a);
            out.emplace_back(p + "q.b", &layer.query->b);
        }
        if (layer.value) {
            out.emplace_back(p + "v.a", &layer.value->a);
            out.emplace_back(p + "v.b", &layer.value->b);
        }
    }
    return out;
}

template <typename Adapter, typename Ptr>
std::vector<std::pair<std::string, Ptr>> NamedPrefix(Adapter &adapter) {
    std::vector<std::pair<std::string, Ptr>> out;
    for (size_t l = 0; l < adapter.layers.size(); ++l) {
        const std::string p = "prefix.layers." + std::to_string(l) + ".";
        out.emplace_back(p + "keys", &adapter.layers[l].keys);
        out.emplace_back(p + "values", &adapter.layers[l].values);
    }
    return out;
}

void MergeInto(Tensor &w, const LoraFactors &f, Real scale, const std::string &name) {
    const int64_t out = w.dim(0), in = w.dim(1), r = f.a.dim(0);
    if (f.a.dim(1) != in || f.b.dim(0) != out || f.b.dim(1) != r) {
        throw ConfigError("lora merge: " + name + " factors A " + ShapeToString(f.a.shape()) + ", B "
                          + ShapeToString(f.b.shape()) + " do not fit weight " + ShapeToString(w.shape())
                          + " (d_model mismatch)");
    }
    for (int64_t i = 0; i < out; ++i) {
        for (int64_t j = 0; j < in; ++j) {
            Real delta = 0;
            for (int64_t k = 0; k < r; ++k) {
                delta += f.b.at(i, k) * f.a.at(k, j);
            }
            w.at(i, j) += scale * delta;
        }
    }
}

} // namespace

const char *AdapterKindName(AdapterKind kind) { return kind == AdapterKind::kLora ? "lora" : "prefix"; }

AdapterKind ParseAdapterKind(const std::string &name) {
    if (name == "lora") {
        return AdapterKind::kLora;
    }
    if (name == "prefix") {
        return AdapterKind::kPrefix;
    }
    throw ConfigError("unknown adapter kind '" + name + "' (expected lora or prefix)");
}

LoraAdapter LoraAdapter::Initialize(const ModelConfig &config, const LoraSpec &spec, uint64_t seed) {
    config.Validate();
    if (spec.rank <= 0 || spec.rank > config.d_model) {
        throw ConfigError("lora rank must be in [1, d_model=" + std::to_string(config.d_model) + "], got "
                          + std::to_string(spec.rank));
    }
    if (!(spec.alpha >= 0)) {
        throw ConfigError("lora alpha must be non-negative");
    }
    if (!spec.target_query && !spec.target_value) {
        throw ConfigError("lora needs at least one target projection");
    }
    for (int l : spec.layers) {
        if (l < 0 || l >= config.n_layers) {
            throw ConfigError("lora target layer " + std::to_string(l) + " outside n_layers "
                              + std::to_string(config.n_layers));
        }
    }
    std::mt19937_64 rng(seed);
    const int64_t d = config.d_model, r = spec.rank;
    auto factors = [&] {
        LoraFactors f;
        f.a = Tensor::Gaussian({r, d}, kLoraInitStd, rng, /*trainable=*/true);
        f.b = Tensor::Zeros({d, r}, /*trainable=*/true);
        return f;
    };
    LoraAdapter adapter;
    adapter.rank = spec.rank;
    adapter.alpha = spec.alpha;
    adapter.layers.resize(static_cast<size_t>(config.n_layers));
    for (int l = 0; l < config.n_layers; ++l) {
        if (!LayerTargeted(spec, l)) {
            continue;
        }
        if (spec.target_query) {
            adapter.layers[static_cast<size_t>(l)].query = factors();
        }
        if (spec.target_value) {
            adapter.layers[static_cast<size_t>(l)].value = factors();
        }
    }
    return adapter;
}

std::vector<std::pair<std::string, const Tensor *>> LoraAdapter::Named() const {
    return NamedLora<const LoraAdapter, const Tensor *>(*this);
}

std::vector<std::pair<std::string, Tensor *>> LoraAdapter::Named() { return NamedLora<LoraAdapter, Tensor *>(*this); }

PrefixAdapter PrefixAdapter::Initialize(const ModelConfig &config, const PrefixSpec &spec, uint64_t seed) {
    config.Validate();
    if (spec.prompt_len < 0 || spec.prompt_len >= config.max_seq) {
        throw ConfigError("prefix length must be in [0, max_seq=" + std::to_string(config.max_seq) + "), got "
                          + std::to_string(spec.prompt_len));
    }
    std::mt19937_64 rng(seed);
    PrefixAdapter adapter;
    adapter.prompt_len = spec.prompt_len;
    if (spec.prompt_len == 0) {
        return adapter;
    }
    const int64_t p = spec.prompt_len, d = config.d_model;
    for (int l = 0; l < config.n_layers; ++l) {
        PrefixLayer layer;
        layer.keys = Tensor::Gaussian({p, d}, kPrefixInitStd, rng, /*trainable=*/true);
        layer.values = Tensor::Gaussian({p, d}, kPrefixInitStd, rng, /*trainable=*/true);
        adapter.layers.push_back(std::move(layer));
    }
    return adapter;
}

std::vector<std::pair<std::string, const Tensor *>> PrefixAdapter::Named() const {
    return NamedPrefix<const PrefixAdapter, const Tensor *>(*this);
}

std::vector<std::pair<std::string, Tensor *>> PrefixAdapter::Named() {
    return NamedPrefix<PrefixAdapter, Tensor *>(*this);
}

AdapterSet AdapterSet::Initialize(const ModelConfig &config, const AdapterSpec &spec, uint64_t seed) {
    AdapterSet set;
    if (spec.kind == AdapterKind::kLora) {
        set.adapter = LoraAdapter::Initialize(config, spec.lora, seed);
    } else {
        set.adapter = PrefixAdapter::Initialize(config, spec.prefix, seed);
    }
    return set;
}

AdapterKind AdapterSet::kind() const { return lora() ? AdapterKind::kLora : AdapterKind::kPrefix; }

std::vector<std::pair<std::string, const Tensor *>> AdapterSet::Named() const {
    return std::visit([](const auto &a) { return a.Named(); }, adapter);
}

std::vector<std::pair<std::string, Tensor *>> AdapterSet::Named() {
    return std::visit([](auto &a) { return a.Named(); }, adapter);
}

int64_t AdapterSet::ParameterCount() const {
    int64_t n = 0;
    for (const auto &[name, t] : Named()) {
        n += t->numel();
    }
    return n;
}

VarId LoraApply(Tape &tape, VarId x, VarId w, VarId a, VarId b, Real alpha, int rank) {
    const auto &tw = tape.value(w);
    const auto &ta = tape.value(a);
    const auto &tb = tape.value(b);
    if (rank <= 0 || ta.rank() != 2 || tb.rank() != 2 || ta.dim(0) != rank || tb.dim(1) != rank
        || ta.dim(1) != tw.dim(1) || tb.dim(0) != tw.dim(0)) {
        throw ShapeError("lora_apply: rank " + std::to_string(rank) + " with W " + ShapeToString(tw.shape()) + ", A "
                         + ShapeToString(ta.shape()) + ", B " + ShapeToString(tb.shape()));
    }
    const VarId frozen = ops::Linear(tape, x, w);
    const VarId low_rank = ops::Linear(tape, ops::Linear(tape, x, a), b);
    return ops::Add(tape, frozen, ops::Scale(tape, low_rank, alpha / static_cast<Real>(rank)));
}

BaseWeights LoraMerge(const BaseWeights &weights, const ModelConfig &config, const LoraAdapter &adapter) {
    if (weights.lora_merged) {
        throw ConfigError("weights already contain a merged LoRA delta");
    }
    if (static_cast<int>(weights.layers.size()) != config.n_layers) {
        throw ConfigError("lora merge: weights have " + std::to_string(weights.layers.size())
                          + " layers but config n_layers is " + std::to_string(config.n_layers));
    }
    if (adapter.layers.size() != weights.layers.size()) {
        throw ConfigError("lora merge: adapter has " + std::to_string(adapter.layers.size())
                          + " layers but model n_layers is " + std::to_string(weights.layers.size()));
    }
    BaseWeights merged = weights;
    const Real scale = adapter.scale();
    for (size_t l = 0; l < adapter.layers.size(); ++l) {
        const auto &layer = adapter.layers[l];
        if (layer.query) {
            MergeInto(merged.layers[l].wq, *layer.query, scale, "layer " + std::to_string(l) + " query");
        }
        if (layer.value) {
            MergeInto(merged.layers[l].wv, *layer.value, scale, "layer " + std::to_string(l) + " value");
        }
    }
    merged.lora_merged = true;
    return merged;
}

std::pair<VarId, VarId> PrefixInject(Tape &tape, VarId k, VarId v, const PrefixLayer &layer, int64_t max_seq) {
    const int64_t p = layer.keys.dim(0);
    const int64_t seq = tape.value(k).dim(0);
    if (p + seq > max_seq) {
        throw SequenceLengthError("prefix length " + std::to_string(p) + " plus sequence length "
                                  + std::to_string(seq) + " exceeds max_seq " + std::to_string(max_seq));
    }
    if (layer.values.shape() != layer.keys.shape()) {
        throw ShapeError("prefix keys " + ShapeToString(layer.keys.shape()) + " and values "
                         + ShapeToString(layer.values.shape()) + " differ");
    }
    return {ops::ConcatRows(tape, tape.Param(layer.keys), k), ops::ConcatRows(tape, tape.Param(layer.values), v)};
}

ParameterCount CountTrainable(const ModelConfig &config, const AdapterSpec &spec) {
    ParameterCount count;
    count.base = BaseParameterCount(config);
    const int64_t d = config.d_model;
    if (spec.kind == AdapterKind::kPrefix) {
        count.trainable = static_cast<int64_t>(config.n_layers) * 2 * spec.prefix.prompt_len * d;
    } else {
        const int64_t layers =
            spec.lora.layers.empty() ? config.n_layers : static_cast<int64_t>(spec.lora.layers.size());
        const int64_t targets = layers * ((spec.lora.target_query ? 1 : 0) + (spec.lora.target_value ? 1 : 0));
        count.trainable = targets * 2 * spec.lora.rank * d;
    }
    count.ratio = count.trainable == 0
        ? 0.0
        : static_cast<double>(count.trainable) / static_cast<double>(count.trainable + count.base);
    return count;
}

ADFORGE_NAMESPACE_END
