#include "adforge/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using nlohmann::json;
using Kind = CheckpointError::Kind;

json ConfigToJson(const ModelConfig &c) {
    return {{"n_layers", c.n_layers}, {"n_heads", c.n_heads},       {"d_model", c.d_model}, {"d_ff", c.d_ff},
            {"vocab_size", c.vocab_size}, {"max_seq", c.max_seq}, {"seed", c.seed}};
}

ModelConfig ConfigFromJson(const json &j) {
    ModelConfig c;
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_model = j.at("d_model").get<int64_t>();
    c.d_ff = j.at("d_ff").get<int64_t>();
    c.vocab_size = j.at("vocab_size").get<int64_t>();
    c.max_seq = j.at("max_seq").get<int64_t>();
    c.seed = j.at("seed").get<uint64_t>();
    return c;
}

json AdapterToJson(const AdapterSet &set) {
    json j = {{"kind", AdapterKindName(set.kind())},
              {"schema", set.provenance.schema},
              {"train_config_hash", set.provenance.train_config_hash}};
    if (const auto *lora = set.lora()) {
        bool q = false, v = false;
        json layers = json::array();
        for (size_t l = 0; l < lora->layers.size(); ++l) {
            const auto &layer = lora->layers[l];
            q = q || layer.query.has_value();
            v = v || layer.value.has_value();
            if (layer.query || layer.value) {
                layers.push_back(l);
            }
        }
        j["rank"] = lora->rank;
        j["alpha"] = static_cast<double>(lora->alpha);
        j["target_query"] = q;
        j["target_value"] = v;
        j["layers"] = layers;
    } else {
        j["prompt_len"] = set.prefix()->prompt_len;
    }
    return j;
}

AdapterSet AdapterSkeleton(const ModelConfig &config, const json &j) {
    AdapterSpec spec;
    spec.kind = ParseAdapterKind(j.at("kind").get<std::string>());
    if (spec.kind == AdapterKind::kLora) {
        spec.lora.rank = j.at("rank").get<int>();
        spec.lora.alpha = static_cast<Real>(j.at("alpha").get<double>());
        spec.lora.target_query = j.at("target_query").get<bool>();
        spec.lora.target_value = j.at("target_value").get<bool>();
        spec.lora.layers = j.at("layers").get<std::vector<int>>();
        if (spec.lora.layers.empty()) {
            throw ConfigError("lora adapter without target layers");
        }
    } else {
        spec.prefix.prompt_len = j.at("prompt_len").get<int>();
    }
    AdapterSet set = AdapterSet::Initialize(config, spec, 0);
    set.provenance.schema = j.at("schema").get<std::string>();
    set.provenance.train_config_hash = j.at("train_config_hash").get<uint64_t>();
    return set;
}

struct TableEntry {
    std::string name;
    Shape shape;
    int64_t bytes = 0;
};

std::vector<TableEntry> ParseTable(const json &header) {
    if (!header.contains("tensors") || !header["tensors"].is_array()) {
        throw CheckpointError(Kind::kShapeTable, "checkpoint header has no tensor table");
    }
    std::vector<TableEntry> table;
    for (const auto &e : header["tensors"]) {
        if (!e.is_object() || !e.contains("name") || !e.contains("dtype") || !e.contains("shape")
            || !e["name"].is_string() || !e["shape"].is_array()) {
            throw CheckpointError(Kind::kShapeTable, "malformed tensor table entry " + e.dump());
        }
        if (e["dtype"] != "f32") {
            throw CheckpointError(Kind::kShapeTable, "tensor " + e["name"].get<std::string>() + " has dtype "
                                                          + e["dtype"].dump() + ", expected \"f32\"");
        }
        TableEntry entry;
        entry.name = e["name"].get<std::string>();
        for (const auto &d : e["shape"]) {
            if (!d.is_number_integer() || d.get<int64_t>() <= 0) {
                throw CheckpointError(Kind::kShapeTable, "tensor " + entry.name + " has invalid shape " + e["shape"].dump());
            }
            entry.shape.push_back(d.get<int64_t>());
        }
        if (entry.shape.empty() || entry.shape.size() > 3) {
            throw CheckpointError(Kind::kShapeTable, "tensor " + entry.name + " has rank " + std::to_string(entry.shape.size()));
        }
        entry.bytes = NumElements(entry.shape) * 4;
        table.push_back(std::move(entry));
    }
    return table;
}

void AppendTensor(std::string &out, const Tensor &t) {
    const size_t offset = out.size();
    out.resize(offset + static_cast<size_t>(t.numel()) * 4);
    char *dst = out.data() + offset;
    for (int64_t i = 0; i < t.numel(); ++i) {
        const float v = static_cast<float>(t[i]);
        std::memcpy(dst + i * 4, &v, 4);
    }
}

} // namespace

std::string SerializeCheckpoint(const Checkpoint &ckpt) {
    std::vector<std::pair<std::string, const Tensor *>> tensors = ckpt.base.Named();
    if (ckpt.adapters) {
        auto named = ckpt.adapters->Named();
        tensors.insert(tensors.end(), named.begin(), named.end());
    }

    json table = json::array();
    for (const auto &[name, t] : tensors) {
        table.push_back({{"name", name}, {"dtype", "f32"}, {"shape", t->shape()}});
    }
    json meta = {{"steps", ckpt.metadata.steps},
                 {"final_loss", ckpt.metadata.final_loss ? json(*ckpt.metadata.final_loss) : json(nullptr)},
                 {"seed", ckpt.metadata.seed},
                 {"loss_curve", ckpt.metadata.loss_curve},
                 {"lora_merged", ckpt.base.lora_merged},
                 {"base_checksum", ckpt.base.Checksum()},
                 {"adapter", ckpt.adapters ? AdapterToJson(*ckpt.adapters) : json(nullptr)}};
    json header = {{"version", kCheckpointVersion},
                   {"model_config", ConfigToJson(ckpt.config)},
                   {"schema", ckpt.schema},
                   {"metadata", meta},
                   {"tensors", table}};
    const std::string text = header.dump();

    std::string out(kCheckpointMagic);
    const auto len = static_cast<uint32_t>(text.size());
    char len_bytes[4];
    std::memcpy(len_bytes, &len, 4);
    out.append(len_bytes, 4);
    out += text;
    for (const auto &[name, t] : tensors) {
        AppendTensor(out, *t);
    }
    return out;
}

Checkpoint DeserializeCheckpoint(std::string_view bytes) {
    const size_t magic_len = kCheckpointMagic.size();
    if (bytes.substr(0, magic_len) != kCheckpointMagic.substr(0, std::min(magic_len, bytes.size()))) {
        throw CheckpointError(Kind::kBadMagic, "not an ADFORGE1 checkpoint (bad magic)");
    }
    if (bytes.size() < magic_len + 4) {
        throw CheckpointError(Kind::kTruncated, "checkpoint truncated inside the preamble");
    }
    uint32_t header_len = 0;
    std::memcpy(&header_len, bytes.data() + magic_len, 4);
    const size_t payload_start = magic_len + 4 + header_len;
    if (payload_start > bytes.size()) {
        throw CheckpointError(Kind::kTruncated, "checkpoint truncated inside the header");
    }

    json header;
    try {
        header = json::parse(bytes.substr(magic_len + 4, header_len));
    } catch (const json::parse_error &e) {
        throw CheckpointError(Kind::kMalformedHeader, std::string("checkpoint header is not valid JSON: ") + e.what());
    }
    if (!header.is_object() || !header.contains("version") || !header["version"].is_number_integer()) {
        throw CheckpointError(Kind::kMalformedHeader, "checkpoint header lacks a version");
    }
    if (header["version"].get<int64_t>() != kCheckpointVersion) {
        throw CheckpointError(Kind::kVersionMismatch, "checkpoint version " + header["version"].dump()
                                                          + " is not supported (expected "
                                                          + std::to_string(kCheckpointVersion) + ")");
    }

    const auto table = ParseTable(header);
    const size_t payload = bytes.size() - payload_start;
    size_t declared = 0;
    size_t whole_tensors = 0;
    bool on_boundary = payload == 0;
    for (const auto &e : table) {
        declared += static_cast<size_t>(e.bytes);
        if (declared <= payload) {
            ++whole_tensors;
            on_boundary = on_boundary || declared == payload;
        }
    }
    if (payload > declared) {
        throw CheckpointError(Kind::kLengthMismatch, "payload holds " + std::to_string(payload) + " bytes, table declares "
                                                         + std::to_string(declared));
    }
    if (payload < declared) {
        if (on_boundary) {
            throw CheckpointError(Kind::kLengthMismatch, "header declares " + std::to_string(table.size())
                                                             + " tensors, payload holds "
                                                             + std::to_string(whole_tensors));
        }
        throw CheckpointError(Kind::kTruncated, "checkpoint payload truncated: " + std::to_string(payload) + " of "
                                                    + std::to_string(declared) + " bytes");
    }

    Checkpoint ckpt;
    std::optional<AdapterSet> adapters;
    try {
        ckpt.config = ConfigFromJson(header.at("model_config"));
        ckpt.config.Validate();
        ckpt.schema = header.at("schema").get<std::string>();
        const auto &meta = header.at("metadata");
        ckpt.metadata.steps = meta.at("steps").get<int64_t>();
        if (!meta.at("final_loss").is_null()) {
            ckpt.metadata.final_loss = meta.at("final_loss").get<double>();
        }
        ckpt.metadata.seed = meta.at("seed").get<uint64_t>();
        ckpt.metadata.loss_curve = meta.at("loss_curve").get<std::vector<double>>();
        ckpt.base = BaseWeights::Zeros(ckpt.config);
        ckpt.base.lora_merged = meta.at("lora_merged").get<bool>();
        if (!meta.at("adapter").is_null()) {
            adapters = AdapterSkeleton(ckpt.config, meta.at("adapter"));
        }
    } catch (const json::exception &e) {
        throw CheckpointError(Kind::kMalformedHeader, std::string("checkpoint header: ") + e.what());
    } catch (const ConfigError &e) {
        throw CheckpointError(Kind::kMalformedHeader, std::string("checkpoint header: ") + e.what());
    }

    std::map<std::string, Tensor *> expected;
    for (auto &[name, t] : ckpt.base.Named()) {
        expected[name] = t;
    }
    if (adapters) {
        for (auto &[name, t] : adapters->Named()) {
            expected[name] = t;
        }
    }
    if (expected.size() != table.size()) {
        throw CheckpointError(Kind::kShapeTable, "tensor table lists " + std::to_string(table.size())
                                                     + " tensors, model layout needs " + std::to_string(expected.size()));
    }
    size_t offset = payload_start;
    for (const auto &e : table) {
        auto it = expected.find(e.name);
        if (it == expected.end()) {
            throw CheckpointError(Kind::kShapeTable, "unexpected tensor " + e.name);
        }
        Tensor &dst = *it->second;
        if (dst.shape() != e.shape) {
            throw CheckpointError(Kind::kShapeTable, "tensor " + e.name + " has shape " + ShapeToString(e.shape)
                                                         + ", layout needs " + ShapeToString(dst.shape()));
        }
        expected.erase(it);
        for (int64_t i = 0; i < dst.numel(); ++i) {
            float v;
            std::memcpy(&v, bytes.data() + offset + static_cast<size_t>(i) * 4, 4);
            dst[i] = static_cast<Real>(v);
        }
        offset += static_cast<size_t>(e.bytes);
    }
    ckpt.adapters = std::move(adapters);
    return ckpt;
}

void SaveCheckpoint(const Checkpoint &checkpoint, const std::filesystem::path &path) {
    const std::string bytes = SerializeCheckpoint(checkpoint);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CheckpointError(Kind::kIo, "cannot write checkpoint " + path.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw CheckpointError(Kind::kIo, "failed writing checkpoint " + path.string());
    }
}

Checkpoint LoadCheckpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError(Kind::kIo, "cannot open checkpoint " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return DeserializeCheckpoint(buf.str());
}

Checkpoint BaselineCheckpoint(const ModelConfig &config) {
    Checkpoint ckpt;
    ckpt.config = config;
    ckpt.base = BaseWeights::Initialize(config);
    return ckpt;
}

Checkpoint MergeCheckpoint(const Checkpoint &checkpoint) {
    if (!checkpoint.adapters) {
        throw ConfigError("checkpoint has no adapter to merge");
    }
    const auto *lora = checkpoint.adapters->lora();
    if (!lora) {
        throw ConfigError("prefix adapters are not mergeable");
    }
    Checkpoint merged;
    merged.config = checkpoint.config;
    merged.base = LoraMerge(checkpoint.base, checkpoint.config, *lora);
    merged.schema = checkpoint.schema;
    merged.metadata = checkpoint.metadata;
    return merged;
}

ADFORGE_NAMESPACE_END
