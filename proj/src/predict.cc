#include "adforge/predict.h"

#include <algorithm>
#include <cctype>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

// Headroom past the longest class name so generate mode can overrun a label
// and still be parsed.
constexpr int kGenerateSlack = 8;

bool IsTrimmed(unsigned char c) { return std::isspace(c) || std::ispunct(c); }

} // namespace

const char *DecisionModeName(DecisionMode mode) { return mode == DecisionMode::kScore ? "score" : "generate"; }

DecisionMode ParseDecisionMode(const std::string &name) {
    if (name == "score") {
        return DecisionMode::kScore;
    }
    if (name == "generate") {
        return DecisionMode::kGenerate;
    }
    throw ConfigError("unknown decision mode '" + name + "' (expected score or generate)");
}

int ParseLabel(std::string_view text, const LabelSchema &schema) {
    size_t begin = 0, end = text.size();
    while (begin < end && IsTrimmed(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && IsTrimmed(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    const std::string answer = ToLower(text.substr(begin, end - begin));
    if (answer.empty()) {
        return kInvalidPrediction;
    }
    if (auto resolved = schema.Resolve(answer)) {
        return resolved->value_or(kInvalidPrediction);
    }

    std::vector<int> hits;
    for (int c = 0; c < schema.size(); ++c) {
        if (answer.find(ToLower(schema.ClassName(c))) != std::string::npos) {
            hits.push_back(c);
        }
    }
    // "weakly negative" also contains "negative"; keep only the longest reading.
    const std::vector<int> matched = hits;
    std::erase_if(hits, [&](int c) {
        const std::string name = ToLower(schema.ClassName(c));
        return std::any_of(matched.begin(), matched.end(), [&](int o) {
            const std::string other = ToLower(schema.ClassName(o));
            return o != c && other.size() > name.size() && other.find(name) != std::string::npos;
        });
    });
    return hits.size() == 1 ? hits.front() : kInvalidPrediction;
}

Predictor::Predictor(const Model &model, const AdapterSet *adapters, LabelSchema schema, DecisionMode mode)
    : model_(model), adapters_(adapters), schema_(std::move(schema)), mode_(mode) {
    size_t longest = 0;
    for (const auto &name : schema_.classes) {
        class_tokens_.push_back(TokenizeBytes(name));
        longest = std::max(longest, name.size());
    }
    max_new_ = static_cast<int>(longest) + kGenerateSlack;
}

std::vector<double> Predictor::ClassScores(std::string_view text) const {
    const TokenSeq prompt = Tokenize(BuildPrompt(text, schema_));
    std::vector<double> scores;
    scores.reserve(class_tokens_.size());
    for (const auto &cls : class_tokens_) {
        scores.push_back(model_.ScoreContinuation(prompt, cls, adapters_));
    }
    return scores;
}

std::string Predictor::Generate(std::string_view text) const {
    const TokenSeq prompt = Tokenize(BuildPrompt(text, schema_));
    const int64_t room = model_.MaxTokens(adapters_) - static_cast<int64_t>(prompt.size());
    CheckSequenceLength(static_cast<int64_t>(prompt.size()) + 1, model_.MaxTokens(adapters_), "prompt");
    return model_.GenerateGreedy(prompt, static_cast<int>(std::min<int64_t>(max_new_, room)), adapters_);
}

int Predictor::Predict(std::string_view text) const {
    if (mode_ == DecisionMode::kGenerate) {
        return ParseLabel(Generate(text), schema_);
    }
    const auto scores = ClassScores(text);
    // max_element keeps the first maximum, so ties go to the lowest index.
    return static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

std::vector<int> Predictor::PredictAll(const std::vector<Record> &records) const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto &r : records) {
        out.push_back(Predict(r.text));
    }
    return out;
}

ConfusionMatrix Predictor::Evaluate(const std::vector<Record> &records) const {
    ConfusionMatrix cm(schema_.size());
    for (const auto &r : records) {
        cm.Add(r.label, Predict(r.text));
    }
    return cm;
}

void CheckCheckpointSchema(const Checkpoint &checkpoint, const LabelSchema &schema) {
    if (!checkpoint.schema.empty() && checkpoint.schema != schema.name) {
        throw ConfigError("checkpoint was trained for schema '" + checkpoint.schema + "', not '" + schema.name + "'");
    }
}

std::vector<int> PredictDataset(const std::vector<Record> &records, const LabelSchema &schema,
                                const Checkpoint &checkpoint, DecisionMode mode) {
    CheckCheckpointSchema(checkpoint, schema);
    const Model model(checkpoint.config, checkpoint.base);
    const AdapterSet *adapters = checkpoint.adapters ? &*checkpoint.adapters : nullptr;
    return Predictor(model, adapters, schema, mode).PredictAll(records);
}

ADFORGE_NAMESPACE_END
