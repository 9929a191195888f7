#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adforge/checkpoint.h"
#include "adforge/metrics.h"

ADFORGE_NAMESPACE_BEGIN

enum class DecisionMode {
    kScore,    // argmax of the length-normalized class-string likelihood
    kGenerate, // greedy decoding followed by ParseLabel
};

const char *DecisionModeName(DecisionMode mode);
DecisionMode ParseDecisionMode(const std::string &name);

// Maps a free-text answer to a class: trim whitespace and punctuation, try an
// exact case-insensitive match (aliases included), then a unique substring
// match. Class names that only appear inside a longer matched class name do
// not count as separate matches. Returns kInvalidPrediction otherwise.
int ParseLabel(std::string_view text, const LabelSchema &schema);

// Read-only view over a model and its optional adapters.
class Predictor {
public:
    Predictor(const Model &model, const AdapterSet *adapters, LabelSchema schema, DecisionMode mode);

    int Predict(std::string_view text) const;
    std::vector<int> PredictAll(const std::vector<Record> &records) const;
    ConfusionMatrix Evaluate(const std::vector<Record> &records) const;

    // Per-class length-normalized log-likelihoods used by score mode.
    std::vector<double> ClassScores(std::string_view text) const;
    // Raw greedy answer used by generate mode.
    std::string Generate(std::string_view text) const;

    const LabelSchema &schema() const { return schema_; }
    DecisionMode mode() const { return mode_; }

private:
    const Model &model_;
    const AdapterSet *adapters_;
    LabelSchema schema_;
    DecisionMode mode_;
    std::vector<std::vector<int>> class_tokens_;
    int max_new_ = 0;
};

// Throws ConfigError when a trained checkpoint was built for another schema.
void CheckCheckpointSchema(const Checkpoint &checkpoint, const LabelSchema &schema);

// One prediction per record, order preserved.
std::vector<int> PredictDataset(const std::vector<Record> &records, const LabelSchema &schema,
                                const Checkpoint &checkpoint, DecisionMode mode);

ADFORGE_NAMESPACE_END
