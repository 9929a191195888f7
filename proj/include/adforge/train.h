#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "adforge/adapters.h"
#include "adforge/dataset.h"
#include "adforge/model.h"

ADFORGE_NAMESPACE_BEGIN

struct TrainConfig {
    int batch_size = 16;
    double learning_rate = 1e-3;
    int max_steps = 300;
    uint64_t seed = 42;
    double grad_clip_norm = 1.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    void Validate() const;
};

// Prompt tokens followed by the gold label bytes and EOS. `mask[t]` is set
// exactly on the label bytes and the EOS.
struct TrainingExample {
    TokenSeq tokens;
    std::vector<bool> mask;
};

// Throws DataError for a label outside the schema and SequenceLengthError
// when the assembled sequence exceeds `max_tokens`.
TrainingExample BuildExample(const Record &record, const LabelSchema &schema, int64_t max_tokens);

// Records the masked next-token loss of one example: logits at position t-1
// are scored against token t wherever mask[t] is set.
VarId ExampleLoss(Tape &tape, const Model &model, const TrainingExample &example, const AdapterSet *adapters);

// Adam with bias correction and global-norm clipping; no weight decay.
class AdamOptimizer {
public:
    explicit AdamOptimizer(const TrainConfig &config) : config_(config) {}

    // Updates every tensor from its grad buffer (a missing buffer counts as
    // zero), then clears the buffers. Returns the pre-clip global norm.
    double Step(std::span<Tensor *const> params);

    int64_t step_count() const { return step_; }

private:
    TrainConfig config_;
    int64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct TrainingMetadata {
    int64_t steps = 0;
    std::optional<double> final_loss;
    uint64_t seed = 0;
    std::vector<double> loss_curve;
};

struct Checkpoint {
    ModelConfig config;
    BaseWeights base;
    // Absent for the unadapted baseline and for merged checkpoints.
    std::optional<AdapterSet> adapters;
    std::string schema;
    TrainingMetadata metadata;
};

using StepCallback = std::function<void(int step, double loss)>;

// Optimizes a freshly initialized adapter against `records`; base weights
// stay bitwise unchanged. Deterministic for fixed inputs and config.
Checkpoint TrainAdapter(const std::vector<Record> &records, const LabelSchema &schema, const Model &model,
                        const AdapterSpec &spec, const TrainConfig &config, const StepCallback &on_step = {});

uint64_t HashTrainConfig(const TrainConfig &config, const AdapterSpec &spec);

ADFORGE_NAMESPACE_END
