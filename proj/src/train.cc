#include "adforge/train.h"

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "adforge/error.h"
#include "adforge/ops.h"

ADFORGE_NAMESPACE_BEGIN

void TrainConfig::Validate() const {
    if (batch_size < 1) {
        throw ConfigError("batch_size must be at least 1");
    }
    if (!(learning_rate > 0)) {
        throw ConfigError("learning_rate must be positive");
    }
    if (max_steps < 0) {
        throw ConfigError("max_steps must be non-negative");
    }
    if (!(grad_clip_norm > 0)) {
        throw ConfigError("grad_clip_norm must be positive");
    }
}

TrainingExample BuildExample(const Record &record, const LabelSchema &schema, int64_t max_tokens) {
    if (record.label < 0 || record.label >= schema.size()) {
        throw DataError("label " + std::to_string(record.label) + " is not a class of schema " + schema.name);
    }
    TrainingExample ex;
    ex.tokens = Tokenize(BuildPrompt(record, schema));
    ex.mask.assign(ex.tokens.size(), false);
    for (int id : TokenizeBytes(schema.ClassName(record.label))) {
        ex.tokens.ids.push_back(id);
        ex.mask.push_back(true);
    }
    ex.tokens.ids.push_back(kEosToken);
    ex.mask.push_back(true);
    CheckSequenceLength(static_cast<int64_t>(ex.tokens.size()), max_tokens, "training example");
    return ex;
}

VarId ExampleLoss(Tape &tape, const Model &model, const TrainingExample &example, const AdapterSet *adapters) {
    const auto &ids = example.tokens.ids;
    std::vector<int64_t> rows;
    std::vector<int> targets;
    for (size_t t = 1; t < ids.size(); ++t) {
        if (example.mask[t]) {
            rows.push_back(static_cast<int64_t>(t) - 1);
            targets.push_back(ids[t]);
        }
    }
    if (rows.empty()) {
        throw ShapeError("cross_entropy: no supervised positions");
    }
    std::span<const int> inputs(ids.data(), ids.size() - 1);
    const VarId logits = model.Forward(tape, inputs, adapters, &rows);
    return ops::CrossEntropyMasked(tape, logits, targets, std::vector<bool>(targets.size(), true));
}

double AdamOptimizer::Step(std::span<Tensor *const> params) {
    if (m_.empty()) {
        for (const auto *p : params) {
            m_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
            v_.emplace_back(static_cast<size_t>(p->numel()), 0.0);
        }
    }
    if (m_.size() != params.size()) {
        throw ConfigError("optimizer state tracks " + std::to_string(m_.size()) + " tensors, got "
                          + std::to_string(params.size()));
    }

    double sq = 0;
    for (const auto *p : params) {
        for (auto g : p->grad()) {
            sq += static_cast<double>(g) * static_cast<double>(g);
        }
    }
    const double norm = std::sqrt(sq);
    const double clip = norm > config_.grad_clip_norm ? config_.grad_clip_norm / norm : 1.0;

    ++step_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor &p = *params[i];
        if (m_[i].size() != static_cast<size_t>(p.numel())) {
            throw ShapeError("optimizer state does not match tensor " + ShapeToString(p.shape()));
        }
        const auto grad = p.grad();
        auto data = p.data();
        for (size_t j = 0; j < data.size(); ++j) {
            const double g = grad.empty() ? 0.0 : static_cast<double>(grad[j]) * clip;
            m_[i][j] = config_.beta1 * m_[i][j] + (1 - config_.beta1) * g;
            v_[i][j] = config_.beta2 * v_[i][j] + (1 - config_.beta2) * g * g;
            const double m_hat = m_[i][j] / bc1;
            const double v_hat = v_[i][j] / bc2;
            data[j] = static_cast<Real>(static_cast<double>(data[j])
                                        - config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.eps));
        }
        p.clear_grad();
    }
    return norm;
}

uint64_t HashTrainConfig(const TrainConfig &config, const AdapterSpec &spec) {
    std::ostringstream os;
    os.precision(17);
    os << config.batch_size << '|' << config.learning_rate << '|' << config.max_steps << '|' << config.seed << '|'
       << config.grad_clip_norm << '|' << config.beta1 << '|' << config.beta2 << '|' << config.eps << '|'
       << AdapterKindName(spec.kind) << '|' << spec.lora.rank << '|' << spec.lora.alpha << '|'
       << spec.lora.target_query << spec.lora.target_value << '|';
    for (int l : spec.lora.layers) {
        os << l << ',';
    }
    os << '|' << spec.prefix.prompt_len;
    const std::string s = os.str();
    return Fnv1a(s.data(), s.size());
}

Checkpoint TrainAdapter(const std::vector<Record> &records, const LabelSchema &schema, const Model &model,
                        const AdapterSpec &spec, const TrainConfig &config, const StepCallback &on_step) {
    config.Validate();
    if (records.empty()) {
        throw DataError("training set is empty");
    }

    Checkpoint ckpt;
    ckpt.config = model.config();
    ckpt.schema = schema.name;
    ckpt.metadata.seed = config.seed;

    AdapterSet adapters = AdapterSet::Initialize(model.config(), spec, config.seed);
    adapters.provenance.schema = schema.name;
    adapters.provenance.train_config_hash = HashTrainConfig(config, spec);

    std::vector<TrainingExample> examples;
    examples.reserve(records.size());
    for (const auto &r : records) {
        examples.push_back(BuildExample(r, schema, model.MaxTokens(&adapters)));
    }

    const uint64_t base_checksum = model.weights().Checksum();
    std::vector<Tensor *> params;
    for (auto &[name, t] : adapters.Named()) {
        params.push_back(t);
    }

    AdamOptimizer optimizer(config);
    std::mt19937_64 rng(config.seed);
    std::vector<size_t> order(examples.size());
    std::iota(order.begin(), order.end(), size_t{0});
    size_t cursor = order.size();

    for (int step = 0; step < config.max_steps; ++step) {
        double batch_loss = 0;
        for (int b = 0; b < config.batch_size; ++b) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const auto &ex = examples[order[cursor++]];
            Tape tape;
            const VarId loss = ExampleLoss(tape, model, ex, &adapters);
            batch_loss += static_cast<double>(tape.value(loss)[0]);
            tape.Backward(ops::Scale(tape, loss, Real(1) / static_cast<Real>(config.batch_size)));
        }
        batch_loss /= config.batch_size;
        if (!std::isfinite(batch_loss)) {
            throw NonFiniteError("non-finite loss at step " + std::to_string(step));
        }
        optimizer.Step(params);
        ckpt.metadata.loss_curve.push_back(batch_loss);
        if (on_step) {
            on_step(step, batch_loss);
        }
    }

    if (model.weights().Checksum() != base_checksum) {
        throw Error("base weights changed during adapter training");
    }
    ckpt.metadata.steps = config.max_steps;
    if (!ckpt.metadata.loss_curve.empty()) {
        ckpt.metadata.final_loss = ckpt.metadata.loss_curve.back();
    }
    ckpt.base = model.weights();
    ckpt.adapters = std::move(adapters);
    return ckpt;
}

ADFORGE_NAMESPACE_END
