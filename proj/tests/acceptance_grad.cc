// Criterion 1, built against the float64 library.
#include <chrono>
#include <random>
#include <sstream>

#include "acceptance.h"
#include "adforge/dataset.h"
#include "adforge/gradcheck.h"
#include "adforge/train.h"

using namespace adforge;

namespace {

constexpr double kMaxRelError = 1e-3;
constexpr double kMaxSeconds = 60;
constexpr int kSeeds = 10;

ModelConfig GradConfig(uint64_t seed) {
    ModelConfig c;
    c.n_layers = 2;
    c.n_heads = 2;
    c.d_model = 16;
    c.d_ff = 32;
    c.max_seq = 128;
    c.seed = seed;
    return c;
}

} // namespace

CriterionResult RunGradientGate() {
    const auto start = std::chrono::steady_clock::now();
    const auto schema = BuiltinSchema("mosi3");
    double worst = 0;
    std::string worst_at;
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        const auto config = GradConfig(seed);
        const Model model = Model::Initialize(config);
        const Record record = SyntheticSentimentCorpus(3, seed)[seed % 3];
        for (const auto kind : {AdapterKind::kLora, AdapterKind::kPrefix}) {
            AdapterSpec spec;
            spec.kind = kind;
            spec.prefix.prompt_len = 8;
            AdapterSet adapters = AdapterSet::Initialize(config, spec, seed);
            // Move B off zero so that every factor carries gradient.
            std::mt19937_64 rng(seed + 100);
            std::normal_distribution<double> noise(0, 0.05);
            for (auto &[name, t] : adapters.Named()) {
                for (auto &v : t->data()) {
                    v = static_cast<Real>(noise(rng));
                }
            }
            const TrainingExample example = BuildExample(record, schema, model.MaxTokens(&adapters));
            const LossBuilder loss = [&](Tape &tape) { return ExampleLoss(tape, model, example, &adapters); };
            for (auto &[name, t] : adapters.Named()) {
                const GradCheckResult r = FiniteDiffCheck(loss, *t);
                if (r.max_rel_error >= worst) {
                    worst = r.max_rel_error;
                    worst_at = std::string(AdapterKindName(kind)) + " " + name + " seed " + std::to_string(seed);
                }
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream detail;
    detail << "max relative error " << worst << " (" << worst_at << "), " << kSeeds << " seeds x 2 adapters, " << secs
           << " s";
    return {worst < kMaxRelError && secs < kMaxSeconds, detail.str()};
}
