#include "adforge/cli.h"

#include <cstdio>
#include <memory>
#include <optional>

#include "CLI11.hpp"

#include "adforge/checkpoint.h"
#include "adforge/error.h"
#include "adforge/predict.h"
#include "adforge/report.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

struct TrainArgs {
    std::string data, schema, adapter = "lora", config = "toy", base, out;
    int rank = 8;
    double alpha = 16;
    int prompt_len = 32;
    TrainConfig train;
};

struct EvalArgs {
    std::string data, schema, mode = "score", report, format = "markdown", config = "toy";
    std::vector<std::string> ckpts;
    bool baseline = false;
};

struct PredictArgs {
    std::string text, schema, ckpt, mode = "score", config = "toy";
};

struct MergeArgs {
    std::string ckpt, out;
};

struct ParamsArgs {
    std::string config = "toy", adapter = "lora";
    int rank = 8;
    int prompt_len = 32;
};

struct SynthArgs {
    int count = 200;
    int test = 40;
    uint64_t seed = 7;
    std::string train_out, test_out;
};

std::string ConditionName(const Checkpoint &ckpt) {
    if (!ckpt.adapters) {
        return ckpt.base.lora_merged ? "Base (LoRA, merged)" : "Base";
    }
    return ckpt.adapters->kind() == AdapterKind::kLora ? "Base (LoRA)" : "Base (P-Tuning)";
}

const AdapterSet *AdaptersOf(const Checkpoint &ckpt) { return ckpt.adapters ? &*ckpt.adapters : nullptr; }

AdapterSpec MakeSpec(const std::string &kind, int rank, double alpha, int prompt_len) {
    AdapterSpec spec;
    spec.kind = ParseAdapterKind(kind);
    spec.lora.rank = rank;
    spec.lora.alpha = static_cast<Real>(alpha);
    spec.prefix.prompt_len = prompt_len;
    return spec;
}

void RunTrain(const TrainArgs &a, std::ostream &out, std::ostream &err) {
    const LabelSchema schema = BuiltinSchema(a.schema);
    const Dataset data = LoadDataset(a.data, schema);
    Checkpoint base = a.base.empty() ? BaselineCheckpoint(ModelConfigPreset(a.config)) : LoadCheckpoint(a.base);
    if (base.adapters) {
        throw ConfigError("--base must be a checkpoint without an adapter");
    }
    const Model model(base.config, std::move(base.base));
    const AdapterSpec spec = MakeSpec(a.adapter, a.rank, a.alpha, a.prompt_len);
    const int every = std::max(1, a.train.max_steps / 10);
    Checkpoint ckpt = TrainAdapter(data.records, schema, model, spec, a.train, [&](int step, double loss) {
        if ((step + 1) % every == 0 || step + 1 == a.train.max_steps) {
            err << "step " << step + 1 << "/" << a.train.max_steps << " loss " << loss << "\n";
        }
    });
    SaveCheckpoint(ckpt, a.out);
    out << "trained " << AdapterKindName(spec.kind) << " adapter on " << data.records.size() << " records ("
        << data.excluded << " excluded), " << WithThousands(ckpt.adapters->ParameterCount())
        << " trainable parameters";
    if (ckpt.metadata.final_loss) {
        out << ", final loss " << *ckpt.metadata.final_loss;
    }
    out << "\nwrote " << a.out << "\n";
}

void RunEval(const EvalArgs &a, std::ostream &out) {
    const LabelSchema schema = BuiltinSchema(a.schema);
    const Dataset data = LoadDataset(a.data, schema);
    if (data.records.empty()) {
        throw DataError("no records to evaluate in " + a.data);
    }
    const DecisionMode mode = ParseDecisionMode(a.mode);

    std::vector<Checkpoint> ckpts;
    for (const auto &path : a.ckpts) {
        ckpts.push_back(LoadCheckpoint(path));
        CheckCheckpointSchema(ckpts.back(), schema);
    }
    if (ckpts.empty() || a.baseline) {
        // The unadapted condition shares the base of the first checkpoint.
        Checkpoint baseline = ckpts.empty() ? BaselineCheckpoint(ModelConfigPreset(a.config)) : ckpts.front();
        baseline.adapters.reset();
        ckpts.insert(ckpts.begin(), std::move(baseline));
    }

    std::vector<ReportRow> rows;
    for (const auto &ckpt : ckpts) {
        const Model model(ckpt.config, ckpt.base);
        const Predictor predictor(model, AdaptersOf(ckpt), schema, mode);
        ReportRow row{ConditionName(ckpt), schema.name, ComputeMetrics(predictor.Evaluate(data.records))};
        row.report.excluded = data.excluded;
        row.report.mode = DecisionModeName(mode);
        row.report.provenance = ckpt.adapters ? ckpt.adapters->provenance.schema : "";
        rows.push_back(std::move(row));
    }

    const ReportFormat format = ParseReportFormat(a.format);
    if (!a.report.empty()) {
        EmitReport(rows, a.report, format);
    }
    out << RenderReport(rows, format);
    if (data.excluded > 0) {
        out << data.excluded << " records excluded by the " << schema.name << " task definition\n";
    }
}

void RunPredict(const PredictArgs &a, std::ostream &out) {
    const LabelSchema schema = BuiltinSchema(a.schema);
    const Checkpoint ckpt = a.ckpt.empty() ? BaselineCheckpoint(ModelConfigPreset(a.config)) : LoadCheckpoint(a.ckpt);
    CheckCheckpointSchema(ckpt, schema);
    const Model model(ckpt.config, ckpt.base);
    const Predictor predictor(model, AdaptersOf(ckpt), schema, ParseDecisionMode(a.mode));
    if (predictor.mode() == DecisionMode::kGenerate) {
        const std::string answer = predictor.Generate(a.text);
        const int label = ParseLabel(answer, schema);
        out << (label == kInvalidPrediction ? "<invalid>" : schema.ClassName(label)) << "\t" << answer << "\n";
        return;
    }
    const auto scores = predictor.ClassScores(a.text);
    const int label = predictor.Predict(a.text);
    out << schema.ClassName(label);
    for (int c = 0; c < schema.size(); ++c) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", scores[static_cast<size_t>(c)]);
        out << "\t" << schema.ClassName(c) << "=" << buf;
    }
    out << "\n";
}

void RunMerge(const MergeArgs &a, std::ostream &out) {
    const Checkpoint merged = MergeCheckpoint(LoadCheckpoint(a.ckpt));
    SaveCheckpoint(merged, a.out);
    out << "wrote merged checkpoint " << a.out << "\n";
}

void RunParams(const ParamsArgs &a, std::ostream &out) {
    const ModelConfig config = ModelConfigPreset(a.config);
    const AdapterSpec spec = MakeSpec(a.adapter, a.rank, 16, a.prompt_len);
    const ParameterCount count = CountTrainable(config, spec);
    char ratio[32];
    std::snprintf(ratio, sizeof ratio, "%.4f%%", count.ratio * 100.0);
    out << "config " << a.config << " (" << config.n_layers << " layers, d_model " << config.d_model << ", d_ff "
        << config.d_ff << ")\n"
        << "adapter " << AdapterKindName(spec.kind) << "\n"
        << "trainable " << WithThousands(count.trainable) << "\n"
        << "base " << WithThousands(count.base) << "\n"
        << "ratio " << ratio << "\n";
}

void RunSynth(const SynthArgs &a, std::ostream &out) {
    if (a.test < 0 || a.test > a.count) {
        throw ConfigError("--test must lie in [0, --count]");
    }
    const auto corpus = SyntheticSentimentCorpus(a.count, a.seed);
    const auto split = corpus.begin() + (a.count - a.test);
    const LabelSchema schema = BuiltinSchema("mosi3");
    SaveDataset(a.train_out, {corpus.begin(), split}, schema);
    out << "wrote " << a.count - a.test << " records to " << a.train_out << "\n";
    if (!a.test_out.empty()) {
        SaveDataset(a.test_out, {split, corpus.end()}, schema);
        out << "wrote " << a.test << " records to " << a.test_out << "\n";
    }
}

} // namespace

std::string WithThousands(int64_t value) {
    std::string digits = std::to_string(value < 0 ? -value : value);
    std::string out;
    for (size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) {
            out += ',';
        }
        out += digits[i];
    }
    return value < 0 ? "-" + out : out;
}

int RunCli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Parameter-efficient adapters on a byte-level toy decoder", "adforge"};
    app.require_subcommand(1);

    TrainArgs train;
    auto *train_cmd = app.add_subcommand("train", "Train a LoRA or prefix adapter on a JSONL dataset");
    train_cmd->add_option("--data", train.data, "Training JSONL")->required();
    train_cmd->add_option("--schema", train.schema, "Label schema name")->required();
    train_cmd->add_option("--adapter", train.adapter, "lora or prefix")->check(CLI::IsMember({"lora", "prefix"}));
    train_cmd->add_option("--rank", train.rank, "LoRA rank")->capture_default_str();
    train_cmd->add_option("--alpha", train.alpha, "LoRA alpha")->capture_default_str();
    train_cmd->add_option("--prompt-len", train.prompt_len, "Prefix positions per layer")->capture_default_str();
    train_cmd->add_option("--batch", train.train.batch_size, "Examples per step")->capture_default_str();
    train_cmd->add_option("--steps", train.train.max_steps, "Optimizer steps")->capture_default_str();
    train_cmd->add_option("--lr", train.train.learning_rate, "Adam learning rate")->capture_default_str();
    train_cmd->add_option("--seed", train.train.seed, "Adapter init and shuffle seed")->capture_default_str();
    train_cmd->add_option("--config", train.config, "Model preset for a fresh base")->capture_default_str();
    train_cmd->add_option("--base", train.base, "Adapter-free checkpoint supplying the base weights");
    train_cmd->add_option("--out", train.out, "Output checkpoint")->required();

    EvalArgs eval;
    auto *eval_cmd = app.add_subcommand("eval", "Evaluate checkpoints on a JSONL test set");
    eval_cmd->add_option("--data", eval.data, "Test JSONL")->required();
    eval_cmd->add_option("--schema", eval.schema, "Label schema name")->required();
    eval_cmd->add_option("--ckpt", eval.ckpts, "Checkpoint (repeatable); none evaluates the unadapted base");
    eval_cmd->add_flag("--baseline", eval.baseline, "Also evaluate the unadapted base of the first checkpoint");
    eval_cmd->add_option("--config", eval.config, "Model preset when no checkpoint is given")->capture_default_str();
    eval_cmd->add_option("--mode", eval.mode, "score or generate")->check(CLI::IsMember({"score", "generate"}));
    eval_cmd->add_option("--report", eval.report, "Write the report to this path");
    eval_cmd->add_option("--format", eval.format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown", "md"}));

    PredictArgs predict;
    auto *predict_cmd = app.add_subcommand("predict", "Classify one sentence");
    predict_cmd->add_option("--text", predict.text, "Input sentence")->required();
    predict_cmd->add_option("--schema", predict.schema, "Label schema name")->required();
    predict_cmd->add_option("--ckpt", predict.ckpt, "Checkpoint; omitted means the unadapted base");
    predict_cmd->add_option("--config", predict.config, "Model preset when no checkpoint is given")->capture_default_str();
    predict_cmd->add_option("--mode", predict.mode, "score or generate")->check(CLI::IsMember({"score", "generate"}));

    MergeArgs merge;
    auto *merge_cmd = app.add_subcommand("merge", "Fold a LoRA adapter into the base weights");
    merge_cmd->add_option("--ckpt", merge.ckpt, "LoRA checkpoint")->required();
    merge_cmd->add_option("--out", merge.out, "Output checkpoint")->required();

    ParamsArgs params;
    auto *params_cmd = app.add_subcommand("params", "Print trainable and base parameter counts");
    params_cmd->add_option("--config", params.config, "Model preset")->capture_default_str();
    params_cmd->add_option("--adapter", params.adapter, "lora or prefix")->check(CLI::IsMember({"lora", "prefix"}));
    params_cmd->add_option("--rank", params.rank, "LoRA rank")->capture_default_str();
    params_cmd->add_option("--prompt-len", params.prompt_len, "Prefix positions per layer")->capture_default_str();

    SynthArgs synth;
    auto *synth_cmd = app.add_subcommand("synth", "Write the seeded synthetic mosi3 corpus");
    synth_cmd->add_option("--count", synth.count, "Total records")->capture_default_str();
    synth_cmd->add_option("--test", synth.test, "Records held out for --test-out")->capture_default_str();
    synth_cmd->add_option("--seed", synth.seed, "Corpus seed")->capture_default_str();
    synth_cmd->add_option("--train-out", synth.train_out, "Training JSONL")->required();
    synth_cmd->add_option("--test-out", synth.test_out, "Held-out JSONL");

    std::vector<std::string> argv_storage(args.begin(), args.end());
    if (argv_storage.empty()) {
        argv_storage.emplace_back("adforge");
    }
    std::vector<char *> argv;
    for (auto &s : argv_storage) {
        argv.push_back(s.data());
    }
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << "\n";
        const CLI::App *sub = nullptr;
        for (const auto *cmd : app.get_subcommands()) {
            sub = cmd;
        }
        err << (sub ? sub->help() : app.help());
        return 2;
    }

    try {
        if (train_cmd->parsed()) {
            RunTrain(train, out, err);
        } else if (eval_cmd->parsed()) {
            RunEval(eval, out);
        } else if (predict_cmd->parsed()) {
            RunPredict(predict, out);
        } else if (merge_cmd->parsed()) {
            RunMerge(merge, out);
        } else if (params_cmd->parsed()) {
            RunParams(params, out);
        } else if (synth_cmd->parsed()) {
            RunSynth(synth, out);
        }
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

ADFORGE_NAMESPACE_END
