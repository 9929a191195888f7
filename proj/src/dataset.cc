#include "adforge/dataset.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

using nlohmann::json;

std::string At(int64_t line) { return "line " + std::to_string(line) + ": "; }

bool IsBlank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

} // namespace

Dataset ParseDataset(std::string_view jsonl, const LabelSchema &schema) {
    Dataset out;
    int64_t line_no = 0;
    size_t start = 0;
    while (start <= jsonl.size()) {
        size_t end = jsonl.find('\n', start);
        if (end == std::string_view::npos) {
            end = jsonl.size();
        }
        std::string_view line = jsonl.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (IsBlank(line)) {
            continue;
        }

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error &e) {
            throw DataError(At(line_no) + "malformed JSON (" + e.what() + ")");
        }
        if (!obj.is_object()) {
            throw DataError(At(line_no) + "expected a JSON object");
        }
        if (!obj.contains("text") || !obj["text"].is_string()) {
            throw DataError(At(line_no) + "missing string field \"text\"");
        }
        const bool has_label = obj.contains("label");
        const bool has_score = obj.contains("score");
        if (has_label && has_score) {
            throw DataError(At(line_no) + "both \"label\" and \"score\" present");
        }
        if (!has_label && !has_score) {
            throw DataError(At(line_no) + "needs \"label\" or \"score\"");
        }

        Record r;
        r.text = obj["text"].get<std::string>();
        r.line = line_no;
        std::optional<int> cls;
        if (has_label) {
            if (!obj["label"].is_string()) {
                throw DataError(At(line_no) + "\"label\" must be a string");
            }
            const auto label = obj["label"].get<std::string>();
            auto resolved = schema.Resolve(label);
            if (!resolved) {
                throw DataError(At(line_no) + "unknown label '" + label + "' for schema " + schema.name);
            }
            cls = *resolved;
        } else {
            if (!obj["score"].is_number()) {
                throw DataError(At(line_no) + "\"score\" must be a number");
            }
            const double score = obj["score"].get<double>();
            if (!schema.has_score_bins()) {
                throw DataError(At(line_no) + "schema " + schema.name + " takes labels, not scores");
            }
            try {
                cls = BinScore(score, schema);
            } catch (const DataError &e) {
                throw DataError(At(line_no) + e.what());
            }
            r.raw_score = score;
        }
        if (!cls) {
            ++out.excluded;
            continue;
        }
        r.label = *cls;
        out.records.push_back(std::move(r));
    }
    return out;
}

Dataset LoadDataset(const std::filesystem::path &path, const LabelSchema &schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open dataset " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return ParseDataset(buf.str(), schema);
    } catch (const DataError &e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

void SaveDataset(const std::filesystem::path &path, const std::vector<Record> &records, const LabelSchema &schema) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write dataset " + path.string());
    }
    for (const auto &r : records) {
        json obj = {{"text", r.text}, {"label", schema.ClassName(r.label)}};
        out << obj.dump() << "\n";
    }
}

std::string BuildPrompt(std::string_view text, const LabelSchema &schema) {
    std::string out(PromptTemplate::kInstruction);
    const auto k = schema.classes.size();
    for (size_t i = 0; i < k; ++i) {
        if (i > 0) {
            out += (i + 1 == k) ? PromptTemplate::kLastJoin : PromptTemplate::kJoin;
        }
        out += schema.classes[i];
    }
    out += PromptTemplate::kSeparator;
    out += text;
    return out;
}

std::vector<Record> SyntheticSentimentCorpus(int count, uint64_t seed) {
    // mosi3 order: Positive, Negative, Neutral. Fillers share no word with
    // the keyword lists, so the planted keyword alone decides the class.
    static const std::vector<std::vector<std::string>> kKeywords = {
        {"great", "grand", "glorious", "gorgeous"},
        {"awful", "woeful", "weak", "bleak"},
        {"plain", "typical", "modest", "moderate"},
    };
    static const std::vector<std::string> kFiller = {
        "the", "this", "that", "scene", "actor", "cast", "end", "second",
        "title", "theater", "hero", "lines", "also", "rather", "still", "indeed",
    };

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_filler(2, 4);
    std::uniform_int_distribution<size_t> pick_filler(0, kFiller.size() - 1);
    std::vector<Record> out;
    out.reserve(static_cast<size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        const int cls = i % 3;
        const auto &keys = kKeywords[static_cast<size_t>(cls)];

        std::vector<std::string> words;
        const int n = n_filler(rng);
        for (int w = 0; w < n; ++w) {
            words.push_back(kFiller[pick_filler(rng)]);
        }
        const size_t slot = std::uniform_int_distribution<size_t>(0, words.size())(rng);
        const size_t key = std::uniform_int_distribution<size_t>(0, keys.size() - 1)(rng);
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(slot), keys[key]);

        Record r;
        for (size_t w = 0; w < words.size(); ++w) {
            r.text += (w ? " " : "") + words[w];
        }
        r.text += ".";
        r.label = cls;
        out.push_back(std::move(r));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

ADFORGE_NAMESPACE_END
