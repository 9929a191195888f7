#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adforge/schema.h"

ADFORGE_NAMESPACE_BEGIN

struct Record {
    std::string text;
    int label = -1;
    // Present when the class came from a continuous annotation.
    std::optional<double> raw_score;
    // 1-based line in the source file, 0 for in-memory records.
    int64_t line = 0;
};

struct Dataset {
    std::vector<Record> records;
    // Records the task drops by definition (e.g. zero score for a binary task).
    int64_t excluded = 0;
};

// Reads JSON Lines: one object per line with "text" and exactly one of
// "label" (class name, case-insensitive) or "score" (number). Blank lines are
// skipped. Errors name the offending line.
Dataset LoadDataset(const std::filesystem::path &path, const LabelSchema &schema);
Dataset ParseDataset(std::string_view jsonl, const LabelSchema &schema);

// Writes records back as JSON Lines with string labels.
void SaveDataset(const std::filesystem::path &path, const std::vector<Record> &records, const LabelSchema &schema);

// Instruction template: "Classify the sentiment of the sentence to C1, C2, … or Ck: <text>".
struct PromptTemplate {
    static constexpr std::string_view kInstruction = "Classify the sentiment of the sentence to ";
    static constexpr std::string_view kSeparator = ": ";
    static constexpr std::string_view kLastJoin = " or ";
    static constexpr std::string_view kJoin = ", ";
};

std::string BuildPrompt(std::string_view text, const LabelSchema &schema);
inline std::string BuildPrompt(const Record &record, const LabelSchema &schema) {
    return BuildPrompt(record.text, schema);
}

// Seeded three-class corpus under the mosi3 schema. Each text mixes filler
// words with one planted sentiment keyword; classes are balanced and
// shuffled.
std::vector<Record> SyntheticSentimentCorpus(int count, uint64_t seed);

ADFORGE_NAMESPACE_END
