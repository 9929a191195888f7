#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "adforge/real.h"

ADFORGE_NAMESPACE_BEGIN

// How continuous annotation scores map to classes.
enum class BinRule {
    kNone,           // label strings only
    kSign,           // < 0, == 0, > 0
    kNearestInteger, // round half away from zero, clamp to the class range
    kValueSets,      // exact membership in enumerated value sets
};

struct ValueBin {
    std::vector<double> values;
    int class_index = 0;
};

// Ordered class set of one dataset task.
struct LabelSchema {
    std::string name;
    // Display strings, in prompt order.
    std::vector<std::string> classes;
    // Extra lowercase spellings; nullopt marks labels the task drops.
    std::map<std::string, std::optional<int>> aliases;

    BinRule bin_rule = BinRule::kNone;
    // kSign: class per sign; a missing zero class means zero scores are excluded.
    std::optional<int> negative_class, zero_class, positive_class;
    // kNearestInteger: class index = clamp(round(score)) - integer_min.
    int integer_min = 0;
    int integer_max = 0;
    // kValueSets
    std::vector<ValueBin> value_bins;
    // Accepted score interval for kSign.
    double score_min = 0;
    double score_max = 0;

    int size() const { return static_cast<int>(classes.size()); }
    bool has_score_bins() const { return bin_rule != BinRule::kNone; }

    // Case-insensitive lookup over class names and aliases. nullopt when the
    // label is unknown; an inner nullopt when the label is known but dropped.
    std::optional<std::optional<int>> Resolve(std::string_view label) const;
    // Class index of an exact (case-insensitive) class name, or -1.
    int ClassIndex(std::string_view label) const;
    const std::string &ClassName(int index) const;

    // Throws ConfigError on duplicate/empty classes, k < 2 or overlapping bins.
    void Validate() const;
};

// Built-in task schemas: sst2, sst5, friends, mastodon, mosi2, mosi3, mosi7,
// chsims5, chsims2, m3ed.
LabelSchema BuiltinSchema(const std::string &name);
std::vector<std::string> BuiltinSchemaNames();

// Maps a continuous score to a class. Returns nullopt for records the task
// excludes (zero score under a binary sign rule). Throws DataError for scores
// outside every bin.
std::optional<int> BinScore(double score, const LabelSchema &schema);

std::string ToLower(std::string_view s);

ADFORGE_NAMESPACE_END
