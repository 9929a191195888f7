#include "adforge/schema.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

// CH-SIMS annotations are averages of five ratings on a 0.2 grid; parsed
// decimals land within float noise of the grid points.
constexpr double kValueTolerance = 1e-6;

LabelSchema Make(std::string name, std::vector<std::string> classes) {
    LabelSchema s;
    s.name = std::move(name);
    s.classes = std::move(classes);
    return s;
}

LabelSchema SignSchema(std::string name, std::vector<std::string> classes, double lo, double hi) {
    LabelSchema s = Make(std::move(name), std::move(classes));
    s.bin_rule = BinRule::kSign;
    s.positive_class = s.ClassIndex("Positive");
    s.negative_class = s.ClassIndex("Negative");
    const int neutral = s.ClassIndex("Neutral");
    if (neutral >= 0) {
        s.zero_class = neutral;
    }
    s.score_min = lo;
    s.score_max = hi;
    return s;
}

} // namespace

std::string ToLower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

int LabelSchema::ClassIndex(std::string_view label) const {
    const std::string want = ToLower(label);
    for (size_t i = 0; i < classes.size(); ++i) {
        if (ToLower(classes[i]) == want) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

const std::string &LabelSchema::ClassName(int index) const {
    if (index < 0 || index >= size()) {
        throw ConfigError("class index " + std::to_string(index) + " outside schema " + name + " of "
                          + std::to_string(size()) + " classes");
    }
    return classes[static_cast<size_t>(index)];
}

std::optional<std::optional<int>> LabelSchema::Resolve(std::string_view label) const {
    const int direct = ClassIndex(label);
    if (direct >= 0) {
        return std::optional<int>(direct);
    }
    auto it = aliases.find(ToLower(label));
    if (it != aliases.end()) {
        return it->second;
    }
    return std::nullopt;
}

void LabelSchema::Validate() const {
    if (classes.size() < 2) {
        throw ConfigError("schema " + name + " needs at least 2 classes");
    }
    std::set<std::string> seen;
    for (const auto &c : classes) {
        if (c.empty()) {
            throw ConfigError("schema " + name + " has an empty class name");
        }
        if (!seen.insert(ToLower(c)).second) {
            throw ConfigError("schema " + name + " repeats class '" + c + "'");
        }
    }
    std::vector<double> all;
    for (const auto &bin : value_bins) {
        if (bin.class_index < 0 || bin.class_index >= size()) {
            throw ConfigError("schema " + name + " bin targets class " + std::to_string(bin.class_index));
        }
        all.insert(all.end(), bin.values.begin(), bin.values.end());
    }
    std::sort(all.begin(), all.end());
    for (size_t i = 1; i < all.size(); ++i) {
        if (all[i] - all[i - 1] < kValueTolerance) {
            throw ConfigError("schema " + name + " has overlapping score bins at " + std::to_string(all[i]));
        }
    }
}

LabelSchema BuiltinSchema(const std::string &name) {
    if (name == "sst5") {
        return Make(name, {"Negative", "Somewhat negative", "Neutral", "Positive", "Somewhat positive"});
    }
    if (name == "sst2") {
        // Neutral dropped, the "somewhat" grades folded into their pole.
        LabelSchema s = Make(name, {"Positive", "Negative"});
        s.aliases = {{"somewhat positive", 0}, {"somewhat negative", 1}, {"neutral", std::nullopt}};
        return s;
    }
    if (name == "friends") {
        return Make(name, {"Neutral", "Joy", "Sadness", "Fear", "Anger", "Surprise", "Disgust"});
    }
    if (name == "mastodon") {
        return Make(name, {"Positive", "Neutral", "Negative"});
    }
    if (name == "mosi2") {
        return SignSchema(name, {"Positive", "Negative"}, -3.0, 3.0);
    }
    if (name == "mosi3") {
        return SignSchema(name, {"Positive", "Negative", "Neutral"}, -3.0, 3.0);
    }
    if (name == "mosi7") {
        LabelSchema s = Make(name, {"-3", "-2", "-1", "0", "1", "2", "3"});
        s.bin_rule = BinRule::kNearestInteger;
        s.integer_min = -3;
        s.integer_max = 3;
        return s;
    }
    if (name == "chsims5") {
        LabelSchema s = Make(name, {"Negative", "Weakly negative", "Neutral", "Weakly positive", "Positive"});
        s.bin_rule = BinRule::kValueSets;
        s.value_bins = {
            {{-1.0, -0.8}, 0}, {{-0.6, -0.4, -0.2}, 1}, {{0.0}, 2}, {{0.2, 0.4, 0.6}, 3}, {{0.8, 1.0}, 4},
        };
        return s;
    }
    if (name == "chsims2") {
        return SignSchema(name, {"Positive", "Negative"}, -1.0, 1.0);
    }
    if (name == "m3ed") {
        LabelSchema s = Make(name, {"Happy", "Surprise", "Sad", "Disgust", "Anger", "Fear", "Neutral"});
        s.aliases = {{"surp", 1}, {"surp.", 1}, {"neut", 6}, {"neut.", 6}};
        return s;
    }
    std::string names;
    for (const auto &n : BuiltinSchemaNames()) {
        names += (names.empty() ? "" : ", ") + n;
    }
    throw ConfigError("unknown schema '" + name + "' (available: " + names + ")");
}

std::vector<std::string> BuiltinSchemaNames() {
    return {"sst2", "sst5", "friends", "mastodon", "mosi2", "mosi3", "mosi7", "chsims5", "chsims2", "m3ed"};
}

std::optional<int> BinScore(double score, const LabelSchema &schema) {
    if (!std::isfinite(score)) {
        throw DataError("score is not finite");
    }
    switch (schema.bin_rule) {
    case BinRule::kNone:
        throw DataError("schema " + schema.name + " has no score bins");
    case BinRule::kSign: {
        if (score < schema.score_min || score > schema.score_max) {
            throw DataError("score " + std::to_string(score) + " outside [" + std::to_string(schema.score_min) + ", "
                            + std::to_string(schema.score_max) + "] for schema " + schema.name);
        }
        if (score < 0) {
            return schema.negative_class;
        }
        if (score > 0) {
            return schema.positive_class;
        }
        return schema.zero_class;
    }
    case BinRule::kNearestInteger: {
        const double r = std::clamp(std::round(score), static_cast<double>(schema.integer_min),
                                    static_cast<double>(schema.integer_max));
        return static_cast<int>(r) - schema.integer_min;
    }
    case BinRule::kValueSets:
        for (const auto &bin : schema.value_bins) {
            for (double v : bin.values) {
                if (std::abs(score - v) < kValueTolerance) {
                    return bin.class_index;
                }
            }
        }
        throw DataError("score " + std::to_string(score) + " is not an annotation value of schema " + schema.name);
    }
    return std::nullopt;
}

ADFORGE_NAMESPACE_END
