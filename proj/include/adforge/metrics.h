#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adforge/real.h"

ADFORGE_NAMESPACE_BEGIN

// Prediction index for an answer that maps to no class.
inline constexpr int kInvalidPrediction = -1;

// Gold × predicted counts over k classes plus a trailing invalid column.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int num_classes);

    // `predicted` may be kInvalidPrediction.
    void Add(int gold, int predicted);
    int64_t at(int gold, int predicted) const;
    int64_t invalid(int gold) const { return at(gold, kInvalidPrediction); }

    int num_classes() const { return k_; }
    int64_t total() const { return total_; }
    int64_t gold_count(int c) const;
    int64_t predicted_count(int c) const;

    // Elementwise sum; shards merge in any order.
    ConfusionMatrix &operator+=(const ConfusionMatrix &other);
    friend bool operator==(const ConfusionMatrix &, const ConfusionMatrix &) = default;

private:
    size_t Index(int gold, int predicted) const;

    int k_ = 0;
    int64_t total_ = 0;
    std::vector<int64_t> counts_;
};

ConfusionMatrix BuildConfusion(const std::vector<int> &golds, const std::vector<int> &predictions, int num_classes);

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    int64_t support = 0;
};

struct EvalReport {
    double accuracy = 0;
    double macro_f1 = 0;
    double weighted_f1 = 0;
    double ua = 0;
    std::vector<ClassMetrics> per_class;
    int64_t total = 0;
    int64_t invalid = 0;
    int64_t excluded = 0;
    std::string mode;
    std::string provenance;
};

// Invalid predictions count as wrong in accuracy and recall. Macro-F1 and UA
// average over classes with gold support only. Throws DataError when empty.
EvalReport ComputeMetrics(const ConfusionMatrix &cm);

ADFORGE_NAMESPACE_END
