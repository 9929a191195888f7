#include "adforge/metrics.h"

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

ConfusionMatrix::ConfusionMatrix(int num_classes)
    : k_(num_classes), counts_(static_cast<size_t>(num_classes) * static_cast<size_t>(num_classes + 1), 0) {
    if (num_classes < 1) {
        throw ConfigError("confusion matrix needs at least one class");
    }
}

size_t ConfusionMatrix::Index(int gold, int predicted) const {
    if (gold < 0 || gold >= k_) {
        throw DataError("gold class " + std::to_string(gold) + " outside [0, " + std::to_string(k_) + ")");
    }
    if (predicted < kInvalidPrediction || predicted >= k_) {
        throw DataError("predicted class " + std::to_string(predicted) + " outside [0, " + std::to_string(k_) + ")");
    }
    const int col = predicted == kInvalidPrediction ? k_ : predicted;
    return static_cast<size_t>(gold) * static_cast<size_t>(k_ + 1) + static_cast<size_t>(col);
}

void ConfusionMatrix::Add(int gold, int predicted) {
    ++counts_[Index(gold, predicted)];
    ++total_;
}

int64_t ConfusionMatrix::at(int gold, int predicted) const { return counts_[Index(gold, predicted)]; }

int64_t ConfusionMatrix::gold_count(int c) const {
    int64_t n = 0;
    for (int p = kInvalidPrediction; p < k_; ++p) {
        n += at(c, p);
    }
    return n;
}

int64_t ConfusionMatrix::predicted_count(int c) const {
    int64_t n = 0;
    for (int g = 0; g < k_; ++g) {
        n += at(g, c);
    }
    return n;
}

ConfusionMatrix &ConfusionMatrix::operator+=(const ConfusionMatrix &other) {
    if (other.k_ != k_) {
        throw ShapeError("cannot merge confusion matrices over " + std::to_string(k_) + " and "
                         + std::to_string(other.k_) + " classes");
    }
    for (size_t i = 0; i < counts_.size(); ++i) {
        counts_[i] += other.counts_[i];
    }
    total_ += other.total_;
    return *this;
}

ConfusionMatrix BuildConfusion(const std::vector<int> &golds, const std::vector<int> &predictions, int num_classes) {
    if (golds.size() != predictions.size()) {
        throw ShapeError(std::to_string(golds.size()) + " golds vs " + std::to_string(predictions.size())
                         + " predictions");
    }
    ConfusionMatrix cm(num_classes);
    for (size_t i = 0; i < golds.size(); ++i) {
        cm.Add(golds[i], predictions[i]);
    }
    return cm;
}

EvalReport ComputeMetrics(const ConfusionMatrix &cm) {
    if (cm.total() == 0) {
        throw DataError("cannot compute metrics over an empty confusion matrix");
    }
    const int k = cm.num_classes();
    const auto total = static_cast<double>(cm.total());

    EvalReport report;
    report.total = cm.total();
    int64_t correct = 0;
    int supported = 0;
    for (int c = 0; c < k; ++c) {
        correct += cm.at(c, c);
        report.invalid += cm.invalid(c);

        ClassMetrics m;
        m.support = cm.gold_count(c);
        const int64_t tp = cm.at(c, c);
        const int64_t pred = cm.predicted_count(c);
        m.precision = pred > 0 ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
        m.recall = m.support > 0 ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
        m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
        if (m.support > 0) {
            ++supported;
            report.macro_f1 += m.f1;
            report.ua += m.recall;
            report.weighted_f1 += static_cast<double>(m.support) / total * m.f1;
        }
        report.per_class.push_back(m);
    }
    report.accuracy = static_cast<double>(correct) / total;
    report.macro_f1 /= supported;
    report.ua /= supported;
    return report;
}

ADFORGE_NAMESPACE_END
