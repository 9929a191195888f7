#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "adforge/metrics.h"

ADFORGE_NAMESPACE_BEGIN

enum class ReportFormat { kCsv, kMarkdown };

ReportFormat ParseReportFormat(const std::string &name);

// One table row: a model condition evaluated on one dataset task.
struct ReportRow {
    std::string condition; // "Base", "Base (P-Tuning)", "Base (LoRA)"
    std::string dataset;   // schema name
    EvalReport report;
};

// Which F1 fills the F1 column and whether UA is reported, per task.
struct ReportStyle {
    bool weighted_f1 = false;
    bool show_ua = false;
};

ReportStyle StyleForDataset(const std::string &dataset);

// 0.8702 → "87.02".
std::string FormatPercent(double fraction);

// Columns: Model, Dataset, Acc, F1, UA. Missing UA renders as "-".
std::string RenderReport(const std::vector<ReportRow> &rows, ReportFormat format);
void EmitReport(const std::vector<ReportRow> &rows, const std::filesystem::path &path, ReportFormat format);

ADFORGE_NAMESPACE_END
