#include "adforge/report.h"

#include <array>
#include <cstdio>
#include <fstream>

#include "adforge/error.h"

ADFORGE_NAMESPACE_BEGIN

namespace {

std::string CsvField(const std::string &s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    return out + "\"";
}

std::string MarkdownCell(const std::string &s) {
    std::string out;
    for (char c : s) {
        if (c == '|') {
            out += '\\';
        }
        out += c;
    }
    return out;
}

} // namespace

ReportFormat ParseReportFormat(const std::string &name) {
    if (name == "csv") {
        return ReportFormat::kCsv;
    }
    if (name == "markdown" || name == "md") {
        return ReportFormat::kMarkdown;
    }
    throw ConfigError("unknown report format '" + name + "' (expected csv or markdown)");
}

ReportStyle StyleForDataset(const std::string &dataset) {
    if (dataset == "m3ed") {
        return {.weighted_f1 = true, .show_ua = true};
    }
    if (dataset == "friends") {
        return {.weighted_f1 = false, .show_ua = true};
    }
    return {};
}

std::string FormatPercent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", fraction * 100.0);
    return buf;
}

std::string RenderReport(const std::vector<ReportRow> &rows, ReportFormat format) {
    if (rows.empty()) {
        throw ConfigError("report needs at least one row");
    }
    const std::array<std::string, 5> header = {"Model", "Dataset", "Acc", "F1", "UA"};
    std::vector<std::array<std::string, 5>> cells;
    for (const auto &row : rows) {
        const ReportStyle style = StyleForDataset(row.dataset);
        const auto &r = row.report;
        cells.push_back({row.condition, row.dataset, FormatPercent(r.accuracy),
                         FormatPercent(style.weighted_f1 ? r.weighted_f1 : r.macro_f1),
                         style.show_ua ? FormatPercent(r.ua) : "-"});
    }

    std::string out;
    if (format == ReportFormat::kCsv) {
        auto line = [&](const std::array<std::string, 5> &fields) {
            for (size_t i = 0; i < fields.size(); ++i) {
                out += (i ? "," : "") + CsvField(fields[i]);
            }
            out += "\r\n";
        };
        line(header);
        for (const auto &c : cells) {
            line(c);
        }
        return out;
    }
    auto line = [&](const std::array<std::string, 5> &fields) {
        out += "|";
        for (const auto &f : fields) {
            out += " " + MarkdownCell(f) + " |";
        }
        out += "\n";
    };
    line(header);
    out += "|---|---|---:|---:|---:|\n";
    for (const auto &c : cells) {
        line(c);
    }
    return out;
}

void EmitReport(const std::vector<ReportRow> &rows, const std::filesystem::path &path, ReportFormat format) {
    const std::string text = RenderReport(rows, format);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write report " + path.string());
    }
    out << text;
    if (!out) {
        throw Error("failed writing report " + path.string());
    }
}

ADFORGE_NAMESPACE_END
