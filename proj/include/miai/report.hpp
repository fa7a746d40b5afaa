#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "miai/analysis.hpp"
#include "miai/common.hpp"
#include "miai/metrics.hpp"

namespace miai {

// Append-ordered key/value document; the machine-readable half of a report.
// Emission order is fixed by the writer, so identical runs serialize to
// identical bytes.
class KvDoc {
public:
    void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
    void add(const std::string& key, const char* value) { entries_.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, format_number(value)); }
    void add(const std::string& key, bool value) { add(key, value ? "true" : "false"); }
    template <typename T, typename = std::enable_if_t<std::is_integral_v<T>>>
    void add(const std::string& key, T value) { add(key, std::to_string(value)); }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        throw ValidationError("report has no key '" + key + "'");
    }

    void write(std::ostream& out) const {
        for (const auto& [k, v] : entries_) out << k << " = " << v << "\n";
    }

    std::string str() const {
        std::ostringstream os;
        write(os);
        return os.str();
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Aligned-column text table for the human report.
class TextTable {
public:
    explicit TextTable(std::vector<std::string> header) { rows_.push_back(std::move(header)); }

    void add_row(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    void write(std::ostream& out) const {
        std::vector<size_t> widths;
        for (const auto& row : rows_) {
            if (widths.size() < row.size()) widths.resize(row.size(), 0);
            for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
        }
        for (size_t r = 0; r < rows_.size(); ++r) {
            for (size_t c = 0; c < rows_[r].size(); ++c) {
                out << rows_[r][c];
                if (c + 1 < rows_[r].size())
                    out << std::string(widths[c] - rows_[r][c].size() + 2, ' ');
            }
            out << "\n";
            if (r == 0) {
                size_t total = 0;
                for (size_t c = 0; c < widths.size(); ++c) total += widths[c] + (c + 1 < widths.size() ? 2 : 0);
                out << std::string(total, '-') << "\n";
            }
        }
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

inline void add_bundle(KvDoc& doc, const std::string& prefix, const MetricBundle& m) {
    doc.add(prefix + ".precision", m.precision);
    doc.add(prefix + ".recall", m.recall);
    doc.add(prefix + ".accuracy", m.accuracy);
    doc.add(prefix + ".f1", m.f1);
    doc.add(prefix + ".fpr", m.fpr);
    doc.add(prefix + ".g_mean", m.g_mean);
    doc.add(prefix + ".mcc", m.mcc);
}

inline void add_outcomes(KvDoc& doc, const std::string& prefix, const OutcomeCounts& c) {
    doc.add(prefix + ".tp", c.tp);
    doc.add(prefix + ".tn", c.tn);
    doc.add(prefix + ".fp", c.fp);
    doc.add(prefix + ".fn", c.fn);
}

inline std::vector<std::string> bundle_row(const std::string& name, const OutcomeCounts& c,
                                           const MetricBundle& m) {
    return {name,
            std::to_string(c.tp),
            std::to_string(c.tn),
            std::to_string(c.fp),
            std::to_string(c.fn),
            format_percent(m.precision),
            format_percent(m.recall),
            format_percent(m.accuracy),
            format_percent(m.f1),
            format_percent(m.g_mean),
            format_percent(m.mcc),
            format_percent(m.fpr)};
}

// Confusion-matrix table in the layout of the evaluation tables: actual rows,
// predicted columns, totals, per-value recall/precision and the averages.
inline void write_confusion_table(std::ostream& out, const std::string& title,
                                  const AttackConfusionMatrix& m) {
    out << title << "\n";
    std::vector<std::string> header{"actual\\predicted"};
    for (const auto& v : m.values) header.push_back(v);
    header.push_back("total");
    header.push_back("recall");
    TextTable table(std::move(header));
    for (size_t r = 0; r < m.values.size(); ++r) {
        std::vector<std::string> row{m.values[r]};
        int64_t total = 0;
        for (size_t c = 0; c < m.values.size(); ++c) {
            row.push_back(std::to_string(m.counts[r][c]));
            total += m.counts[r][c];
        }
        row.push_back(std::to_string(total));
        row.push_back(format_percent(m.recall_per_value[r]));
        table.add_row(std::move(row));
    }
    std::vector<std::string> totals{"total"};
    for (size_t c = 0; c < m.values.size(); ++c) {
        int64_t col = 0;
        for (size_t r = 0; r < m.values.size(); ++r) col += m.counts[r][c];
        totals.push_back(std::to_string(col));
    }
    totals.push_back(std::to_string(m.total()));
    totals.push_back("avg rec " + format_percent(m.avg_recall));
    table.add_row(std::move(totals));
    std::vector<std::string> precisions{"precision"};
    for (size_t c = 0; c < m.values.size(); ++c)
        precisions.push_back(format_percent(m.precision_per_value[c]));
    precisions.push_back("avg prec " + format_percent(m.avg_precision));
    precisions.push_back("accuracy " + format_percent(m.accuracy));
    table.add_row(std::move(precisions));
    table.write(out);
    out << "\n";
}

inline void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path);
    out << contents;
}

}  // namespace miai
