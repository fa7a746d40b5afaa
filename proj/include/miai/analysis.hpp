#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "miai/attacks.hpp"
#include "miai/metrics.hpp"

namespace miai {

// Everything the evaluation layer needs about one attack run over one
// dataset: per-record predictions and truths (domain indices), optional case
// assignment, and per-record flags about the target model itself.
struct AttackRunView {
    std::string attack;
    std::string attribute;
    std::vector<std::string> domain;
    std::vector<int> predicted;
    std::vector<int> truth;                    // -1 when the true value is unknown
    std::optional<std::vector<CsmiaCase>> cases;
    std::vector<char> target_correct;          // target model right about record's label
    uint64_t queries_used = 0;
};

inline std::vector<int> true_sensitive_values(const Dataset& ds, const std::string& attribute) {
    int a = ds.schema().require(attribute);
    const Attribute& attr = ds.schema().at(a);
    std::vector<int> out(ds.size(), -1);
    for (size_t i = 0; i < ds.size(); ++i)
        out[i] = resolved_value_index(attr, ds.record(i).values[a]);
    return out;
}

// Pairs with known truth only; predictions over unknown truths cannot be scored.
inline void scored_pairs(const AttackRunView& run, std::vector<int>& preds, std::vector<int>& truths) {
    preds.clear();
    truths.clear();
    for (size_t i = 0; i < run.predicted.size(); ++i) {
        if (run.truth[i] < 0) continue;
        preds.push_back(run.predicted[i]);
        truths.push_back(run.truth[i]);
    }
}

inline OutcomeCounts outcomes_for(const AttackRunView& run, int positive) {
    std::vector<int> preds, truths;
    scored_pairs(run, preds, truths);
    return count_outcomes(preds, truths, positive,
                          positive >= 0 && positive < static_cast<int>(run.domain.size())
                              ? run.domain[positive]
                              : "");
}

// ---------------------------------------------------------------------------
// Disparate vulnerability by subgroup
// ---------------------------------------------------------------------------

struct SubgroupRow {
    std::string value;             // "(missing)" collects the unknown rows
    size_t size = 0;
    double attack_accuracy = 0;
    std::optional<MetricBundle> bundle;  // binary sensitive attributes only
    double correct_case1_fraction = 0;   // Case 1 AND correctly labeled
    double target_model_accuracy = 0;
};

struct SubgroupReport {
    std::string grouping_attribute;
    std::vector<SubgroupRow> rows;
};

// Attack metrics, correct-Case-1 share and target-model accuracy for every
// value of the grouping attribute. Subgroup sizes sum to the dataset size.
inline SubgroupReport disparate_vulnerability(const AttackRunView& run, const Dataset& ds,
                                              const std::string& grouping_attribute,
                                              int positive = 0) {
    int g = ds.schema().require(grouping_attribute);
    const Attribute& gattr = ds.schema().at(g);
    auto domain = gattr.resolved_domain();

    SubgroupReport report;
    report.grouping_attribute = grouping_attribute;

    std::vector<std::vector<size_t>> members(domain.size() + 1);  // last = missing
    for (size_t i = 0; i < ds.size(); ++i) {
        int v = resolved_value_index(gattr, ds.record(i).values[g]);
        members[v < 0 ? domain.size() : static_cast<size_t>(v)].push_back(i);
    }

    bool binary = run.domain.size() == 2;
    for (size_t v = 0; v <= domain.size(); ++v) {
        if (v == domain.size() && members[v].empty()) continue;  // missing bucket only if present
        SubgroupRow row;
        row.value = v == domain.size() ? "(missing)" : domain[v];
        row.size = members[v].size();
        std::vector<int> preds, truths;
        size_t correct_case1 = 0, tm_correct = 0;
        for (size_t i : members[v]) {
            if (run.truth[i] >= 0) {
                preds.push_back(run.predicted[i]);
                truths.push_back(run.truth[i]);
                if (run.cases && (*run.cases)[i] == CsmiaCase::Case1 &&
                    run.predicted[i] == run.truth[i])
                    ++correct_case1;
            }
            if (i < run.target_correct.size() && run.target_correct[i]) ++tm_correct;
        }
        if (!preds.empty()) {
            size_t hits = 0;
            for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truths[i];
            row.attack_accuracy = static_cast<double>(hits) / preds.size();
            if (binary) row.bundle = metric_bundle(count_outcomes(preds, truths, positive));
        }
        if (row.size > 0) {
            row.correct_case1_fraction = static_cast<double>(correct_case1) / row.size;
            row.target_model_accuracy = static_cast<double>(tm_correct) / row.size;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Distributional privacy: the same attack on DS_T and on DS_D
// ---------------------------------------------------------------------------

struct PrivacyComparison {
    std::string attack;
    MetricBundle on_train;
    MetricBundle on_holdout;
};

// The runner receives a fresh facade per dataset, so each side gets its own
// ledger and the input datasets stay untouched.
inline PrivacyComparison distributional_privacy(
    const std::string& attack_name, ModelPtr model, bool exposes_confidence, const Dataset& dst,
    const Dataset& dsd, int positive,
    const std::function<AttackRunView(const BlackBoxTarget&, const Dataset&)>& runner) {
    PrivacyComparison out;
    out.attack = attack_name;
    BlackBoxTarget train_facade(model, exposes_confidence);
    AttackRunView on_train = runner(train_facade, dst);
    out.on_train = metric_bundle(outcomes_for(on_train, positive));
    BlackBoxTarget holdout_facade(model, exposes_confidence);
    AttackRunView on_holdout = runner(holdout_facade, dsd);
    out.on_holdout = metric_bundle(outcomes_for(on_holdout, positive));
    return out;
}

// ---------------------------------------------------------------------------
// Efficacy per target-model class label
// ---------------------------------------------------------------------------

struct PerClassRow {
    std::string class_label;
    size_t size = 0;
    OutcomeCounts outcomes;
    MetricBundle bundle;
};

inline std::vector<PerClassRow> per_class_efficacy(const AttackRunView& run, const Dataset& ds,
                                                   int positive = 0) {
    int t = ds.schema().target_index();
    auto classes = ds.schema().at(t).resolved_domain();
    std::vector<PerClassRow> rows;
    for (size_t c = 0; c < classes.size(); ++c) {
        std::vector<int> preds, truths;
        for (size_t i = 0; i < ds.size(); ++i) {
            const Value& y = ds.record(i).values[t];
            if (y.is_missing() || y.cat != static_cast<int>(c) || run.truth[i] < 0) continue;
            preds.push_back(run.predicted[i]);
            truths.push_back(run.truth[i]);
        }
        if (preds.empty()) continue;
        PerClassRow row;
        row.class_label = classes[c];
        row.size = preds.size();
        row.outcomes = count_outcomes(preds, truths, positive);
        row.bundle = metric_bundle(row.outcomes);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Query accounting
// ---------------------------------------------------------------------------

struct QueryReportRow {
    std::string attack;
    uint64_t queries = 0;
    uint64_t expected = 0;  // analytic N*k (or N*sum k_i); 0 = no expectation
    bool matches = true;
};

struct QueryReport {
    std::vector<QueryReportRow> rows;
};

inline QueryReport query_report(const std::vector<QueryReportRow>& observed) {
    QueryReport out;
    out.rows = observed;
    for (auto& row : out.rows) row.matches = row.expected == 0 || row.queries == row.expected;
    return out;
}

inline uint64_t expected_queries(size_t records, size_t k) {
    return static_cast<uint64_t>(records) * static_cast<uint64_t>(k);
}

}  // namespace miai
