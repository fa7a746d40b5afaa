#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "miai/common.hpp"

namespace miai {

struct OutcomeCounts {
    int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::string positive_class;

    int64_t total() const { return tp + tn + fp + fn; }
};

struct MetricBundle {
    double precision = 0, recall = 0, accuracy = 0, f1 = 0, fpr = 0, g_mean = 0, mcc = 0;
};

// Binary tabulation of aligned prediction/truth sequences against one
// positive value; entries are domain indices.
inline OutcomeCounts count_outcomes(const std::vector<int>& predictions,
                                    const std::vector<int>& truths, int positive,
                                    std::string positive_token = "") {
    if (predictions.size() != truths.size())
        throw ValidationError("predictions and truths differ in length");
    OutcomeCounts c;
    c.positive_class = std::move(positive_token);
    for (size_t i = 0; i < predictions.size(); ++i) {
        bool pred_pos = predictions[i] == positive;
        bool true_pos = truths[i] == positive;
        if (pred_pos && true_pos) ++c.tp;
        else if (pred_pos && !true_pos) ++c.fp;
        else if (!pred_pos && true_pos) ++c.fn;
        else ++c.tn;
    }
    return c;
}

namespace detail {
inline double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }
}

// Every zero-denominator metric is 0 by convention, which is what the
// always-majority baseline should report.
inline MetricBundle metric_bundle(const OutcomeCounts& c) {
    if (c.total() == 0) throw ValidationError("metric bundle over zero records");
    auto tp = static_cast<double>(c.tp), tn = static_cast<double>(c.tn);
    auto fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn);
    MetricBundle m;
    m.precision = detail::ratio(tp, tp + fp);
    m.recall = detail::ratio(tp, tp + fn);
    m.accuracy = (tp + tn) / static_cast<double>(c.total());
    m.f1 = detail::ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.fpr = detail::ratio(fp, fp + tn);
    double specificity = detail::ratio(tn, tn + fp);
    m.g_mean = std::sqrt(m.recall * specificity);
    double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    m.mcc = denom == 0.0 ? 0.0 : (tp * tn - fp * fn) / std::sqrt(denom);
    return m;
}

// k x k attack confusion matrix (rows actual, cols predicted) with the
// per-value and averaged aggregates the multi-valued evaluations report.
struct AttackConfusionMatrix {
    std::vector<std::string> values;
    std::vector<std::vector<int64_t>> counts;
    std::vector<double> precision_per_value;  // 0 where a column is empty
    std::vector<double> recall_per_value;     // 0 where a row is empty
    double avg_precision = 0;                 // unweighted, empty columns count as 0
    double avg_recall = 0;
    double accuracy = 0;

    int64_t total() const {
        int64_t t = 0;
        for (const auto& row : counts)
            for (int64_t c : row) t += c;
        return t;
    }
};

inline AttackConfusionMatrix attack_confusion(const std::vector<int>& predictions,
                                              const std::vector<int>& truths,
                                              std::vector<std::string> domain) {
    if (predictions.size() != truths.size())
        throw ValidationError("predictions and truths differ in length");
    size_t k = domain.size();
    AttackConfusionMatrix m;
    m.values = std::move(domain);
    m.counts.assign(k, std::vector<int64_t>(k, 0));
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] < 0 || predictions[i] >= static_cast<int>(k) || truths[i] < 0 ||
            truths[i] >= static_cast<int>(k))
            throw ValidationError("prediction or truth outside the declared domain");
        ++m.counts[truths[i]][predictions[i]];
    }
    int64_t total = static_cast<int64_t>(predictions.size());
    int64_t diag = 0;
    m.precision_per_value.assign(k, 0.0);
    m.recall_per_value.assign(k, 0.0);
    for (size_t v = 0; v < k; ++v) {
        int64_t row = 0, col = 0;
        for (size_t j = 0; j < k; ++j) {
            row += m.counts[v][j];
            col += m.counts[j][v];
        }
        diag += m.counts[v][v];
        m.recall_per_value[v] = detail::ratio(static_cast<double>(m.counts[v][v]), static_cast<double>(row));
        m.precision_per_value[v] = detail::ratio(static_cast<double>(m.counts[v][v]), static_cast<double>(col));
        m.avg_recall += m.recall_per_value[v];
        m.avg_precision += m.precision_per_value[v];
    }
    m.avg_recall /= static_cast<double>(k);
    m.avg_precision /= static_cast<double>(k);
    m.accuracy = total == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(total);
    return m;
}

// Closed-form expected metrics of guessing the positive class independently
// with probability p when the true positive fraction is prior_positive.
inline MetricBundle randga_envelope(double prior_positive, double p) {
    if (prior_positive < 0 || prior_positive > 1 || p < 0 || p > 1)
        throw ValidationError("randga envelope arguments must be in [0,1]");
    MetricBundle m;
    m.precision = p > 0 ? prior_positive : 0.0;
    m.recall = p;
    m.fpr = p;
    m.accuracy = prior_positive * p + (1.0 - prior_positive) * (1.0 - p);
    m.f1 = detail::ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    m.g_mean = std::sqrt(p * (1.0 - p));
    m.mcc = 0.0;
    return m;
}

}  // namespace miai
