#pragma once

#include <atomic>
#include <optional>
#include <vector>

#include "miai/model.hpp"

namespace miai {

// Monotone query counter. Never reset; create a fresh facade to start a new
// accounting scope.
class QueryLedger {
public:
    uint64_t total() const { return count_.load(std::memory_order_relaxed); }
    void increment() { count_.fetch_add(1, std::memory_order_relaxed); }

private:
    std::atomic<uint64_t> count_{0};
};

// What a query returns: always the label, confidences only when the facade
// exposes them.
struct TargetResponse {
    int label = 0;
    std::optional<std::vector<double>> confidences;
};

// Query-only view of a trained model. Every predict call costs exactly one
// ledger increment; predict is safe to call from many threads at once.
class BlackBoxTarget {
public:
    BlackBoxTarget(ModelPtr model, bool exposes_confidence)
        : model_(std::move(model)), exposes_confidence_(exposes_confidence) {
        if (!model_) throw ValidationError("black-box target needs a model");
    }

    bool exposes_confidence() const { return exposes_confidence_; }
    const QueryLedger& ledger() const { return ledger_; }
    const Model& model() const { return *model_; }
    const AttributeSchema& schema() const { return model_->schema(); }
    const std::vector<std::string>& classes() const { return model_->classes(); }

    TargetResponse predict(const Record& record) const {
        ledger_.increment();
        PredictionOutput out = model_->predict(record);
        TargetResponse resp;
        resp.label = out.label;
        if (exposes_confidence_) resp.confidences = std::move(out.confidences);
        return resp;
    }

private:
    ModelPtr model_;
    bool exposes_confidence_;
    mutable QueryLedger ledger_;
};

// Counts of (actual class, predicted class) over a dataset; rows are actual.
struct ModelConfusionMatrix {
    std::vector<std::string> classes;
    std::vector<std::vector<int64_t>> counts;

    int64_t total() const {
        int64_t t = 0;
        for (const auto& row : counts)
            for (int64_t c : row) t += c;
        return t;
    }

    double accuracy() const {
        int64_t t = total(), diag = 0;
        for (size_t i = 0; i < counts.size(); ++i) diag += counts[i][i];
        return t == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(t);
    }

    // Pr[predicted = col | actual = row]; empty rows stay all-zero.
    std::vector<std::vector<double>> row_normalized() const {
        std::vector<std::vector<double>> out(counts.size(),
                                             std::vector<double>(counts.size(), 0.0));
        for (size_t i = 0; i < counts.size(); ++i) {
            int64_t row_total = 0;
            for (int64_t c : counts[i]) row_total += c;
            if (row_total == 0) continue;
            for (size_t j = 0; j < counts.size(); ++j)
                out[i][j] = static_cast<double>(counts[i][j]) / static_cast<double>(row_total);
        }
        return out;
    }
};

// Queries the facade once per record (|ds| ledger increments) and tabulates
// actual-vs-predicted counts for the target attribute.
inline ModelConfusionMatrix confusion_matrix(const BlackBoxTarget& target, const Dataset& ds) {
    if (ds.empty()) throw ValidationError("confusion matrix over an empty dataset");
    int t = ds.schema().target_index();
    size_t m = target.classes().size();
    ModelConfusionMatrix cm;
    cm.classes = target.classes();
    cm.counts.assign(m, std::vector<int64_t>(m, 0));
    for (const auto& r : ds.records()) {
        const Value& y = r.values[t];
        if (y.is_missing())
            throw ValidationError("record without target label in confusion-matrix dataset");
        auto resp = target.predict(r);
        ++cm.counts[y.cat][resp.label];
    }
    return cm;
}

}  // namespace miai
