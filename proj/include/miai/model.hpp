#pragma once

#include <memory>
#include <string>
#include <vector>

#include "miai/common.hpp"
#include "miai/dataset.hpp"
#include "miai/schema.hpp"

namespace miai {

// Label plus the full per-class confidence vector, in target-class order.
// label is always the confidence argmax, ties resolved to the lowest index.
struct PredictionOutput {
    int label = 0;
    std::vector<double> confidences;
};

inline PredictionOutput make_prediction(std::vector<double> confidences) {
    PredictionOutput out;
    out.label = argmax_lowest(confidences);
    out.confidences = std::move(confidences);
    return out;
}

class Model {
public:
    virtual ~Model() = default;

    // Full prediction. Missing attribute values are handled by the model's own
    // policy: trees and forests stop descending and answer from the last node
    // reached, the MLP imputes training statistics.
    virtual PredictionOutput predict(const Record& record) const = 0;

    virtual std::string kind() const = 0;

    // true when the model resolves missing inputs by tree descent
    virtual bool supports_missing_descent() const { return false; }

    const AttributeSchema& schema() const { return *schema_; }
    SchemaPtr schema_ptr() const { return schema_; }
    const std::vector<std::string>& classes() const { return classes_; }
    int target_attribute() const { return target_; }

    // Normalized attribute importances (total impurity decrease) for tree
    // models; empty for models without a natural importance measure.
    virtual std::vector<double> attribute_importances() const { return {}; }

protected:
    void init_schema(SchemaPtr schema) {
        schema_ = std::move(schema);
        target_ = schema_->target_index();
        if (target_ < 0) throw ValidationError("model schema has no target_label attribute");
        classes_ = schema_->at(target_).resolved_domain();
        if (classes_.empty()) throw ValidationError("target_label attribute has an empty domain");
    }

    SchemaPtr schema_;
    std::vector<std::string> classes_;
    int target_ = -1;
};

using ModelPtr = std::shared_ptr<const Model>;

// Tree-descent prediction under missing values. Defined for decision trees
// and tree ensembles; other model kinds are rejected because the strategy is
// meaningless for them.
inline PredictionOutput predict_with_missing(const Model& model, const Record& record) {
    if (!model.supports_missing_descent())
        throw ValidationError("last-node descent is only defined for tree models, not " + model.kind());
    return model.predict(record);
}

}  // namespace miai
