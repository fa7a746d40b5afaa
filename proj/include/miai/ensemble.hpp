#pragma once

#include <numeric>
#include <vector>

#include "miai/decision_tree.hpp"
#include "miai/model.hpp"

namespace miai {

struct ForestConfig {
    int trees = 32;
    bool bootstrap = true;  // bagging; false trains every tree on the full sample
    TreeConfig tree;
    uint64_t seed = 1;
};

inline uint64_t ensemble_tree_seed(uint64_t forest_seed, int tree_index) {
    return splitmix64(forest_seed ^ (0xa5b35705u + static_cast<uint64_t>(tree_index) * 0x9e37u));
}

// Bagged decision forest; prediction is the confidence-averaged vote.
class EnsembleModel : public Model {
public:
    EnsembleModel(SchemaPtr schema, std::vector<std::shared_ptr<DecisionTreeModel>> trees)
        : trees_(std::move(trees)) {
        init_schema(std::move(schema));
        if (trees_.empty()) throw ValidationError("ensemble has no trees");
    }

    std::string kind() const override { return "ensemble"; }
    bool supports_missing_descent() const override { return true; }
    const std::vector<std::shared_ptr<DecisionTreeModel>>& trees() const { return trees_; }

    PredictionOutput predict(const Record& record) const override {
        std::vector<double> sum(classes_.size(), 0.0);
        for (const auto& tree : trees_) {
            auto p = tree->predict(record);
            for (size_t c = 0; c < sum.size(); ++c) sum[c] += p.confidences[c];
        }
        for (double& v : sum) v /= static_cast<double>(trees_.size());
        return make_prediction(std::move(sum));
    }

    std::vector<double> attribute_importances() const override {
        std::vector<double> sum(schema_->size(), 0.0);
        for (const auto& tree : trees_) {
            auto imp = tree->attribute_importances();
            for (size_t a = 0; a < sum.size() && a < imp.size(); ++a) sum[a] += imp[a];
        }
        double total = std::accumulate(sum.begin(), sum.end(), 0.0);
        if (total > 0)
            for (double& v : sum) v /= total;
        return sum;
    }

private:
    std::vector<std::shared_ptr<DecisionTreeModel>> trees_;
};

inline std::shared_ptr<EnsembleModel> train_ensemble(const Dataset& train, const ForestConfig& cfg = {}) {
    if (train.empty()) throw ValidationError("training dataset is empty");
    if (cfg.trees < 1) throw ValidationError("ensemble needs at least one tree");
    std::vector<std::shared_ptr<DecisionTreeModel>> trees;
    trees.reserve(cfg.trees);
    size_t n = train.size();
    for (int t = 0; t < cfg.trees; ++t) {
        TreeConfig tree_cfg = cfg.tree;
        tree_cfg.seed = ensemble_tree_seed(cfg.seed, t);
        std::vector<size_t> rows(n);
        if (cfg.bootstrap) {
            Rng rng(tree_cfg.seed ^ 0xb007);
            for (size_t i = 0; i < n; ++i) rows[i] = static_cast<size_t>(rng.below(n));
            std::sort(rows.begin(), rows.end());
        } else {
            std::iota(rows.begin(), rows.end(), size_t{0});
        }
        trees.push_back(train_decision_tree_on_rows(train, tree_cfg, rows));
    }
    return std::make_shared<EnsembleModel>(train.schema_ptr(), std::move(trees));
}

}  // namespace miai
