#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "miai/model.hpp"

namespace miai {

struct TreeConfig {
    int max_depth = 16;
    int min_leaf = 2;
    bool prune = true;              // reduced-error pruning on an internal holdout
    double prune_fraction = 0.10;
    uint64_t seed = 1;
};

// One node of a binary CART tree. Leaves have attribute -1. Internal nodes
// test either `value <= threshold` (numeric) or `value == cat_value`
// (categorical); the matching branch is `left`.
struct TreeNode {
    int attribute = -1;
    bool numeric_split = false;
    double threshold = 0.0;
    int cat_value = -1;
    int left = -1;
    int right = -1;
    std::vector<double> distribution;  // class frequencies at this node, sums to 1
    int majority = 0;
};

class DecisionTreeModel : public Model {
public:
    DecisionTreeModel(SchemaPtr schema, std::vector<TreeNode> nodes,
                      std::vector<double> importances = {})
        : nodes_(std::move(nodes)), importances_(std::move(importances)) {
        init_schema(std::move(schema));
        if (nodes_.empty()) throw ValidationError("decision tree has no nodes");
    }

    std::string kind() const override { return "decision_tree"; }
    bool supports_missing_descent() const override { return true; }
    const std::vector<TreeNode>& nodes() const { return nodes_; }

    std::vector<double> attribute_importances() const override { return importances_; }

    // Descends while split attributes are present; the first split that asks
    // for a missing value stops the walk and that node's distribution is the
    // answer (the "last node" strategy).
    PredictionOutput predict(const Record& record) const override {
        const TreeNode* node = &nodes_[0];
        while (node->attribute >= 0) {
            const Value& v = record.values[node->attribute];
            if (v.is_missing()) break;
            bool go_left;
            if (node->numeric_split) {
                if (v.kind != Value::Kind::Numeric)
                    throw ValidationError("numeric split on non-numeric value");
                go_left = v.num <= node->threshold;
            } else {
                if (v.kind != Value::Kind::Categorical)
                    throw ValidationError("categorical split on non-categorical value");
                go_left = v.cat == node->cat_value;
            }
            node = &nodes_[go_left ? node->left : node->right];
        }
        return make_prediction(node->distribution);
    }

private:
    std::vector<TreeNode> nodes_;
    std::vector<double> importances_;
};

namespace detail {

inline double gini(const std::vector<int64_t>& counts, int64_t total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (int64_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

struct SplitChoice {
    int attribute = -1;
    bool numeric = false;
    double threshold = 0.0;
    int cat_value = -1;
    double gain = 0.0;
    bool valid = false;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& train, const TreeConfig& cfg)
        : ds_(train), cfg_(cfg), target_(train.schema().target_index()) {
        n_classes_ = static_cast<int>(train.schema().at(target_).resolved_domain().size());
        importance_.assign(train.schema().size(), 0.0);
    }

    std::vector<TreeNode> build(const std::vector<size_t>& rows) {
        nodes_.clear();
        total_rows_ = rows.size();
        grow(rows, 0);
        return std::move(nodes_);
    }

    std::vector<double> normalized_importance() const {
        double sum = std::accumulate(importance_.begin(), importance_.end(), 0.0);
        std::vector<double> out = importance_;
        if (sum > 0)
            for (double& v : out) v /= sum;
        return out;
    }

private:
    std::vector<int64_t> class_counts(const std::vector<size_t>& rows) const {
        std::vector<int64_t> counts(n_classes_, 0);
        for (size_t r : rows) {
            const Value& y = ds_.record(r).values[target_];
            if (y.is_missing()) continue;
            ++counts[y.cat];
        }
        return counts;
    }

    int make_leaf_like(const std::vector<int64_t>& counts) {
        TreeNode node;
        int64_t total = std::accumulate(counts.begin(), counts.end(), int64_t{0});
        node.distribution.assign(n_classes_, 0.0);
        if (total > 0)
            for (int c = 0; c < n_classes_; ++c)
                node.distribution[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
        else
            node.distribution.assign(n_classes_, 1.0 / n_classes_);
        node.majority = argmax_lowest(node.distribution);
        nodes_.push_back(std::move(node));
        return static_cast<int>(nodes_.size()) - 1;
    }

    SplitChoice best_split(const std::vector<size_t>& rows, const std::vector<int64_t>& counts,
                           int64_t labeled) const {
        SplitChoice best;
        double parent = gini(counts, labeled);
        if (parent <= 0.0) return best;
        const auto& attrs = ds_.schema().attributes();
        for (int a = 0; a < static_cast<int>(attrs.size()); ++a) {
            if (a == target_) continue;
            if (attrs[a].is_categorical())
                consider_categorical(a, rows, parent, labeled, best);
            else
                consider_numeric(a, rows, parent, labeled, best);
        }
        return best;
    }

    void score_candidate(int attr, bool numeric, double threshold, int cat_value,
                         const std::vector<int64_t>& left, int64_t nl,
                         const std::vector<int64_t>& right, int64_t nr,
                         double parent, SplitChoice& best) const {
        if (nl < cfg_.min_leaf || nr < cfg_.min_leaf) return;
        double child = (static_cast<double>(nl) * gini(left, nl) +
                        static_cast<double>(nr) * gini(right, nr)) /
                       static_cast<double>(nl + nr);
        double gain = parent - child;
        if (gain > best.gain + 1e-12) {
            best = SplitChoice{attr, numeric, threshold, cat_value, gain, true};
        }
    }

    void consider_categorical(int a, const std::vector<size_t>& rows, double parent,
                              int64_t labeled, SplitChoice& best) const {
        size_t domain = ds_.schema().at(a).domain.size();
        std::vector<std::vector<int64_t>> per_value(domain, std::vector<int64_t>(n_classes_, 0));
        std::vector<int64_t> known(n_classes_, 0);
        for (size_t r : rows) {
            const Value& v = ds_.record(r).values[a];
            const Value& y = ds_.record(r).values[target_];
            if (v.is_missing() || y.is_missing()) continue;
            ++per_value[v.cat][y.cat];
            ++known[y.cat];
        }
        int64_t n_known = std::accumulate(known.begin(), known.end(), int64_t{0});
        (void)labeled;
        std::vector<int64_t> right(n_classes_);
        for (size_t val = 0; val < domain; ++val) {
            int64_t nl = std::accumulate(per_value[val].begin(), per_value[val].end(), int64_t{0});
            if (nl == 0) continue;
            int64_t nr = n_known - nl;
            for (int c = 0; c < n_classes_; ++c) right[c] = known[c] - per_value[val][c];
            score_candidate(a, false, 0.0, static_cast<int>(val), per_value[val], nl, right, nr,
                            parent, best);
        }
    }

    void consider_numeric(int a, const std::vector<size_t>& rows, double parent,
                          int64_t /*labeled*/, SplitChoice& best) const {
        std::vector<std::pair<double, int>> vals;  // (value, class)
        vals.reserve(rows.size());
        std::vector<int64_t> total(n_classes_, 0);
        for (size_t r : rows) {
            const Value& v = ds_.record(r).values[a];
            const Value& y = ds_.record(r).values[target_];
            if (v.is_missing() || y.is_missing()) continue;
            vals.emplace_back(v.num, y.cat);
            ++total[y.cat];
        }
        if (vals.size() < 2) return;
        std::sort(vals.begin(), vals.end());
        std::vector<int64_t> left(n_classes_, 0);
        std::vector<int64_t> right = total;
        int64_t nl = 0, nr = static_cast<int64_t>(vals.size());
        for (size_t i = 0; i + 1 < vals.size(); ++i) {
            ++left[vals[i].second];
            --right[vals[i].second];
            ++nl;
            --nr;
            if (vals[i].first == vals[i + 1].first) continue;  // not a boundary
            double threshold = vals[i].first + 0.5 * (vals[i + 1].first - vals[i].first);
            score_candidate(a, true, threshold, -1, left, nl, right, nr, parent, best);
        }
    }

    int grow(const std::vector<size_t>& rows, int depth) {
        auto counts = class_counts(rows);
        int64_t labeled = std::accumulate(counts.begin(), counts.end(), int64_t{0});
        int node_id = make_leaf_like(counts);

        if (depth >= cfg_.max_depth || labeled < 2 * cfg_.min_leaf) return node_id;
        int nonzero = 0;
        for (int64_t c : counts) nonzero += c > 0;
        if (nonzero <= 1) return node_id;

        SplitChoice choice = best_split(rows, counts, labeled);
        if (!choice.valid) return node_id;

        std::vector<size_t> left_rows, right_rows, missing_rows;
        for (size_t r : rows) {
            const Value& v = ds_.record(r).values[choice.attribute];
            if (v.is_missing()) {
                missing_rows.push_back(r);
            } else if (choice.numeric ? (v.num <= choice.threshold) : (v.cat == choice.cat_value)) {
                left_rows.push_back(r);
            } else {
                right_rows.push_back(r);
            }
        }
        // rows with the split attribute missing follow the larger branch
        auto& host = left_rows.size() >= right_rows.size() ? left_rows : right_rows;
        host.insert(host.end(), missing_rows.begin(), missing_rows.end());

        importance_[choice.attribute] +=
            choice.gain * static_cast<double>(labeled) / static_cast<double>(total_rows_);

        int left_id = grow(left_rows, depth + 1);
        int right_id = grow(right_rows, depth + 1);
        TreeNode& node = nodes_[node_id];
        node.attribute = choice.attribute;
        node.numeric_split = choice.numeric;
        node.threshold = choice.threshold;
        node.cat_value = choice.cat_value;
        node.left = left_id;
        node.right = right_id;
        return node_id;
    }

    const Dataset& ds_;
    const TreeConfig& cfg_;
    int target_;
    int n_classes_ = 0;
    size_t total_rows_ = 0;
    std::vector<TreeNode> nodes_;
    std::vector<double> importance_;
};

// Reduced-error pruning: collapse a subtree whenever answering with the
// node's own majority does at least as well on the holdout rows routed to it.
class TreePruner {
public:
    TreePruner(const Dataset& ds, std::vector<TreeNode>& nodes, int target)
        : ds_(ds), nodes_(nodes), target_(target) {}

    void prune(const std::vector<size_t>& holdout_rows) {
        rows_at_.assign(nodes_.size(), {});
        route(0, holdout_rows);
        prune_node(0);
    }

private:
    void route(int node_id, const std::vector<size_t>& rows) {
        rows_at_[node_id] = rows;
        const TreeNode& node = nodes_[node_id];
        if (node.attribute < 0) return;
        std::vector<size_t> left, right;
        for (size_t r : rows) {
            const Value& v = ds_.record(r).values[node.attribute];
            if (v.is_missing()) continue;  // stops here at prediction time anyway
            bool go_left = node.numeric_split ? (v.num <= node.threshold) : (v.cat == node.cat_value);
            (go_left ? left : right).push_back(r);
        }
        route(node.left, left);
        route(node.right, right);
    }

    // returns holdout errors of the (possibly pruned) subtree
    int64_t prune_node(int node_id) {
        TreeNode& node = nodes_[node_id];
        int64_t leaf_errors = 0;
        for (size_t r : rows_at_[node_id]) {
            const Value& y = ds_.record(r).values[target_];
            if (!y.is_missing() && y.cat != node.majority) ++leaf_errors;
        }
        if (node.attribute < 0) return leaf_errors;
        int64_t subtree_errors = prune_node(node.left) + prune_node(node.right);
        // rows stopping at this node due to missing values err like a leaf either way
        if (leaf_errors <= subtree_errors) {
            node.attribute = -1;
            node.left = node.right = -1;
            return leaf_errors;
        }
        return subtree_errors;
    }

    const Dataset& ds_;
    std::vector<TreeNode>& nodes_;
    int target_;
    std::vector<std::vector<size_t>> rows_at_;
};

}  // namespace detail

inline std::shared_ptr<DecisionTreeModel> train_decision_tree_on_rows(
    const Dataset& train, const TreeConfig& cfg, const std::vector<size_t>& rows) {
    if (rows.empty()) throw ValidationError("cannot train a decision tree on no rows");
    int target = train.schema().target_index();

    std::vector<size_t> grow_rows = rows, prune_rows;
    if (cfg.prune && cfg.prune_fraction > 0.0) {
        std::vector<size_t> order = rows;
        Rng rng(splitmix64(cfg.seed ^ 0x7ee5c0de));
        shuffle_indices(order, rng);
        auto n_prune = static_cast<size_t>(std::floor(cfg.prune_fraction * order.size()));
        if (n_prune > 0 && n_prune < order.size()) {
            prune_rows.assign(order.begin(), order.begin() + n_prune);
            grow_rows.assign(order.begin() + n_prune, order.end());
            std::sort(grow_rows.begin(), grow_rows.end());
            std::sort(prune_rows.begin(), prune_rows.end());
        }
    }

    detail::TreeBuilder builder(train, cfg);
    auto nodes = builder.build(grow_rows);
    if (!prune_rows.empty()) {
        detail::TreePruner pruner(train, nodes, target);
        pruner.prune(prune_rows);
    }
    return std::make_shared<DecisionTreeModel>(train.schema_ptr(), std::move(nodes),
                                               builder.normalized_importance());
}

inline std::shared_ptr<DecisionTreeModel> train_decision_tree(const Dataset& train,
                                                              const TreeConfig& cfg = {}) {
    if (train.empty()) throw ValidationError("training dataset is empty");
    std::vector<size_t> rows(train.size());
    std::iota(rows.begin(), rows.end(), size_t{0});
    return train_decision_tree_on_rows(train, cfg, rows);
}

}  // namespace miai
