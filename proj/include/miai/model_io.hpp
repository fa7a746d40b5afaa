#pragma once

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "miai/decision_tree.hpp"
#include "miai/ensemble.hpp"
#include "miai/mlp.hpp"

namespace miai {

constexpr int kModelFormatVersion = 1;

// A trained model plus the capability chosen when it was trained; the attack
// stage refuses confidence-based attacks against a label-only artifact.
struct SavedTarget {
    ModelPtr model;
    bool exposes_confidence = true;
};

namespace detail {

using nlohmann::json;

inline json schema_to_json(const AttributeSchema& schema) {
    json out = json::array();
    for (const auto& a : schema.attributes()) {
        json j;
        j["name"] = a.name;
        j["kind"] = a.is_categorical() ? "categorical" : "continuous";
        j["role"] = role_name(a.role);
        j["domain"] = a.domain;
        j["bins"] = a.bins;
        j["bin_edges"] = a.bin_edges;
        j["bin_representatives"] = a.bin_representatives;
        out.push_back(std::move(j));
    }
    return out;
}

inline SchemaPtr schema_from_json(const json& in) {
    std::vector<Attribute> attrs;
    for (const auto& j : in) {
        Attribute a;
        a.name = j.at("name").get<std::string>();
        a.kind = j.at("kind").get<std::string>() == "categorical" ? AttrKind::Categorical
                                                                  : AttrKind::Continuous;
        std::string role = j.at("role").get<std::string>();
        a.role = role == "sensitive" ? Role::Sensitive
                 : role == "target_label" ? Role::TargetLabel
                                          : Role::NonSensitive;
        a.domain = j.at("domain").get<std::vector<std::string>>();
        a.bins = j.at("bins").get<int>();
        a.bin_edges = j.at("bin_edges").get<std::vector<double>>();
        a.bin_representatives = j.at("bin_representatives").get<std::vector<double>>();
        attrs.push_back(std::move(a));
    }
    return std::make_shared<AttributeSchema>(std::move(attrs));
}

inline json nodes_to_json(const std::vector<TreeNode>& nodes) {
    json out = json::array();
    for (const auto& n : nodes) {
        json j;
        j["attribute"] = n.attribute;
        j["numeric"] = n.numeric_split;
        j["threshold"] = n.threshold;
        j["cat_value"] = n.cat_value;
        j["left"] = n.left;
        j["right"] = n.right;
        j["distribution"] = n.distribution;
        j["majority"] = n.majority;
        out.push_back(std::move(j));
    }
    return out;
}

inline std::vector<TreeNode> nodes_from_json(const json& in) {
    std::vector<TreeNode> nodes;
    for (const auto& j : in) {
        TreeNode n;
        n.attribute = j.at("attribute").get<int>();
        n.numeric_split = j.at("numeric").get<bool>();
        n.threshold = j.at("threshold").get<double>();
        n.cat_value = j.at("cat_value").get<int>();
        n.left = j.at("left").get<int>();
        n.right = j.at("right").get<int>();
        n.distribution = j.at("distribution").get<std::vector<double>>();
        n.majority = j.at("majority").get<int>();
        nodes.push_back(std::move(n));
    }
    return nodes;
}

inline json model_to_json(const Model& model) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["kind"] = model.kind();
    j["schema"] = schema_to_json(model.schema());
    if (model.kind() == "decision_tree") {
        const auto& tree = dynamic_cast<const DecisionTreeModel&>(model);
        j["nodes"] = nodes_to_json(tree.nodes());
        j["importances"] = tree.attribute_importances();
    } else if (model.kind() == "ensemble") {
        const auto& forest = dynamic_cast<const EnsembleModel&>(model);
        json trees = json::array();
        for (const auto& t : forest.trees()) {
            json tj;
            tj["nodes"] = nodes_to_json(t->nodes());
            tj["importances"] = t->attribute_importances();
            trees.push_back(std::move(tj));
        }
        j["trees"] = std::move(trees);
    } else if (model.kind() == "mlp") {
        const auto& mlp = dynamic_cast<const MlpModel&>(model);
        j["dims"] = mlp.net().dims();
        j["params"] = mlp.params();
        json cols = json::array();
        for (const auto& c : mlp.encoder().columns) {
            json cj;
            cj["attribute"] = c.attribute;
            cj["categorical"] = c.categorical;
            cj["domain_size"] = c.domain_size;
            cj["offset"] = c.offset;
            cj["mean"] = c.mean;
            cj["stdev"] = c.stdev;
            cj["impute_cat"] = c.impute_cat;
            cj["impute_num"] = c.impute_num;
            cols.push_back(std::move(cj));
        }
        j["encoder"] = {{"width", mlp.encoder().width}, {"columns", std::move(cols)}};
    } else {
        throw ValidationError("cannot serialize model kind '" + model.kind() + "'");
    }
    return j;
}

inline ModelPtr model_from_json(const json& j) {
    int version = j.value("format_version", -1);
    if (version != kModelFormatVersion)
        throw ValidationError("model file has format version " + std::to_string(version) +
                              ", this build reads version " + std::to_string(kModelFormatVersion));
    SchemaPtr schema = schema_from_json(j.at("schema"));
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "decision_tree") {
        return std::make_shared<DecisionTreeModel>(
            schema, nodes_from_json(j.at("nodes")),
            j.at("importances").get<std::vector<double>>());
    }
    if (kind == "ensemble") {
        std::vector<std::shared_ptr<DecisionTreeModel>> trees;
        for (const auto& tj : j.at("trees"))
            trees.push_back(std::make_shared<DecisionTreeModel>(
                schema, nodes_from_json(tj.at("nodes")),
                tj.at("importances").get<std::vector<double>>()));
        return std::make_shared<EnsembleModel>(schema, std::move(trees));
    }
    if (kind == "mlp") {
        FeatureEncoder enc;
        enc.width = j.at("encoder").at("width").get<int>();
        for (const auto& cj : j.at("encoder").at("columns")) {
            FeatureEncoder::Column c;
            c.attribute = cj.at("attribute").get<int>();
            c.categorical = cj.at("categorical").get<bool>();
            c.domain_size = cj.at("domain_size").get<int>();
            c.offset = cj.at("offset").get<int>();
            c.mean = cj.at("mean").get<double>();
            c.stdev = cj.at("stdev").get<double>();
            c.impute_cat = cj.at("impute_cat").get<int>();
            c.impute_num = cj.at("impute_num").get<double>();
            enc.columns.push_back(c);
        }
        MlpNet net(j.at("dims").get<std::vector<int>>());
        return std::make_shared<MlpModel>(schema, std::move(enc), std::move(net),
                                          j.at("params").get<std::vector<double>>());
    }
    throw ValidationError("model file has unknown kind '" + kind + "'");
}

}  // namespace detail

inline void save_target(const SavedTarget& target, const std::string& path) {
    detail::json j = detail::model_to_json(*target.model);
    j["exposes_confidence"] = target.exposes_confidence;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out << j.dump(1) << "\n";
}

inline SavedTarget load_target(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open model file: " + path);
    detail::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ParseError("model file " + path + ": " + e.what());
    }
    SavedTarget t;
    t.model = detail::model_from_json(j);
    t.exposes_confidence = j.value("exposes_confidence", true);
    return t;
}

}  // namespace miai
