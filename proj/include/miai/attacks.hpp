#pragma once

#include <optional>
#include <string>
#include <vector>

#include "miai/black_box.hpp"
#include "miai/dataset.hpp"
#include "miai/ensemble.hpp"
#include "miai/metrics.hpp"

namespace miai {

enum class CsmiaCase { Case1 = 1, Case2 = 2, Case3 = 3 };

inline std::string case_name(CsmiaCase c) {
    switch (c) {
        case CsmiaCase::Case1: return "case1";
        case CsmiaCase::Case2: return "case2";
        case CsmiaCase::Case3: return "case3";
    }
    return "?";
}

// What the adversary is assumed to have for one attacked attribute. The
// sensitive attribute itself is never among the known ones.
struct AdversaryKnowledge {
    std::string sensitive_attribute;
    std::vector<std::string> sensitive_values;   // all k possible values
    std::vector<std::string> known_attributes;   // readable non-sensitive attributes
    bool knows_true_label = true;
    std::optional<MarginalPrior> marginal_prior;          // FJRMIA, NaiveA
    std::optional<ModelConfusionMatrix> model_confusion;  // FJRMIA
    // other sensitive attributes: left unset in every query (multi-attribute runs)
    std::vector<std::string> hidden_attributes;
};

inline AdversaryKnowledge make_knowledge(const AttributeSchema& schema,
                                         const std::string& sensitive_attribute) {
    AdversaryKnowledge know;
    know.sensitive_attribute = sensitive_attribute;
    const Attribute& s = schema.at(schema.require(sensitive_attribute));
    if (s.role != Role::Sensitive)
        throw ValidationError("attribute '" + sensitive_attribute + "' is not marked sensitive");
    know.sensitive_values = s.resolved_domain();
    if (know.sensitive_values.size() < 2)
        throw ValidationError("sensitive attribute '" + sensitive_attribute +
                              "' has fewer than two possible values");
    for (const auto& a : schema.attributes()) {
        if (a.role == Role::NonSensitive) know.known_attributes.push_back(a.name);
        else if (a.role == Role::Sensitive && a.name != sensitive_attribute)
            know.hidden_attributes.push_back(a.name);
    }
    return know;
}

// Per-record predictions for one attacked attribute plus the run's ledger
// cost and, for the case-based attacks, the per-record case assignment.
struct AttackPrediction {
    std::string attribute;
    std::vector<int> predicted;  // index into the sensitive value list
    uint64_t queries_used = 0;
    std::optional<std::vector<CsmiaCase>> cases;
};

namespace detail {

// The sensitive value written into a query: the token itself, or the fitted
// bin's representative number when the sensitive attribute is continuous.
inline Value hypothesis_value(const Attribute& attr, int hypothesis) {
    if (attr.is_categorical()) return Value::categorical(hypothesis);
    if (!attr.binning_fitted())
        throw ValidationError("continuous sensitive attribute '" + attr.name + "' is not binned");
    return Value::number(attr.bin_representatives[hypothesis]);
}

struct QueryPlan {
    int sensitive_index = -1;
    int target_index = -1;
    std::vector<int> hidden_indices;

    QueryPlan(const AttributeSchema& schema, const AdversaryKnowledge& know) {
        sensitive_index = schema.require(know.sensitive_attribute);
        target_index = schema.target_index();
        for (const auto& h : know.hidden_attributes) hidden_indices.push_back(schema.require(h));
    }

    Record make_query(const Record& base, const Attribute& sensitive, int hypothesis) const {
        Record q = base;
        q.values[sensitive_index] = hypothesis_value(sensitive, hypothesis);
        for (int h : hidden_indices) q.values[h] = Value::missing();
        return q;
    }

    int true_label(const Record& r) const {
        const Value& y = r.values[target_index];
        if (y.is_missing()) throw ValidationError("attacked record has no true label");
        return y.cat;
    }
};

inline void require_confidence(const BlackBoxTarget& target, const std::string& attack) {
    if (!target.exposes_confidence())
        throw ValidationError(attack + " needs confidence scores but the target is label-only");
}

inline double predicted_confidence(const TargetResponse& resp) {
    return (*resp.confidences)[resp.label];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// No-query baselines
// ---------------------------------------------------------------------------

// Constant majority-prior guess. Never queries the model.
inline AttackPrediction naive_attack(const MarginalPrior& prior, const Dataset& targets) {
    if (prior.probabilities.empty()) throw ValidationError("empty marginal prior");
    int best = 0;
    for (int i = 1; i < static_cast<int>(prior.probabilities.size()); ++i)
        if (prior.probabilities[i] > prior.probabilities[best]) best = i;
    AttackPrediction out;
    out.attribute = prior.attribute;
    out.predicted.assign(targets.size(), best);
    return out;
}

// Independent per-record draws from p. Randomness is a pure function of
// (seed, record index), so results do not depend on evaluation order.
inline AttackPrediction random_guess_attack(const std::vector<std::string>& domain,
                                            const std::vector<double>& p, const Dataset& targets,
                                            uint64_t seed) {
    if (p.size() != domain.size())
        throw ValidationError("guess probabilities do not match the sensitive domain");
    double sum = 0.0;
    for (double v : p) {
        if (v < 0.0 || v > 1.0) throw ValidationError("guess probabilities must be in [0,1]");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("guess probabilities must sum to 1");
    AttackPrediction out;
    out.predicted.resize(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        double u = indexed_uniform(seed, i);
        double acc = 0.0;
        int pick = static_cast<int>(domain.size()) - 1;
        for (size_t v = 0; v < p.size(); ++v) {
            acc += p[v];
            if (u < acc) { pick = static_cast<int>(v); break; }
        }
        out.predicted[i] = pick;
    }
    return out;
}

// ---------------------------------------------------------------------------
// FJRMIA: confusion-likelihood times marginal prior
// ---------------------------------------------------------------------------

// Scores each candidate sensitive value i as C[y, y'_i] * p_i with C row-
// normalized; k queries. Ties prefer the higher prior, then the lower index.
inline int fjrmia_predict(const BlackBoxTarget& target, const AdversaryKnowledge& know,
                          const Record& record) {
    if (!know.marginal_prior || !know.model_confusion)
        throw ValidationError("FJRMIA needs the marginal prior and the model confusion matrix");
    detail::QueryPlan plan(target.schema(), know);
    const Attribute& sensitive = target.schema().at(plan.sensitive_index);
    int y = plan.true_label(record);
    auto cond = know.model_confusion->row_normalized();
    const auto& prior = know.marginal_prior->probabilities;
    if (prior.size() != know.sensitive_values.size())
        throw ValidationError("marginal prior does not cover the sensitive domain");

    int best = -1;
    double best_score = -1.0, best_prior = -1.0;
    for (int i = 0; i < static_cast<int>(know.sensitive_values.size()); ++i) {
        auto resp = target.predict(plan.make_query(record, sensitive, i));
        double score = cond[y][resp.label] * prior[i];
        if (score > best_score || (score == best_score && prior[i] > best_prior)) {
            best = i;
            best_score = score;
            best_prior = prior[i];
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// CSMIA: case analysis over the k sensitive-value hypotheses
// ---------------------------------------------------------------------------

// Case 1: exactly one hypothesis makes the model right -> take it.
// Case 2: several do -> take the correct one answered with the highest
//         confidence. Case 3: none does -> take the hypothesis answered with
//         the lowest confidence. Ties fall to the lowest value index.
inline std::pair<int, CsmiaCase> csmia_predict(const BlackBoxTarget& target,
                                               const AdversaryKnowledge& know,
                                               const Record& record) {
    detail::require_confidence(target, "CSMIA");
    detail::QueryPlan plan(target.schema(), know);
    const Attribute& sensitive = target.schema().at(plan.sensitive_index);
    int y = plan.true_label(record);
    int k = static_cast<int>(know.sensitive_values.size());

    std::vector<bool> correct(k);
    std::vector<double> conf(k);
    int n_correct = 0;
    for (int i = 0; i < k; ++i) {
        auto resp = target.predict(plan.make_query(record, sensitive, i));
        correct[i] = resp.label == y;
        conf[i] = detail::predicted_confidence(resp);
        n_correct += correct[i];
    }

    if (n_correct == 1) {
        for (int i = 0; i < k; ++i)
            if (correct[i]) return {i, CsmiaCase::Case1};
    }
    if (n_correct >= 2) {
        int best = -1;
        for (int i = 0; i < k; ++i)
            if (correct[i] && (best < 0 || conf[i] > conf[best])) best = i;
        return {best, CsmiaCase::Case2};
    }
    int best = 0;
    for (int i = 1; i < k; ++i)
        if (conf[i] < conf[best]) best = i;
    return {best, CsmiaCase::Case3};
}

// ---------------------------------------------------------------------------
// CSMIA with unknown non-sensitive attributes (at most two)
// ---------------------------------------------------------------------------

// Enumerates every completion of the unknown attributes per hypothesis and
// counts correct answers C_i. Unique maximum decides; a shared non-zero
// maximum falls back to the largest correct-confidence sum among the tied
// values; all-zero counts take the smallest total confidence sum.
inline std::pair<int, CsmiaCase> csmia_partial_predict(const BlackBoxTarget& target,
                                                       const AdversaryKnowledge& know,
                                                       const Record& record,
                                                       const std::vector<std::string>& unknown_attributes) {
    detail::require_confidence(target, "CSMIA");
    if (unknown_attributes.empty())
        throw ValidationError("partial-knowledge CSMIA needs at least one unknown attribute");
    if (unknown_attributes.size() > 2)
        throw ValidationError("partial-knowledge CSMIA supports at most two unknown attributes");

    const AttributeSchema& schema = target.schema();
    detail::QueryPlan plan(schema, know);
    const Attribute& sensitive = schema.at(plan.sensitive_index);
    int y = plan.true_label(record);
    int k = static_cast<int>(know.sensitive_values.size());

    struct Unknown {
        int index;
        const Attribute* attr;
        int cardinality;
    };
    std::vector<Unknown> unknowns;
    for (const auto& name : unknown_attributes) {
        int idx = schema.require(name);
        if (idx == plan.sensitive_index || schema.at(idx).role != Role::NonSensitive)
            throw ValidationError("unknown attribute '" + name + "' must be non-sensitive");
        const Attribute& attr = schema.at(idx);
        int card = static_cast<int>(attr.resolved_domain().size());
        if (card < 1) throw ValidationError("unknown attribute '" + name + "' has an empty domain");
        unknowns.push_back({idx, &attr, card});
    }

    std::vector<int64_t> correct_count(k, 0);
    std::vector<double> correct_conf_sum(k, 0.0), all_conf_sum(k, 0.0);

    int completions = 1;
    for (const auto& u : unknowns) completions *= u.cardinality;

    for (int i = 0; i < k; ++i) {
        for (int c = 0; c < completions; ++c) {
            Record q = plan.make_query(record, sensitive, i);
            int rest = c;
            for (const auto& u : unknowns) {
                int v = rest % u.cardinality;
                rest /= u.cardinality;
                q.values[u.index] = detail::hypothesis_value(*u.attr, v);
            }
            auto resp = target.predict(q);
            double conf = detail::predicted_confidence(resp);
            all_conf_sum[i] += conf;
            if (resp.label == y) {
                ++correct_count[i];
                correct_conf_sum[i] += conf;
            }
        }
    }

    int64_t max_count = *std::max_element(correct_count.begin(), correct_count.end());
    int n_at_max = 0;
    for (int64_t c : correct_count) n_at_max += c == max_count;

    if (max_count > 0 && n_at_max == 1) {
        for (int i = 0; i < k; ++i)
            if (correct_count[i] == max_count) return {i, CsmiaCase::Case1};
    }
    if (max_count > 0) {
        int best = -1;
        for (int i = 0; i < k; ++i)
            if (correct_count[i] == max_count &&
                (best < 0 || correct_conf_sum[i] > correct_conf_sum[best]))
                best = i;
        return {best, CsmiaCase::Case2};
    }
    int best = 0;
    for (int i = 1; i < k; ++i)
        if (all_conf_sum[i] < all_conf_sum[best]) best = i;
    return {best, CsmiaCase::Case3};
}

// ---------------------------------------------------------------------------
// LOMIA: harvest Case-1 records, train a surrogate, infer
// ---------------------------------------------------------------------------

// Case-1 records labeled with the uniquely-correct sensitive value; this is
// the attack model's training set.
struct AttackDatasetDSA {
    Dataset data;
    uint64_t queries_used = 0;
    std::vector<size_t> source_rows;  // candidate indices that were Case 1
};

// Schema for the attack model: the attacked attribute becomes the label (as
// a categorical over its resolved domain), the target model's label becomes
// an ordinary input, any other sensitive attribute is dropped.
inline SchemaPtr lomia_attack_schema(const AttributeSchema& target_schema,
                                     const std::string& sensitive_attribute,
                                     std::vector<int>* index_map = nullptr) {
    int s = target_schema.require(sensitive_attribute);
    std::vector<Attribute> attrs;
    std::vector<int> map(target_schema.size(), -1);
    for (int a = 0; a < static_cast<int>(target_schema.size()); ++a) {
        Attribute attr = target_schema.at(a);
        if (a == s) {
            attr.kind = AttrKind::Categorical;
            attr.domain = target_schema.at(a).resolved_domain();
            attr.bin_edges.clear();
            attr.bin_representatives.clear();
            attr.role = Role::TargetLabel;
        } else if (attr.role == Role::Sensitive) {
            continue;  // the adversary does not know it, so the model never sees it
        } else if (attr.role == Role::TargetLabel) {
            attr.role = Role::NonSensitive;
        }
        map[a] = static_cast<int>(attrs.size());
        attrs.push_back(std::move(attr));
    }
    if (index_map) *index_map = std::move(map);
    return std::make_shared<AttributeSchema>(std::move(attrs));
}

// k label-only queries per candidate; keeps exactly the Case-1 records.
inline AttackDatasetDSA lomia_harvest(const BlackBoxTarget& target, const AdversaryKnowledge& know,
                                      const Dataset& candidates, int jobs = 1) {
    const AttributeSchema& schema = target.schema();
    detail::QueryPlan plan(schema, know);
    const Attribute& sensitive = schema.at(plan.sensitive_index);
    int k = static_cast<int>(know.sensitive_values.size());

    uint64_t before = target.ledger().total();
    std::vector<int> harvested(candidates.size(), -1);
    parallel_for(candidates.size(), jobs, [&](size_t r) {
        const Record& rec = candidates.record(r);
        int y = plan.true_label(rec);
        int unique = -1, n_correct = 0;
        for (int i = 0; i < k; ++i) {
            auto resp = target.predict(plan.make_query(rec, sensitive, i));
            if (resp.label == y) {
                ++n_correct;
                unique = i;
            }
        }
        if (n_correct == 1) harvested[r] = unique;
    });

    std::vector<int> index_map;
    SchemaPtr attack_schema = lomia_attack_schema(schema, know.sensitive_attribute, &index_map);
    int attack_target = attack_schema->target_index();

    AttackDatasetDSA out{Dataset(attack_schema, {}, candidates.name() + "/dsa"), 0, {}};
    std::vector<Record> rows;
    for (size_t r = 0; r < candidates.size(); ++r) {
        if (harvested[r] < 0) continue;
        const Record& src = candidates.record(r);
        Record rec;
        rec.values.assign(attack_schema->size(), Value::missing());
        for (size_t a = 0; a < schema.size(); ++a)
            if (index_map[a] >= 0) rec.values[index_map[a]] = src.values[a];
        rec.values[attack_target] = Value::categorical(harvested[r]);
        rows.push_back(std::move(rec));
        out.source_rows.push_back(r);
    }
    out.data = Dataset(attack_schema, std::move(rows), candidates.name() + "/dsa");
    out.queries_used = target.ledger().total() - before;
    return out;
}

// Decision-forest surrogate trained on DS_A. No target-model queries.
inline std::shared_ptr<EnsembleModel> lomia_train(const AttackDatasetDSA& dsa,
                                                  const ForestConfig& cfg = {}) {
    if (dsa.data.empty())
        throw ValidationError(
            "DS_A is empty: no Case-1 records were harvested; fall back to the naive attack");
    return train_ensemble(dsa.data, cfg);
}

// Queries the surrogate with the known non-sensitive attributes plus the true
// label; attributes in `withheld` are treated as unknown. Zero target queries.
inline int lomia_infer(const Model& attack_model, const AttributeSchema& target_schema,
                       const Record& target_record,
                       const std::vector<std::string>& withheld = {}) {
    const AttributeSchema& aschema = attack_model.schema();
    int attack_target = aschema.target_index();
    const std::string& sensitive_name = aschema.at(attack_target).name;

    Record q;
    q.values.assign(aschema.size(), Value::missing());
    for (int a = 0; a < static_cast<int>(aschema.size()); ++a) {
        if (a == attack_target) continue;
        int src = target_schema.index_of(aschema.at(a).name);
        if (src >= 0) q.values[a] = target_record.values[src];
    }
    for (const auto& name : withheld) {
        if (name == sensitive_name) continue;
        int a = aschema.index_of(name);
        if (a >= 0) q.values[a] = Value::missing();
    }

    int y_attr = aschema.index_of(target_schema.at(target_schema.target_index()).name);
    if (y_attr >= 0 && q.values[y_attr].is_missing())
        throw ValidationError("LOMIA inference requires the record's true label");

    return attack_model.predict(q).label;
}

// ---------------------------------------------------------------------------
// Whole-dataset drivers
// ---------------------------------------------------------------------------

inline AttackPrediction run_fjrmia(const BlackBoxTarget& target, const AdversaryKnowledge& know,
                                   const Dataset& ds, int jobs = 1) {
    AttackPrediction out;
    out.attribute = know.sensitive_attribute;
    out.predicted.assign(ds.size(), -1);
    uint64_t before = target.ledger().total();
    parallel_for(ds.size(), jobs,
                 [&](size_t i) { out.predicted[i] = fjrmia_predict(target, know, ds.record(i)); });
    out.queries_used = target.ledger().total() - before;
    return out;
}

inline AttackPrediction run_csmia(const BlackBoxTarget& target, const AdversaryKnowledge& know,
                                  const Dataset& ds, int jobs = 1) {
    AttackPrediction out;
    out.attribute = know.sensitive_attribute;
    out.predicted.assign(ds.size(), -1);
    out.cases.emplace(ds.size(), CsmiaCase::Case1);
    uint64_t before = target.ledger().total();
    parallel_for(ds.size(), jobs, [&](size_t i) {
        auto [value, c] = csmia_predict(target, know, ds.record(i));
        out.predicted[i] = value;
        (*out.cases)[i] = c;
    });
    out.queries_used = target.ledger().total() - before;
    return out;
}

inline AttackPrediction run_csmia_partial(const BlackBoxTarget& target,
                                          const AdversaryKnowledge& know, const Dataset& ds,
                                          const std::vector<std::string>& unknown_attributes,
                                          int jobs = 1) {
    AttackPrediction out;
    out.attribute = know.sensitive_attribute;
    out.predicted.assign(ds.size(), -1);
    out.cases.emplace(ds.size(), CsmiaCase::Case1);
    uint64_t before = target.ledger().total();
    parallel_for(ds.size(), jobs, [&](size_t i) {
        auto [value, c] = csmia_partial_predict(target, know, ds.record(i), unknown_attributes);
        out.predicted[i] = value;
        (*out.cases)[i] = c;
    });
    out.queries_used = target.ledger().total() - before;
    return out;
}

// Harvest + train + infer over the same dataset. `withheld` models partial
// knowledge at inference time (it never costs extra queries).
inline AttackPrediction run_lomia(const BlackBoxTarget& target, const AdversaryKnowledge& know,
                                  const Dataset& ds, const ForestConfig& forest_cfg = {},
                                  int jobs = 1, const std::vector<std::string>& withheld = {}) {
    AttackDatasetDSA dsa = lomia_harvest(target, know, ds, jobs);
    auto attack_model = lomia_train(dsa, forest_cfg);
    AttackPrediction out;
    out.attribute = know.sensitive_attribute;
    out.predicted.assign(ds.size(), -1);
    parallel_for(ds.size(), jobs, [&](size_t i) {
        out.predicted[i] = lomia_infer(*attack_model, target.schema(), ds.record(i), withheld);
    });
    out.queries_used = dsa.queries_used;
    return out;
}

// ---------------------------------------------------------------------------
// Multiple sensitive attributes
// ---------------------------------------------------------------------------

enum class AttackKind { Naive, RandGA, Fjrmia, Csmia, Lomia };

// One independent attack instance per attacked attribute; while x1 is under
// attack every query leaves x2 unset, and vice versa.
inline std::vector<AttackPrediction> multi_attribute(AttackKind kind, const BlackBoxTarget& target,
                                                     std::vector<AdversaryKnowledge> knowledge,
                                                     const Dataset& ds,
                                                     const ForestConfig& forest_cfg = {},
                                                     int jobs = 1) {
    if (knowledge.empty()) throw ValidationError("no sensitive attributes to attack");
    std::vector<AttackPrediction> out;
    for (auto& know : knowledge) {
        switch (kind) {
            case AttackKind::Fjrmia: out.push_back(run_fjrmia(target, know, ds, jobs)); break;
            case AttackKind::Csmia: out.push_back(run_csmia(target, know, ds, jobs)); break;
            case AttackKind::Lomia: out.push_back(run_lomia(target, know, ds, forest_cfg, jobs)); break;
            default:
                throw ValidationError("multi-attribute runs need a model-querying attack");
        }
    }
    return out;
}

}  // namespace miai
