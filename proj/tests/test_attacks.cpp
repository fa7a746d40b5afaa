#include <gtest/gtest.h>

#include <cmath>

#include "miai/analysis.hpp"
#include "miai/attacks.hpp"
#include "support/helpers.hpp"

using namespace miai;
using testsup::cat_attr;
using testsup::cont_attr;
using testsup::labeled;
using testsup::make_schema;
using testsup::ScriptedModel;

namespace {

// sensitive {no,yes}, one known attribute, binary model label
SchemaPtr binary_schema() {
    return make_schema({cat_attr("s", {"no", "yes"}, Role::Sensitive),
                        cat_attr("known", {"k0", "k1"}),
                        cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
}

Record binary_record(int known, int true_y) {
    return Record{{Value::missing(), Value::categorical(known), Value::categorical(true_y)}};
}

// scripted responses keyed by the sensitive hypothesis in the query
std::shared_ptr<ScriptedModel> respond_by_hypothesis(SchemaPtr schema,
                                                     std::vector<PredictionOutput> by_value) {
    int s = schema->require("s");
    size_t m = schema->target_classes().size();
    return std::make_shared<ScriptedModel>(schema, [s, m, by_value](const Record& r) {
        const Value& v = r.values[s];
        if (v.is_missing()) return labeled(0, 0.6, m);
        return by_value.at(v.cat);
    });
}

MarginalPrior make_prior(std::string attr, std::vector<std::string> values,
                         std::vector<double> probs) {
    return MarginalPrior{std::move(attr), std::move(values), std::move(probs)};
}

ModelConfusionMatrix make_confusion(std::vector<std::string> classes,
                                    std::vector<std::vector<int64_t>> counts) {
    return ModelConfusionMatrix{std::move(classes), std::move(counts)};
}

}  // namespace

TEST(NaiveAttack, PredictsHighestPriorForAll) {
    auto schema = binary_schema();
    std::vector<std::vector<std::string>> rows;
    // 3017 of 15235 positive: the published survey training-split shape
    for (int i = 0; i < 15235; ++i)
        rows.push_back({i < 3017 ? "yes" : "no", "k0", "c0"});
    Dataset ds = testsup::make_dataset(schema, rows);
    auto prior = marginal_prior(ds, "s");
    auto result = naive_attack(prior, ds);
    EXPECT_EQ(result.queries_used, 0u);
    for (int p : result.predicted) EXPECT_EQ(p, 0);  // "no"

    auto truths = true_sensitive_values(ds, "s");
    auto counts = count_outcomes(result.predicted, truths, 1);
    auto m = metric_bundle(counts);
    EXPECT_NEAR(m.accuracy, 0.802, 0.0005);
    EXPECT_EQ(m.g_mean, 0.0);
    EXPECT_EQ(m.mcc, 0.0);
}

TEST(NaiveAttack, UniformPriorTieBreaksToFirstValue) {
    auto schema = binary_schema();
    Dataset ds = testsup::make_dataset(schema, {{"yes", "k0", "c0"}, {"no", "k0", "c0"}});
    auto result = naive_attack(make_prior("s", {"no", "yes"}, {0.5, 0.5}), ds);
    for (int p : result.predicted) EXPECT_EQ(p, 0);
}

TEST(RandGa, AlwaysPositiveGivesFullRecall) {
    auto schema = binary_schema();
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < 500; ++i) rows.push_back({i % 3 ? "no" : "yes", "k0", "c0"});
    Dataset ds = testsup::make_dataset(schema, rows);
    auto result = random_guess_attack({"no", "yes"}, {0.0, 1.0}, ds, 9);
    EXPECT_EQ(result.queries_used, 0u);
    auto truths = true_sensitive_values(ds, "s");
    auto m = metric_bundle(count_outcomes(result.predicted, truths, 1));
    EXPECT_EQ(m.recall, 1.0);
    EXPECT_EQ(m.g_mean, 0.0);
}

TEST(RandGa, SeedDeterminism) {
    auto schema = binary_schema();
    std::vector<std::vector<std::string>> rows(200, {"no", "k0", "c0"});
    Dataset ds = testsup::make_dataset(schema, rows);
    auto a = random_guess_attack({"no", "yes"}, {0.5, 0.5}, ds, 1234);
    auto b = random_guess_attack({"no", "yes"}, {0.5, 0.5}, ds, 1234);
    EXPECT_EQ(a.predicted, b.predicted);
    auto c = random_guess_attack({"no", "yes"}, {0.5, 0.5}, ds, 1235);
    EXPECT_NE(a.predicted, c.predicted);
}

TEST(RandGa, InvalidProbabilitiesRejected) {
    auto schema = binary_schema();
    Dataset ds = testsup::make_dataset(schema, {{"no", "k0", "c0"}});
    EXPECT_THROW(random_guess_attack({"no", "yes"}, {0.7, 0.7}, ds, 1), ValidationError);
    EXPECT_THROW(random_guess_attack({"no", "yes"}, {1.0}, ds, 1), ValidationError);
}

TEST(Fjrmia, HandWorkedScoreExample) {
    auto schema = binary_schema();
    // querying with "no" keeps the model right, querying with "yes" flips it
    auto model = respond_by_hypothesis(schema, {labeled(0, 0.9, 2), labeled(1, 0.8, 2)});
    BlackBoxTarget target(model, true);

    AdversaryKnowledge know = make_knowledge(*schema, "s");
    know.marginal_prior = make_prior("s", {"no", "yes"}, {0.8, 0.2});
    know.model_confusion = make_confusion({"c0", "c1"}, {{9, 1}, {2, 8}});

    Record rec = binary_record(0, 0);  // true label c0
    // scores: no -> C[c0,c0] * 0.8 = 0.72, yes -> C[c0,c1] * 0.2 = 0.02
    EXPECT_EQ(fjrmia_predict(target, know, rec), 0);
    EXPECT_EQ(target.ledger().total(), 2u);
}

TEST(Fjrmia, DegeneratePriorForcesValue) {
    auto schema = binary_schema();
    auto model = respond_by_hypothesis(schema, {labeled(0, 0.9, 2), labeled(1, 0.8, 2)});
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    know.marginal_prior = make_prior("s", {"no", "yes"}, {0.0, 1.0});
    know.model_confusion = make_confusion({"c0", "c1"}, {{9, 1}, {2, 8}});
    EXPECT_EQ(fjrmia_predict(target, know, binary_record(0, 0)), 1);
}

TEST(Fjrmia, MissingCapabilityInputsRejected) {
    auto schema = binary_schema();
    auto model = respond_by_hypothesis(schema, {labeled(0, 0.9, 2), labeled(0, 0.8, 2)});
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    EXPECT_THROW(fjrmia_predict(target, know, binary_record(0, 0)), ValidationError);
}

// When the model's answer ignores the sensitive hypothesis the scores reduce
// to the prior, so the attack collapses onto the most common value -- the
// published age-attack failure mode.
TEST(Fjrmia, CollapsesToPriorArgmaxOnInsensitiveModel) {
    auto schema = make_schema({cat_attr("age", {"18-29", "30-44", "45-60", ">60"}, Role::Sensitive),
                               cat_attr("known", {"k0"}),
                               cat_attr("steak", {"m", "mr", "r", "w", "ww"}, Role::TargetLabel)});
    auto model = std::make_shared<ScriptedModel>(
        schema, [](const Record&) { return labeled(0, 0.7, 5); });
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "age");
    know.marginal_prior = make_prior("age", {"18-29", "30-44", "45-60", ">60"},
                                     {0.211, 0.281, 0.26, 0.248});
    know.model_confusion =
        make_confusion({"m", "mr", "r", "w", "ww"},
                       {{50, 0, 0, 0, 0}, {0, 50, 0, 0, 0}, {0, 0, 50, 0, 0},
                        {0, 0, 0, 50, 0}, {0, 0, 0, 0, 50}});
    std::vector<Record> rows(331, Record{{Value::missing(), Value::categorical(0),
                                          Value::categorical(0)}});
    Dataset ds(schema, std::move(rows));
    auto result = run_fjrmia(target, know, ds);
    EXPECT_EQ(result.queries_used, 331u * 4u);
    for (int p : result.predicted) EXPECT_EQ(p, 1);  // 30-44
}

TEST(Csmia, CaseOneUniqueCorrectHypothesis) {
    auto schema = binary_schema();
    // yes-hypothesis answers the true label, no-hypothesis misses
    auto model = respond_by_hypothesis(schema, {labeled(1, 0.9, 2), labeled(0, 0.6, 2)});
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    auto [value, c] = csmia_predict(target, know, binary_record(0, 0));
    EXPECT_EQ(c, CsmiaCase::Case1);
    EXPECT_EQ(value, 1);  // "yes"
}

TEST(Csmia, CaseTwoPicksHigherConfidence) {
    auto schema = binary_schema();
    auto model = respond_by_hypothesis(schema, {labeled(0, 0.7, 2), labeled(0, 0.9, 2)});
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    auto [value, c] = csmia_predict(target, know, binary_record(0, 0));
    EXPECT_EQ(c, CsmiaCase::Case2);
    EXPECT_EQ(value, 1);  // both correct, yes answered with 0.9
}

TEST(Csmia, CaseThreePicksLowestConfidence) {
    auto schema = binary_schema();
    auto model = respond_by_hypothesis(schema, {labeled(1, 0.6, 2), labeled(1, 0.9, 2)});
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    auto [value, c] = csmia_predict(target, know, binary_record(0, 0));  // both wrong
    EXPECT_EQ(c, CsmiaCase::Case3);
    EXPECT_EQ(value, 0);  // "no" answered with the lower confidence
}

TEST(Csmia, LabelOnlyFacadeRejected) {
    auto schema = binary_schema();
    auto model = respond_by_hypothesis(schema, {labeled(0, 0.9, 2), labeled(1, 0.8, 2)});
    BlackBoxTarget target(model, false);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    EXPECT_THROW(csmia_predict(target, know, binary_record(0, 0)), ValidationError);
}

TEST(Csmia, CasePartitionCoversEveryRecord) {
    Dataset ds = testsup::census_sample(600, 71);
    auto fitted = fit_bins(ds.schema(), ds);
    Dataset binned = ds.with_schema(fitted);
    auto tree = train_decision_tree(binned, {});
    BlackBoxTarget target(tree, true);
    AdversaryKnowledge know = make_knowledge(binned.schema(), "marital");
    auto result = run_csmia(target, know, binned);
    ASSERT_TRUE(result.cases.has_value());
    size_t c1 = 0, c2 = 0, c3 = 0;
    for (auto c : *result.cases) {
        if (c == CsmiaCase::Case1) ++c1;
        else if (c == CsmiaCase::Case2) ++c2;
        else ++c3;
    }
    EXPECT_EQ(c1 + c2 + c3, binned.size());
    EXPECT_EQ(result.queries_used, binned.size() * 2);
}

namespace {

// random scripted instance: per hypothesis a label and a confidence in (0.5,1)
struct ScriptedInstance {
    std::vector<int> labels;
    std::vector<double> confs;
};

ScriptedInstance random_instance(Rng& rng, int k) {
    ScriptedInstance inst;
    for (int i = 0; i < k; ++i) {
        inst.labels.push_back(static_cast<int>(rng.below(2)));
        inst.confs.push_back(0.5 + 0.499 * rng.uniform());
    }
    return inst;
}

std::pair<int, CsmiaCase> run_scripted_csmia(SchemaPtr schema, const ScriptedInstance& inst) {
    std::vector<PredictionOutput> responses;
    for (size_t i = 0; i < inst.labels.size(); ++i)
        responses.push_back(labeled(inst.labels[i], inst.confs[i], 2));
    auto model = respond_by_hypothesis(schema, responses);
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    return csmia_predict(target, know, binary_record(0, 0));
}

}  // namespace

// Case decisions survive confidence rescaling: any per-query monotone rescale
// leaves Case-1 results alone (labels decide), and a common increasing
// transform of the compared scores leaves Case-2/3 picks alone.
TEST(Csmia, MonotoneRescalingInvariance) {
    auto schema = binary_schema();
    Rng rng(123);
    auto phi = [](double c) { return 0.5 + 0.5 * std::pow(2.0 * c - 1.0, 3.0); };
    for (int trial = 0; trial < 300; ++trial) {
        ScriptedInstance inst = random_instance(rng, 2);
        auto base = run_scripted_csmia(schema, inst);

        ScriptedInstance transformed = inst;
        for (double& c : transformed.confs) c = phi(c);
        auto moved = run_scripted_csmia(schema, transformed);

        EXPECT_EQ(base.second, moved.second);  // case assignment never moves
        EXPECT_EQ(base.first, moved.first);    // nor does the decision
    }
}

TEST(Csmia, ContinuousSensitiveQueriesUseBinRepresentatives) {
    auto schema = make_schema({cont_attr("wage", 2, Role::Sensitive),
                               cat_attr("known", {"k0"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    std::vector<Record> rows;
    for (int i = 0; i < 100; ++i)
        rows.push_back(Record{{Value::number(i), Value::categorical(0), Value::categorical(0)}});
    Dataset ds(schema, std::move(rows));
    auto fitted = fit_bins(ds.schema(), ds);
    Dataset binned = ds.with_schema(fitted);

    std::vector<double> seen;
    auto model = std::make_shared<ScriptedModel>(fitted, [&seen](const Record& r) {
        seen.push_back(r.values[0].num);
        return labeled(0, 0.9, 2);
    });
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*fitted, "wage");
    csmia_predict(target, know, binned.record(0));
    const auto& attr = fitted->at(0);
    ASSERT_EQ(seen.size(), 2u);
    EXPECT_EQ(seen[0], attr.bin_representatives[0]);
    EXPECT_EQ(seen[1], attr.bin_representatives[1]);
}

namespace {

// label encodes the sensitive bit, third class is the lookup-miss answer
Dataset encoded_label_dataset(size_t n, uint64_t seed) {
    auto schema = make_schema({cat_attr("s", {"s0", "s1"}, Role::Sensitive),
                               cat_attr("f1", {"a", "b", "c"}),
                               cat_attr("f2", {"u", "v"}),
                               cat_attr("y", {"y0", "y1", "miss"}, Role::TargetLabel)});
    Rng rng(seed);
    std::vector<Record> rows;
    for (size_t i = 0; i < n; ++i) {
        int s = static_cast<int>(rng.below(2));
        rows.push_back(Record{{Value::categorical(s),
                               Value::categorical(static_cast<int>(rng.below(3))),
                               Value::categorical(static_cast<int>(rng.below(2))),
                               Value::categorical(s)}});  // y0 iff s0
    }
    return Dataset(schema, std::move(rows));
}

}  // namespace

TEST(Lomia, MemorizingTargetHarvestsGroundTruth) {
    Dataset ds = encoded_label_dataset(400, 81);
    auto model = std::make_shared<testsup::MemorizingModel>(ds, 2);  // misses answer "miss"
    BlackBoxTarget target(model, false);                             // labels suffice
    AdversaryKnowledge know = make_knowledge(ds.schema(), "s");

    AttackDatasetDSA dsa = lomia_harvest(target, know, ds);
    EXPECT_EQ(dsa.queries_used, ds.size() * 2);
    ASSERT_EQ(dsa.data.size(), ds.size());  // every record is Case 1 here

    int atk_target = dsa.data.schema().target_index();
    auto truths = true_sensitive_values(ds, "s");
    for (size_t r = 0; r < dsa.data.size(); ++r)
        EXPECT_EQ(dsa.data.record(r).values[atk_target].cat, truths[dsa.source_rows[r]]);
}

TEST(Lomia, ConstantTargetHarvestsNothing) {
    Dataset ds = encoded_label_dataset(50, 82);
    auto model = std::make_shared<ScriptedModel>(
        ds.schema_ptr(), [](const Record&) { return labeled(0, 0.8, 3); });
    BlackBoxTarget target(model, false);
    AdversaryKnowledge know = make_knowledge(ds.schema(), "s");
    AttackDatasetDSA dsa = lomia_harvest(target, know, ds);
    EXPECT_EQ(dsa.data.size(), 0u);
    try {
        lomia_train(dsa, {});
        FAIL() << "expected an error about the empty attack dataset";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("naive"), std::string::npos);
    }
}

TEST(Lomia, SurrogateLearnsEncodedMapping) {
    Dataset ds = encoded_label_dataset(400, 83);
    auto model = std::make_shared<testsup::MemorizingModel>(ds, 2);
    BlackBoxTarget target(model, false);
    AdversaryKnowledge know = make_knowledge(ds.schema(), "s");
    AttackDatasetDSA dsa = lomia_harvest(target, know, ds);
    ForestConfig fc;
    fc.trees = 8;
    auto attack_model = lomia_train(dsa, fc);

    auto truths = true_sensitive_values(ds, "s");
    std::vector<int> preds(ds.size());
    for (size_t i = 0; i < ds.size(); ++i)
        preds[i] = lomia_infer(*attack_model, ds.schema(), ds.record(i));
    EXPECT_EQ(testsup::prediction_accuracy(preds, truths), 1.0);
    EXPECT_EQ(target.ledger().total(), dsa.queries_used);  // inference is query-free
}

TEST(Lomia, MissingLabelRejectedAndMissingFeaturesTolerated) {
    Dataset ds = encoded_label_dataset(300, 84);
    auto model = std::make_shared<testsup::MemorizingModel>(ds, 2);
    BlackBoxTarget target(model, false);
    AdversaryKnowledge know = make_knowledge(ds.schema(), "s");
    auto attack_model = lomia_train(lomia_harvest(target, know, ds), {});

    Record no_label = ds.record(0);
    no_label.values[ds.schema().target_index()] = Value::missing();
    EXPECT_THROW(lomia_infer(*attack_model, ds.schema(), no_label), ValidationError);

    // withholding the non-label features still yields a valid prediction
    int pred = lomia_infer(*attack_model, ds.schema(), ds.record(0), {"f1", "f2"});
    EXPECT_GE(pred, 0);
    EXPECT_LT(pred, 2);
}

TEST(Lomia, AttackModelLeansOnTheLabelFeature) {
    Dataset ds = testsup::census_sample(3000, 85);
    auto fitted = fit_bins(ds.schema(), ds);
    Dataset binned = ds.with_schema(fitted);
    auto tree = train_decision_tree(binned, {});
    BlackBoxTarget target(tree, false);
    AdversaryKnowledge know = make_knowledge(binned.schema(), "marital");
    AttackDatasetDSA dsa = lomia_harvest(target, know, binned);
    ASSERT_GT(dsa.data.size(), 50u);
    ForestConfig fc;
    fc.trees = 16;
    auto attack_model = lomia_train(dsa, fc);
    auto imp = attack_model->attribute_importances();
    int income = attack_model->schema().require("income");
    for (int a = 0; a < static_cast<int>(imp.size()); ++a)
        if (a != income) EXPECT_GE(imp[income], imp[a]);
}

TEST(CsmiaPartial, CorrectCountRuleDecides) {
    auto schema = make_schema({cat_attr("s", {"no", "yes"}, Role::Sensitive),
                               cat_attr("u", {"u0", "u1", "u2"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    int s = 0, u = 1;
    // correctness depends on (hypothesis, completion): no -> 2 correct, yes -> 1
    auto model = std::make_shared<ScriptedModel>(schema, [s, u](const Record& r) {
        int sv = r.values[s].cat, uv = r.values[u].cat;
        bool correct = (sv == 0 && uv <= 1) || (sv == 1 && uv == 0);
        return labeled(correct ? 0 : 1, 0.8, 2);
    });
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    Record rec{{Value::missing(), Value::missing(), Value::categorical(0)}};
    auto [value, c] = csmia_partial_predict(target, know, rec, {"u"});
    EXPECT_EQ(value, 0);
    EXPECT_EQ(c, CsmiaCase::Case1);
    EXPECT_EQ(target.ledger().total(), 6u);  // k * u = 2 * 3
}

TEST(CsmiaPartial, TiedCountsFallBackToConfidenceSums) {
    auto schema = make_schema({cat_attr("s", {"no", "yes"}, Role::Sensitive),
                               cat_attr("u", {"u0", "u1"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    // one correct completion per hypothesis; correct-confidence sums 0.8 vs 0.9
    auto model = std::make_shared<ScriptedModel>(schema, [](const Record& r) {
        int sv = r.values[0].cat, uv = r.values[1].cat;
        if (uv == 0) return labeled(0, sv == 0 ? 0.8 : 0.9, 2);  // correct
        return labeled(1, 0.7, 2);                               // wrong
    });
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    Record rec{{Value::missing(), Value::missing(), Value::categorical(0)}};
    auto [value, c] = csmia_partial_predict(target, know, rec, {"u"});
    EXPECT_EQ(c, CsmiaCase::Case2);
    EXPECT_EQ(value, 1);  // "yes" carries the larger correct-confidence sum
}

TEST(CsmiaPartial, AllWrongTakesSmallestConfidenceSum) {
    auto schema = make_schema({cat_attr("s", {"no", "yes"}, Role::Sensitive),
                               cat_attr("u", {"u0", "u1"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    auto model = std::make_shared<ScriptedModel>(schema, [](const Record& r) {
        int sv = r.values[0].cat;
        return labeled(1, sv == 0 ? 0.9 : 0.6, 2);  // always wrong for y=c0
    });
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    Record rec{{Value::missing(), Value::missing(), Value::categorical(0)}};
    auto [value, c] = csmia_partial_predict(target, know, rec, {"u"});
    EXPECT_EQ(c, CsmiaCase::Case3);
    EXPECT_EQ(value, 1);  // sum 1.2 beats 1.8
}

TEST(CsmiaPartial, TwoUnknownsMultiplyQueriesAndThreeAreRejected) {
    auto schema = make_schema({cat_attr("s", {"no", "yes"}, Role::Sensitive),
                               cat_attr("u1", {"a", "b", "c"}),
                               cat_attr("u2", {"x", "y"}),
                               cat_attr("u3", {"p", "q"}),
                               cat_attr("label", {"c0", "c1"}, Role::TargetLabel)});
    auto model = std::make_shared<ScriptedModel>(
        schema, [](const Record&) { return labeled(0, 0.8, 2); });
    BlackBoxTarget target(model, true);
    AdversaryKnowledge know = make_knowledge(*schema, "s");
    Record rec{{Value::missing(), Value::missing(), Value::missing(), Value::categorical(0),
                Value::categorical(0)}};
    csmia_partial_predict(target, know, rec, {"u1", "u2"});
    EXPECT_EQ(target.ledger().total(), 2u * 3u * 2u);  // k * u * v
    EXPECT_THROW(csmia_partial_predict(target, know, rec, {"u1", "u2", "u3"}),
                 ValidationError);
}

TEST(CsmiaPartial, SingletonUnknownMatchesPlainCsmia) {
    // unknown attribute with one possible value: decision-equivalent to CSMIA
    auto schema = make_schema({cat_attr("s", {"no", "yes"}, Role::Sensitive),
                               cat_attr("u", {"only"}),
                               cat_attr("extra", {"e0", "e1"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    Rng rng(321);
    for (int trial = 0; trial < 100; ++trial) {
        ScriptedInstance inst = random_instance(rng, 2);
        std::vector<PredictionOutput> responses;
        for (size_t i = 0; i < inst.labels.size(); ++i)
            responses.push_back(labeled(inst.labels[i], inst.confs[i], 2));
        auto model = std::make_shared<ScriptedModel>(schema, [&responses](const Record& r) {
            return responses.at(r.values[0].cat);
        });
        BlackBoxTarget t1(model, true), t2(model, true);
        AdversaryKnowledge know = make_knowledge(*schema, "s");
        Record rec{{Value::missing(), Value::categorical(0), Value::categorical(1),
                    Value::categorical(0)}};
        auto full = csmia_predict(t1, know, rec);
        auto partial = csmia_partial_predict(t2, know, rec, {"u"});
        EXPECT_EQ(full.first, partial.first);
        EXPECT_EQ(full.second, partial.second);
        EXPECT_EQ(t1.ledger().total(), t2.ledger().total());
    }
}

TEST(MultiAttribute, QueryTotalAndHiddenAttribute) {
    // 538-shaped: four age groups plus binary alcohol, 331 records
    auto schema = make_schema({cat_attr("age", {"18-29", "30-44", "45-60", ">60"}, Role::Sensitive),
                               cat_attr("alcohol", {"no", "yes"}, Role::Sensitive),
                               cat_attr("known", {"k0"}),
                               cat_attr("steak", {"m", "r"}, Role::TargetLabel)});
    int age = 0, alcohol = 1;
    size_t bad_queries = 0;
    auto model = std::make_shared<ScriptedModel>(schema, [&](const Record& r) {
        // while one sensitive attribute is attacked the other must be unset
        if (!r.values[age].is_missing() && !r.values[alcohol].is_missing()) ++bad_queries;
        int h = !r.values[age].is_missing() ? r.values[age].cat : r.values[alcohol].cat;
        return labeled(h % 2, 0.6 + 0.05 * h, 2);
    });
    BlackBoxTarget target(model, true);
    std::vector<Record> rows(331, Record{{Value::categorical(0), Value::categorical(1),
                                          Value::categorical(0), Value::categorical(0)}});
    Dataset ds(schema, std::move(rows));

    std::vector<AdversaryKnowledge> knows{make_knowledge(*schema, "age"),
                                          make_knowledge(*schema, "alcohol")};
    auto results = multi_attribute(AttackKind::Csmia, target, knows, ds);
    ASSERT_EQ(results.size(), 2u);
    EXPECT_EQ(results[0].queries_used + results[1].queries_used, 331u * 6u);  // 331*(4+2)
    EXPECT_EQ(target.ledger().total(), 1986u);
    EXPECT_EQ(bad_queries, 0u);
}

TEST(MultiAttribute, EstimatesIndependentOfJointRun) {
    auto schema = make_schema({cat_attr("a", {"a0", "a1"}, Role::Sensitive),
                               cat_attr("b", {"b0", "b1", "b2"}, Role::Sensitive),
                               cat_attr("known", {"k0", "k1"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    auto model = std::make_shared<ScriptedModel>(schema, [](const Record& r) {
        int a = r.values[0].is_missing() ? 0 : r.values[0].cat + 1;
        int b = r.values[1].is_missing() ? 0 : r.values[1].cat + 1;
        int k = r.values[2].cat;
        return labeled((a * 3 + b + k) % 2, 0.55 + 0.04 * a + 0.03 * b, 2);
    });
    std::vector<Record> rows;
    Rng rng(55);
    for (int i = 0; i < 60; ++i)
        rows.push_back(Record{{Value::categorical(static_cast<int>(rng.below(2))),
                               Value::categorical(static_cast<int>(rng.below(3))),
                               Value::categorical(static_cast<int>(rng.below(2))),
                               Value::categorical(static_cast<int>(rng.below(2)))}});
    Dataset ds(schema, std::move(rows));

    BlackBoxTarget joint_target(model, true);
    std::vector<AdversaryKnowledge> knows{make_knowledge(*schema, "a"),
                                          make_knowledge(*schema, "b")};
    auto joint = multi_attribute(AttackKind::Csmia, joint_target, knows, ds);

    BlackBoxTarget solo_target(model, true);
    auto solo = run_csmia(solo_target, knows[0], ds);
    EXPECT_EQ(joint[0].predicted, solo.predicted);
}

TEST(Attacks, LedgerExactnessPerRecord) {
    auto schema = make_schema({cat_attr("s", {"v0", "v1", "v2"}, Role::Sensitive),
                               cat_attr("known", {"k0"}),
                               cat_attr("y", {"c0", "c1"}, Role::TargetLabel)});
    auto model = std::make_shared<ScriptedModel>(schema, [](const Record& r) {
        return labeled(r.values[0].cat % 2, 0.7, 2);
    });
    std::vector<Record> rows(100, Record{{Value::categorical(0), Value::categorical(0),
                                          Value::categorical(0)}});
    Dataset ds(schema, std::move(rows));
    AdversaryKnowledge know = make_knowledge(*schema, "s");

    BlackBoxTarget t1(model, true);
    run_csmia(t1, know, ds);
    EXPECT_EQ(t1.ledger().total(), 300u);

    BlackBoxTarget t2(model, true);
    know.marginal_prior = make_prior("s", {"v0", "v1", "v2"}, {0.2, 0.5, 0.3});
    know.model_confusion = make_confusion({"c0", "c1"}, {{5, 5}, {5, 5}});
    run_fjrmia(t2, know, ds);
    EXPECT_EQ(t2.ledger().total(), 300u);

    BlackBoxTarget t3(model, false);
    lomia_harvest(t3, know, ds);
    EXPECT_EQ(t3.ledger().total(), 300u);
}

TEST(Attacks, ParallelRunsMatchSerialRuns) {
    Dataset ds = testsup::census_sample(400, 91);
    auto fitted = fit_bins(ds.schema(), ds);
    Dataset binned = ds.with_schema(fitted);
    auto tree = train_decision_tree(binned, {});
    AdversaryKnowledge know = make_knowledge(binned.schema(), "marital");

    BlackBoxTarget serial(tree, true), parallel(tree, true);
    auto a = run_csmia(serial, know, binned, 1);
    auto b = run_csmia(parallel, know, binned, 4);
    EXPECT_EQ(a.predicted, b.predicted);
    EXPECT_EQ(serial.ledger().total(), parallel.ledger().total());
}
