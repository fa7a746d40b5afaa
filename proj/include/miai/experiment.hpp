#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "miai/analysis.hpp"
#include "miai/attacks.hpp"
#include "miai/config.hpp"
#include "miai/model_io.hpp"
#include "miai/report.hpp"

namespace miai {

struct LoadedData {
    Dataset full;
    Dataset train;    // DS_T
    Dataset holdout;  // DS_D
};

inline LoadedData prepare_data(const ExperimentConfig& cfg) {
    AttributeSchema declared = load_schema(cfg.schema_path);
    Dataset full = load_csv(cfg.csv_path, declared);
    auto [train, holdout] = split(full, cfg.split_fraction, cfg.seed, cfg.stratified);
    SchemaPtr fitted = fit_bins(full.schema(), train);
    fitted->validate_resolved();
    LoadedData data{full.with_schema(fitted), train.with_schema(fitted), holdout.with_schema(fitted)};
    if (cfg.distributional && data.holdout.empty())
        throw ValidationError("distributional analysis needs a non-empty holdout split");
    return data;
}

inline SavedTarget train_target(const ExperimentConfig& cfg, const Dataset& train) {
    SavedTarget out;
    out.exposes_confidence = cfg.exposes_confidence;
    if (cfg.target_kind == "decision_tree") {
        TreeConfig tc = cfg.tree;
        tc.seed = cfg.seed;
        out.model = train_decision_tree(train, tc);
    } else if (cfg.target_kind == "mlp") {
        MlpConfig mc = cfg.mlp;
        mc.seed = cfg.seed;
        out.model = train_mlp(train, mc);
    } else if (cfg.target_kind == "ensemble") {
        ForestConfig fc = cfg.forest;
        fc.seed = cfg.seed;
        out.model = train_ensemble(train, fc);
    } else {
        throw ValidationError("unknown target kind '" + cfg.target_kind + "'");
    }
    return out;
}

namespace detail {

inline std::string out_path(const ExperimentConfig& cfg, const std::string& file) {
    return (std::filesystem::path(cfg.out_dir) / file).string();
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path + " (run the attack stage first?)");
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

inline std::string token_of(const Attribute& attr, const Value& v) {
    int idx = resolved_value_index(attr, v);
    return idx < 0 ? std::string() : attr.resolved_domain()[idx];
}

// seed for an attack's own randomness, stable under attack reordering
inline uint64_t attack_seed(uint64_t base, const std::string& attack_name, size_t attr_index) {
    uint64_t h = 1469598103934665603ULL;
    for (char c : attack_name) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return splitmix64(base ^ h ^ (attr_index * 0x9e3779b97f4a7c15ULL));
}

struct TargetEval {
    ModelConfusionMatrix confusion;
    std::vector<char> correct;  // per record
};

inline TargetEval evaluate_target(ModelPtr model, const Dataset& ds) {
    BlackBoxTarget facade(model, true);
    TargetEval eval;
    eval.confusion = confusion_matrix(facade, ds);
    eval.correct.assign(ds.size(), 0);
    int t = ds.schema().target_index();
    // confusion_matrix consumed one query per record; this pass re-predicts
    // outside any ledger we report, purely for the per-record flags
    for (size_t i = 0; i < ds.size(); ++i) {
        auto pred = model->predict(ds.record(i));
        const Value& y = ds.record(i).values[t];
        eval.correct[i] = !y.is_missing() && pred.label == y.cat;
    }
    return eval;
}

inline uint64_t expected_attack_queries(const AttackSpec& spec, const AttributeSchema& schema,
                                        const std::string& attr, size_t records) {
    if (spec.kind == "naive" || spec.kind == "randga") return 0;
    size_t k = schema.at(schema.require(attr)).resolved_domain().size();
    uint64_t per_record = k;
    if (spec.kind == "csmia")
        for (const auto& u : spec.unknown_attributes)
            per_record *= schema.at(schema.require(u)).resolved_domain().size();
    return static_cast<uint64_t>(records) * per_record;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Stage 1: train (or import) the target model
// ---------------------------------------------------------------------------

inline void stage_train(const ExperimentConfig& cfg) {
    validate_config(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    SavedTarget target;
    if (!cfg.target_load.empty()) {
        target = load_target(cfg.target_load);
        target.exposes_confidence = target.exposes_confidence && cfg.exposes_confidence;
    } else {
        LoadedData data = prepare_data(cfg);
        target = train_target(cfg, data.train);
    }
    save_target(target, detail::out_path(cfg, "target.model.json"));
}

// ---------------------------------------------------------------------------
// Stage 2: run the configured attacks, write predictions + ledger meta
// ---------------------------------------------------------------------------

inline void stage_attack(const ExperimentConfig& cfg, bool label_only_override = false) {
    validate_config(cfg);
    LoadedData data = prepare_data(cfg);
    SavedTarget saved = load_target(detail::out_path(cfg, "target.model.json"));

    bool confidence = saved.exposes_confidence && cfg.exposes_confidence && !label_only_override;
    for (const auto& spec : cfg.attacks)
        if (spec.kind == "csmia" && !confidence)
            throw ValidationError("attack '" + spec.name +
                                  "': CSMIA needs confidence scores but the target is label-only");

    const AttributeSchema& schema = data.train.schema();
    auto sensitive = schema.sensitive_indices();

    // Evaluation-side pass: the target's own predictions, used for the
    // reported confusion matrix (also FJRMIA's assumed knowledge) and the
    // per-subgroup target accuracy. Not part of any attack's ledger.
    detail::TargetEval train_eval = detail::evaluate_target(saved.model, data.train);
    detail::TargetEval holdout_eval;
    if (cfg.distributional) holdout_eval = detail::evaluate_target(saved.model, data.holdout);

    {
        std::ostringstream os;
        os << "dataset,record_index,true_label,predicted_label\n";
        int t = schema.target_index();
        const Attribute& tattr = schema.at(t);
        auto dump = [&](const char* name, const Dataset& ds) {
            for (size_t i = 0; i < ds.size(); ++i) {
                auto pred = saved.model->predict(ds.record(i));
                os << name << "," << i << ","
                   << detail::csv_escape(detail::token_of(tattr, ds.record(i).values[t])) << ","
                   << detail::csv_escape(tattr.resolved_domain()[pred.label]) << "\n";
            }
        };
        dump("train", data.train);
        if (cfg.distributional) dump("holdout", data.holdout);
        write_file(detail::out_path(cfg, "target_predictions.csv"), os.str());
    }

    KvDoc meta;
    meta.add("target.kind", saved.model->kind());
    meta.add("target.exposes_confidence", confidence);
    for (size_t r = 0; r < train_eval.confusion.classes.size(); ++r)
        for (size_t c = 0; c < train_eval.confusion.classes.size(); ++c)
            meta.add("target.confusion." + train_eval.confusion.classes[r] + "." +
                         train_eval.confusion.classes[c],
                     train_eval.confusion.counts[r][c]);

    for (const auto& spec : cfg.attacks) {
        std::ostringstream train_rows, holdout_rows;
        const std::string header = "record_index,attribute,predicted_value,true_value,case\n";
        train_rows << header;
        holdout_rows << header;

        auto run_on = [&](const Dataset& ds, const detail::TargetEval&, std::ostringstream& rows,
                          const std::string& scope) {
            BlackBoxTarget facade(saved.model, confidence);
            for (size_t si = 0; si < sensitive.size(); ++si) {
                const Attribute& attr = schema.at(sensitive[si]);
                AdversaryKnowledge know = make_knowledge(schema, attr.name);
                AttackPrediction result;
                uint64_t dsa_size = 0, dsa_correct = 0;
                if (spec.kind == "naive") {
                    know.marginal_prior = marginal_prior(data.train, attr.name);
                    result = naive_attack(*know.marginal_prior, ds);
                    result.attribute = attr.name;
                } else if (spec.kind == "randga") {
                    auto domain = attr.resolved_domain();
                    std::vector<double> p;
                    if (domain.size() == 2) {
                        int pos = 0;
                        if (!cfg.positive_value.empty() && domain[1] == cfg.positive_value) pos = 1;
                        p.assign(2, 0.0);
                        p[pos] = spec.randga_p_positive;
                        p[1 - pos] = 1.0 - spec.randga_p_positive;
                    } else {
                        p.assign(domain.size(), 1.0 / static_cast<double>(domain.size()));
                    }
                    result = random_guess_attack(domain, p, ds,
                                                 detail::attack_seed(cfg.seed, spec.name, si));
                    result.attribute = attr.name;
                } else if (spec.kind == "fjrmia") {
                    know.marginal_prior = marginal_prior(data.train, attr.name);
                    know.model_confusion = train_eval.confusion;
                    result = run_fjrmia(facade, know, ds, cfg.jobs);
                } else if (spec.kind == "csmia") {
                    if (spec.unknown_attributes.empty())
                        result = run_csmia(facade, know, ds, cfg.jobs);
                    else
                        result = run_csmia_partial(facade, know, ds, spec.unknown_attributes, cfg.jobs);
                } else if (spec.kind == "lomia") {
                    AttackDatasetDSA dsa = lomia_harvest(facade, know, ds, cfg.jobs);
                    dsa_size = dsa.data.size();
                    int atk_target = dsa.data.schema().target_index();
                    auto truths = true_sensitive_values(ds, attr.name);
                    for (size_t r = 0; r < dsa.data.size(); ++r)
                        if (dsa.data.record(r).values[atk_target].cat ==
                            truths[dsa.source_rows[r]])
                            ++dsa_correct;
                    ForestConfig fc;
                    fc.trees = spec.forest_trees;
                    fc.seed = detail::attack_seed(cfg.seed, spec.name, si);
                    auto attack_model = lomia_train(dsa, fc);
                    result.attribute = attr.name;
                    result.predicted.assign(ds.size(), -1);
                    parallel_for(ds.size(), cfg.jobs, [&](size_t i) {
                        result.predicted[i] = lomia_infer(*attack_model, schema, ds.record(i),
                                                          spec.withheld_at_inference);
                    });
                    result.queries_used = dsa.queries_used;
                } else {
                    throw ValidationError("unknown attack kind '" + spec.kind + "'");
                }

                auto domain = attr.resolved_domain();
                auto truths = true_sensitive_values(ds, attr.name);
                for (size_t i = 0; i < ds.size(); ++i) {
                    rows << i << "," << detail::csv_escape(attr.name) << ","
                         << detail::csv_escape(domain[result.predicted[i]]) << ","
                         << detail::csv_escape(truths[i] < 0 ? "" : domain[truths[i]]) << ",";
                    if (result.cases) rows << case_name((*result.cases)[i]);
                    rows << "\n";
                }

                std::string prefix = "attack." + spec.name + "." + attr.name + "." + scope;
                meta.add(prefix + ".queries", result.queries_used);
                meta.add(prefix + ".expected_queries",
                         detail::expected_attack_queries(spec, schema, attr.name, ds.size()));
                if (spec.kind == "lomia") {
                    meta.add(prefix + ".dsa_size", dsa_size);
                    meta.add(prefix + ".dsa_correct", dsa_correct);
                }
            }
        };

        run_on(data.train, train_eval, train_rows, "train");
        write_file(detail::out_path(cfg, "predictions_" + spec.name + ".csv"), train_rows.str());
        if (cfg.distributional) {
            run_on(data.holdout, holdout_eval, holdout_rows, "holdout");
            write_file(detail::out_path(cfg, "predictions_" + spec.name + "_holdout.csv"),
                       holdout_rows.str());
        }
    }

    std::ostringstream meta_os;
    meta.write(meta_os);
    write_file(detail::out_path(cfg, "attack_meta.kv"), meta_os.str());
}

// ---------------------------------------------------------------------------
// Stage 3: metrics, analyses, report files
// ---------------------------------------------------------------------------

namespace detail {

struct LoadedRun {
    AttackRunView view;
    bool has_cases = false;
};

inline std::vector<char> read_target_correct(const std::string& path, const std::string& scope,
                                             size_t n) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path + " (run the attack stage first?)");
    std::vector<char> correct(n, 0);
    int lineno = 0;
    bool eof = false;
    auto header = parse_csv_row(in, eof, lineno);
    while (!eof) {
        auto row = parse_csv_row(in, eof, lineno);
        if (row.size() < 4) continue;
        if (row[0] != scope) continue;
        size_t idx = std::stoul(row[1]);
        if (idx < n) correct[idx] = row[2] == row[3];
    }
    return correct;
}

inline AttackRunView load_run(const ExperimentConfig& cfg, const AttackSpec& spec,
                              const Dataset& ds, const std::string& scope,
                              const std::string& attribute, const KvDoc&,
                              const std::map<std::string, std::string>& meta) {
    AttackRunView run;
    run.attack = spec.name;
    run.attribute = attribute;
    const Attribute& attr = ds.schema().at(ds.schema().require(attribute));
    run.domain = attr.resolved_domain();
    run.truth = true_sensitive_values(ds, attribute);
    run.predicted.assign(ds.size(), -1);

    std::string file = scope == "train" ? "predictions_" + spec.name + ".csv"
                                        : "predictions_" + spec.name + "_holdout.csv";
    std::ifstream in(out_path(cfg, file), std::ios::binary);
    if (!in) throw ValidationError("cannot open " + out_path(cfg, file));
    int lineno = 0;
    bool eof = false;
    auto header = parse_csv_row(in, eof, lineno);
    bool any_case = false;
    std::vector<CsmiaCase> cases(ds.size(), CsmiaCase::Case1);
    while (!eof) {
        auto row = parse_csv_row(in, eof, lineno);
        if (row.size() < 5 || row[1] != attribute) continue;
        size_t idx = std::stoul(row[0]);
        if (idx >= ds.size()) throw ValidationError(file + ": record index out of range");
        int pred = -1;
        for (size_t v = 0; v < run.domain.size(); ++v)
            if (run.domain[v] == row[2]) pred = static_cast<int>(v);
        if (pred < 0) throw ValidationError(file + ": prediction outside the sensitive domain");
        run.predicted[idx] = pred;
        if (!row[4].empty()) {
            any_case = true;
            cases[idx] = row[4] == "case1"   ? CsmiaCase::Case1
                         : row[4] == "case2" ? CsmiaCase::Case2
                                             : CsmiaCase::Case3;
        }
    }
    if (any_case) run.cases = std::move(cases);
    auto q = meta.find("attack." + spec.name + "." + attribute + "." + scope + ".queries");
    if (q != meta.end()) run.queries_used = std::stoull(q->second);
    run.target_correct =
        read_target_correct(out_path(cfg, "target_predictions.csv"), scope, ds.size());
    return run;
}

}  // namespace detail

inline void stage_report(const ExperimentConfig& cfg) {
    validate_config(cfg);
    LoadedData data = prepare_data(cfg);
    SavedTarget saved = load_target(detail::out_path(cfg, "target.model.json"));
    auto meta = detail::read_kv_file(detail::out_path(cfg, "attack_meta.kv"));

    const AttributeSchema& schema = data.train.schema();
    auto sensitive = schema.sensitive_indices();

    KvDoc doc;
    std::ostringstream text;
    doc.add("experiment.name", cfg.name);
    doc.add("experiment.seed", cfg.seed);
    doc.add("data.csv", cfg.csv_path);
    doc.add("data.records", data.full.size());
    doc.add("split.fraction", cfg.split_fraction);
    doc.add("split.train_records", data.train.size());
    doc.add("split.holdout_records", data.holdout.size());
    doc.add("target.kind", saved.model->kind());

    text << "experiment " << cfg.name << "\n";
    text << "dataset " << cfg.csv_path << ": " << data.full.size() << " records, train "
         << data.train.size() << " / holdout " << data.holdout.size() << "\n";
    text << "target model: " << saved.model->kind() << "\n\n";

    // target confusion matrix, replayed from the attack stage's meta
    {
        auto classes = schema.at(schema.target_index()).resolved_domain();
        AttackConfusionMatrix cm;
        std::vector<int> preds, truths;
        for (size_t r = 0; r < classes.size(); ++r) {
            for (size_t c = 0; c < classes.size(); ++c) {
                auto it = meta.find("target.confusion." + classes[r] + "." + classes[c]);
                int64_t count = it == meta.end() ? 0 : std::stoll(it->second);
                for (int64_t n = 0; n < count; ++n) {
                    truths.push_back(static_cast<int>(r));
                    preds.push_back(static_cast<int>(c));
                }
                doc.add("target.confusion." + classes[r] + "." + classes[c], count);
            }
        }
        if (!preds.empty()) {
            auto cm2 = attack_confusion(preds, truths, classes);
            doc.add("target.train_accuracy", cm2.accuracy);
            write_confusion_table(text, "target model confusion matrix (train)", cm2);
        }
        (void)cm;
    }

    for (int s : sensitive) {
        const Attribute& attr = schema.at(s);
        auto prior = marginal_prior(data.train, attr.name);
        for (size_t v = 0; v < prior.values.size(); ++v)
            doc.add("prior." + attr.name + "." + prior.values[v], prior.probabilities[v]);
    }

    std::vector<QueryReportRow> query_rows;

    for (const auto& spec : cfg.attacks) {
        for (int s : sensitive) {
            const Attribute& attr = schema.at(s);
            auto domain = attr.resolved_domain();
            int positive = 0;
            if (!cfg.positive_value.empty())
                for (size_t v = 0; v < domain.size(); ++v)
                    if (domain[v] == cfg.positive_value) positive = static_cast<int>(v);

            std::vector<std::pair<std::string, const Dataset*>> scopes{{"train", &data.train}};
            if (cfg.distributional) scopes.emplace_back("holdout", &data.holdout);

            text << "== attack " << spec.name << " on " << attr.name
                 << " (positive = " << domain[positive] << ") ==\n";
            TextTable table({"scope", "tp", "tn", "fp", "fn", "precision", "recall", "accuracy",
                             "f1", "g-mean", "mcc", "fpr"});

            for (const auto& [scope, ds] : scopes) {
                AttackRunView run = detail::load_run(cfg, spec, *ds, scope, attr.name, doc, meta);
                std::string prefix = "attack." + spec.name + "." + attr.name +
                                     (scope == "train" ? "" : ".holdout");

                doc.add(prefix + ".queries", run.queries_used);
                uint64_t expected =
                    detail::expected_attack_queries(spec, schema, attr.name, ds->size());
                query_rows.push_back({spec.name + "/" + attr.name + "/" + scope, run.queries_used,
                                      expected, true});

                if (run.cases) {
                    int64_t c1 = 0, c2 = 0, c3 = 0;
                    for (auto c : *run.cases) {
                        if (c == CsmiaCase::Case1) ++c1;
                        else if (c == CsmiaCase::Case2) ++c2;
                        else ++c3;
                    }
                    doc.add(prefix + ".case1", c1);
                    doc.add(prefix + ".case2", c2);
                    doc.add(prefix + ".case3", c3);
                }
                auto it_dsa = meta.find("attack." + spec.name + "." + attr.name + "." + scope +
                                        ".dsa_size");
                if (it_dsa != meta.end()) {
                    doc.add(prefix + ".dsa_size", it_dsa->second);
                    doc.add(prefix + ".dsa_correct",
                            meta.at("attack." + spec.name + "." + attr.name + "." + scope +
                                    ".dsa_correct"));
                }

                std::vector<int> preds, truths;
                scored_pairs(run, preds, truths);
                if (preds.empty()) continue;

                if (domain.size() == 2) {
                    auto counts = count_outcomes(preds, truths, positive, domain[positive]);
                    auto bundle = metric_bundle(counts);
                    add_outcomes(doc, prefix, counts);
                    add_bundle(doc, prefix + ".metric", bundle);
                    table.add_row(bundle_row(scope, counts, bundle));
                } else {
                    auto cm = attack_confusion(preds, truths, domain);
                    for (size_t r = 0; r < domain.size(); ++r)
                        for (size_t c = 0; c < domain.size(); ++c)
                            doc.add(prefix + ".confusion." + domain[r] + "." + domain[c],
                                    cm.counts[r][c]);
                    doc.add(prefix + ".confusion.accuracy", cm.accuracy);
                    doc.add(prefix + ".confusion.avg_precision", cm.avg_precision);
                    doc.add(prefix + ".confusion.avg_recall", cm.avg_recall);
                    write_confusion_table(text, "attack " + spec.name + " on " + attr.name + " (" +
                                                    scope + ")",
                                          cm);
                }

                if (scope == "train") {
                    if (cfg.per_class && domain.size() == 2) {
                        for (const auto& row : per_class_efficacy(run, *ds, positive)) {
                            std::string cp = prefix + ".class." + row.class_label;
                            add_outcomes(doc, cp, row.outcomes);
                            add_bundle(doc, cp + ".metric", row.bundle);
                        }
                    }
                    for (const auto& gattr : cfg.grouping_attributes) {
                        auto report = disparate_vulnerability(run, *ds, gattr, positive);
                        TextTable gt({"group", "size", "attack accuracy", "correct case1",
                                      "tm accuracy"});
                        for (const auto& row : report.rows) {
                            std::string gp = prefix + ".group." + gattr + "." + row.value;
                            doc.add(gp + ".size", row.size);
                            doc.add(gp + ".attack_accuracy", row.attack_accuracy);
                            doc.add(gp + ".correct_case1", row.correct_case1_fraction);
                            doc.add(gp + ".tm_accuracy", row.target_model_accuracy);
                            if (row.bundle) add_bundle(doc, gp + ".metric", *row.bundle);
                            gt.add_row({row.value, std::to_string(row.size),
                                        format_percent(row.attack_accuracy),
                                        format_percent(row.correct_case1_fraction),
                                        format_percent(row.target_model_accuracy)});
                        }
                        text << "attack " << spec.name << " on " << attr.name << " by " << gattr
                             << " (train)\n";
                        gt.write(text);
                        text << "\n";
                    }
                }
            }
            if (domain.size() == 2) {
                table.write(text);
                text << "\n";
            }
        }
    }

    QueryReport qr = query_report(query_rows);
    TextTable qt({"attack", "queries", "expected", "match"});
    for (const auto& row : qr.rows) {
        doc.add("queries." + row.attack, row.queries);
        doc.add("queries." + row.attack + ".expected", row.expected);
        doc.add("queries." + row.attack + ".match", row.matches);
        qt.add_row({row.attack, std::to_string(row.queries), std::to_string(row.expected),
                    row.matches ? "yes" : "MISMATCH"});
    }
    text << "query accounting\n";
    qt.write(text);

    write_file(detail::out_path(cfg, "report.kv"), doc.str());
    write_file(detail::out_path(cfg, "report.txt"), text.str());
}

// Monolithic run: the three stages composed through the filesystem, so a
// staged invocation is byte-identical by construction.
inline void run_experiment(const ExperimentConfig& cfg, bool label_only_override = false) {
    stage_train(cfg);
    stage_attack(cfg, label_only_override);
    stage_report(cfg);
}

}  // namespace miai
