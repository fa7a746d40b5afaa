#pragma once

// Shared test apparatus: in-memory dataset builders, scripted and memorizing
// stand-in models, and a deterministic census-style data generator used by
// the desk-scale suites.

#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "miai/attacks.hpp"
#include "miai/black_box.hpp"
#include "miai/dataset.hpp"
#include "miai/model.hpp"

namespace testsup {

using namespace miai;

inline Attribute cat_attr(const std::string& name, std::vector<std::string> domain,
                          Role role = Role::NonSensitive) {
    Attribute a;
    a.name = name;
    a.kind = AttrKind::Categorical;
    a.domain = std::move(domain);
    a.role = role;
    return a;
}

inline Attribute cont_attr(const std::string& name, int bins = 4, Role role = Role::NonSensitive) {
    Attribute a;
    a.name = name;
    a.kind = AttrKind::Continuous;
    a.bins = bins;
    a.role = role;
    return a;
}

inline SchemaPtr make_schema(std::vector<Attribute> attrs) {
    return std::make_shared<AttributeSchema>(std::move(attrs));
}

// Rows given as string tokens: categorical token, numeric literal, or "" for
// missing. Converted against the schema.
inline Dataset make_dataset(SchemaPtr schema, const std::vector<std::vector<std::string>>& rows,
                            const std::string& name = "test") {
    std::vector<Record> records;
    for (const auto& row : rows) {
        Record rec;
        rec.values.resize(schema->size());
        for (size_t a = 0; a < schema->size(); ++a) {
            const Attribute& attr = schema->at(a);
            const std::string& tok = row.at(a);
            if (tok.empty()) {
                rec.values[a] = Value::missing();
            } else if (attr.is_categorical()) {
                int idx = token_index(attr, tok);
                if (idx < 0) throw std::runtime_error("bad token in test row: " + tok);
                rec.values[a] = Value::categorical(idx);
            } else {
                rec.values[a] = Value::number(std::stod(tok));
            }
        }
        records.push_back(std::move(rec));
    }
    return Dataset(std::move(schema), std::move(records), name);
}

// Model whose behaviour is a test-supplied function of the query record.
class ScriptedModel : public Model {
public:
    using Fn = std::function<PredictionOutput(const Record&)>;
    ScriptedModel(SchemaPtr schema, Fn fn) : fn_(std::move(fn)) { init_schema(std::move(schema)); }
    std::string kind() const override { return "scripted"; }
    bool supports_missing_descent() const override { return true; }
    PredictionOutput predict(const Record& record) const override { return fn_(record); }

private:
    Fn fn_;
};

// Confidence vector with `conf` on `label` and the rest spread evenly.
inline PredictionOutput labeled(int label, double conf, size_t m) {
    std::vector<double> v(m, (1.0 - conf) / static_cast<double>(m - 1));
    v[label] = conf;
    return make_prediction(std::move(v));
}

// Exact-match lookup table over the non-target attributes: training records
// answer with their training label, anything else answers `fallback`.
class MemorizingModel : public Model {
public:
    MemorizingModel(const Dataset& train, int fallback_label) : fallback_(fallback_label) {
        init_schema(train.schema_ptr());
        for (const auto& r : train.records()) {
            const Value& y = r.values[target_];
            if (!y.is_missing()) table_[key(r)] = y.cat;
        }
    }

    std::string kind() const override { return "memorizing"; }
    bool supports_missing_descent() const override { return true; }

    PredictionOutput predict(const Record& record) const override {
        auto it = table_.find(key(record));
        int label = it == table_.end() ? fallback_ : it->second;
        std::vector<double> conf(classes_.size(), 0.0);
        conf[label] = 1.0;
        return make_prediction(std::move(conf));
    }

private:
    std::string key(const Record& r) const {
        std::ostringstream os;
        for (size_t a = 0; a < r.values.size(); ++a) {
            if (static_cast<int>(a) == target_) continue;
            const Value& v = r.values[a];
            if (v.is_missing()) os << "_;";
            else if (v.kind == Value::Kind::Categorical) os << "c" << v.cat << ";";
            else os << "n" << v.num << ";";
        }
        return os.str();
    }

    std::map<std::string, int> table_;
    int fallback_;
};

// Schema shaped like the census task: ten non-sensitive attributes, a binary
// sensitive one, a binary label.
inline SchemaPtr census_schema() {
    return make_schema({
        cont_attr("age", 4),
        cat_attr("workclass", {"Federal", "Local", "Private", "SelfEmp", "State"}),
        cont_attr("fnlwgt", 4),
        cat_attr("education",
                 {"Assoc", "Bachelors", "Doctorate", "HS-grad", "Masters", "SomeCollege"}),
        cat_attr("occupation", {"Admin", "Craft", "Exec", "Farming", "Machine", "Prof", "Sales",
                                "Service"}),
        cat_attr("race", {"AmerIndian", "Asian", "Black", "Other", "White"}),
        cat_attr("sex", {"Female", "Male"}),
        cont_attr("hours", 4),
        cont_attr("capital_gain", 4),
        cont_attr("capital_loss", 4),
        cat_attr("marital", {"Married", "Single"}, Role::Sensitive),
        cat_attr("income", {"<=50K", ">50K"}, Role::TargetLabel),
    });
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Deterministic census-style sample. Marital status is both predictable from
// the demographics and a strong driver of the label, which is the structure
// the querying attacks exploit.
inline Dataset census_sample(size_t n, uint64_t seed) {
    SchemaPtr schema = census_schema();
    Rng rng(seed);
    std::vector<Record> records;
    records.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        double z = rng.normal();  // latent prosperity
        int sex = rng.uniform() < 0.67 ? 1 : 0;
        double age = 17.0 + 50.0 * rng.uniform() + 13.0 * rng.uniform();
        int edu_raw = static_cast<int>(std::floor(2.5 + 1.2 * z + 1.8 * rng.normal()));
        int education = std::clamp(edu_raw, 0, 5);
        int occupation = std::clamp(static_cast<int>(std::floor(4.0 + 1.5 * z + 2.5 * rng.normal())), 0, 7);
        int workclass = rng.uniform() < 0.7 ? 2 : static_cast<int>(rng.below(5));
        int race = rng.uniform() < 0.8 ? 4 : static_cast<int>(rng.below(4));
        double hours = std::clamp(40.0 + 8.0 * z + 10.0 * rng.normal(), 10.0, 90.0);
        double capital_gain = rng.uniform() < 0.10 ? 2000.0 + 30000.0 * rng.uniform() : 0.0;
        double capital_loss = rng.uniform() < 0.05 ? 500.0 + 3000.0 * rng.uniform() : 0.0;
        double fnlwgt = 1e4 + 9e5 * rng.uniform();

        double p_married = sigmoid(0.08 * (age - 33.0) + 0.35 * z + 0.55 * sex - 0.45);
        int married = rng.uniform() < p_married ? 0 : 1;  // 0 = Married

        double logit = -2.9 + 1.9 * (married == 0) + 0.33 * (education - 2) +
                       0.035 * (hours - 40.0) + 0.030 * (age - 38.0) +
                       1.4 * (capital_gain > 0) + 0.35 * z + 0.15 * sex;
        int income = rng.uniform() < sigmoid(logit) ? 1 : 0;  // 1 = >50K

        Record r;
        r.values = {Value::number(age),
                    Value::categorical(workclass),
                    Value::number(fnlwgt),
                    Value::categorical(education),
                    Value::categorical(occupation),
                    Value::categorical(race),
                    Value::categorical(sex),
                    Value::number(hours),
                    Value::number(capital_gain),
                    Value::number(capital_loss),
                    Value::categorical(married),
                    Value::categorical(income)};
        records.push_back(std::move(r));
    }
    return Dataset(schema, std::move(records), "census_synth");
}

// Write a dataset back out as CSV (full-precision numerics, quoted tokens).
inline void write_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    auto escape = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += "\"\"";
            else q += c;
        }
        return q + "\"";
    };
    for (size_t a = 0; a < ds.schema().size(); ++a)
        out << (a ? "," : "") << escape(ds.schema().at(a).name);
    out << "\n";
    char buf[64];
    for (const auto& r : ds.records()) {
        for (size_t a = 0; a < ds.schema().size(); ++a) {
            if (a) out << ",";
            const Value& v = r.values[a];
            if (v.is_missing()) continue;
            if (v.kind == Value::Kind::Categorical) {
                out << escape(ds.schema().at(a).domain[v.cat]);
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", v.num);
                out << buf;
            }
        }
        out << "\n";
    }
}

inline double prediction_accuracy(const std::vector<int>& preds, const std::vector<int>& truths) {
    size_t hits = 0;
    for (size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truths[i];
    return preds.empty() ? 0.0 : static_cast<double>(hits) / preds.size();
}

inline double model_accuracy(const Model& model, const Dataset& ds) {
    int t = ds.schema().target_index();
    size_t hits = 0, total = 0;
    for (const auto& r : ds.records()) {
        if (r.values[t].is_missing()) continue;
        ++total;
        hits += model.predict(r).label == r.values[t].cat;
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / total;
}

}  // namespace testsup
