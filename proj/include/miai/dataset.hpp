#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "miai/common.hpp"
#include "miai/schema.hpp"

namespace miai {

// Empirical distribution of one attribute's values over its resolved domain.
struct MarginalPrior {
    std::string attribute;
    std::vector<std::string> values;
    std::vector<double> probabilities;  // aligned with values, sums to 1

    double probability_of(const std::string& token) const {
        for (size_t i = 0; i < values.size(); ++i)
            if (values[i] == token) return probabilities[i];
        return 0.0;
    }
};

class Dataset {
public:
    Dataset() = default;
    Dataset(SchemaPtr schema, std::vector<Record> records, std::string name = "")
        : schema_(std::move(schema)), records_(std::move(records)), name_(std::move(name)) {
        for (const auto& r : records_)
            if (r.values.size() != schema_->size())
                throw ValidationError("record width does not match schema");
    }

    const AttributeSchema& schema() const { return *schema_; }
    SchemaPtr schema_ptr() const { return schema_; }
    const std::vector<Record>& records() const { return records_; }
    const Record& record(size_t i) const { return records_[i]; }
    size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }
    const std::string& name() const { return name_; }

    // Same rows under a different (e.g. bin-fitted) schema.
    Dataset with_schema(SchemaPtr schema) const { return Dataset(std::move(schema), records_, name_); }

private:
    SchemaPtr schema_;
    std::vector<Record> records_;
    std::string name_;
};

// ---------------------------------------------------------------------------
// CSV ingestion (RFC-4180 style: quoted fields, "" escapes, CR/LF tolerant)
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> parse_csv_row(std::istream& in, bool& eof, int& lineno) {
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++lineno;
                field.push_back(static_cast<char>(c));
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            ++lineno;
            fields.push_back(field);
            return fields;
        } else if (c == '\r') {
            // swallow; the following \n (if any) ends the row
        } else {
            field.push_back(static_cast<char>(c));
        }
    }
    eof = true;
    if (in_quotes) throw ParseError("unterminated quoted field at end of input");
    if (!any) return {};
    fields.push_back(field);
    return fields;
}

}  // namespace detail

// Loads a CSV whose header names match the schema's attribute names (any
// order). Empty cells become MISSING; continuous columns keep their numerics
// (binning happens later, against the training split).
inline Dataset load_csv(std::istream& in, const AttributeSchema& schema,
                        const std::string& origin = "<csv>") {
    int lineno = 0;
    bool eof = false;
    auto header = detail::parse_csv_row(in, eof, lineno);
    if (header.empty()) throw ParseError(origin + ": missing header row");

    std::vector<int> column_to_attr(header.size(), -1);
    std::vector<bool> seen(schema.size(), false);
    for (size_t c = 0; c < header.size(); ++c) {
        std::string name = trim(header[c]);
        int a = schema.index_of(name);
        if (a < 0) throw ParseError(origin + ": header column '" + name + "' not in schema");
        if (seen[a]) throw ParseError(origin + ": duplicate header column '" + name + "'");
        seen[a] = true;
        column_to_attr[c] = a;
    }
    for (size_t a = 0; a < schema.size(); ++a)
        if (!seen[a]) throw ParseError(origin + ": schema attribute '" + schema.at(a).name + "' missing from header");

    // Inferred categorical domains get collected in one pass, then sorted so
    // indices are deterministic. Tokens are kept as strings until resolution.
    std::vector<bool> infer(schema.size(), false);
    std::vector<std::map<std::string, int>> inferred(schema.size());
    for (size_t a = 0; a < schema.size(); ++a)
        infer[a] = schema.at(a).is_categorical() && schema.at(a).domain.empty();

    struct RawRow {
        std::vector<std::string> fields;
        int row_number;
    };
    std::vector<RawRow> raw;
    while (!eof) {
        int row_line = lineno + 1;
        auto fields = detail::parse_csv_row(in, eof, lineno);
        if (fields.empty()) break;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank trailing line
        if (fields.size() != header.size())
            throw ParseError(origin + ": row " + std::to_string(row_line) + " has " +
                             std::to_string(fields.size()) + " fields, expected " +
                             std::to_string(header.size()));
        for (size_t c = 0; c < fields.size(); ++c) {
            int a = column_to_attr[c];
            std::string tok = trim(fields[c]);
            if (!tok.empty() && infer[a]) inferred[a].emplace(tok, 0);
        }
        raw.push_back({std::move(fields), row_line});
    }

    auto resolved = std::make_shared<AttributeSchema>(schema);
    for (size_t a = 0; a < schema.size(); ++a) {
        if (!infer[a]) continue;
        auto& attr = resolved->mutable_attributes()[a];
        for (const auto& [tok, _] : inferred[a]) attr.domain.push_back(tok);  // std::map is sorted
    }

    std::vector<Record> records;
    records.reserve(raw.size());
    for (const auto& row : raw) {
        Record rec;
        rec.values.resize(schema.size());
        for (size_t c = 0; c < row.fields.size(); ++c) {
            int a = column_to_attr[c];
            const Attribute& attr = resolved->at(a);
            std::string tok = trim(row.fields[c]);
            if (tok.empty()) {
                rec.values[a] = Value::missing();
            } else if (attr.is_categorical()) {
                int idx = token_index(attr, tok);
                if (idx < 0)
                    throw ValidationError(origin + ": row " + std::to_string(row.row_number) +
                                          ": token '" + tok + "' not in domain of attribute '" +
                                          attr.name + "'");
                rec.values[a] = Value::categorical(idx);
            } else {
                try {
                    size_t pos = 0;
                    double v = std::stod(tok, &pos);
                    if (pos != tok.size()) throw std::invalid_argument(tok);
                    rec.values[a] = Value::number(v);
                } catch (...) {
                    throw ParseError(origin + ": row " + std::to_string(row.row_number) +
                                     ": '" + tok + "' is not numeric (attribute '" + attr.name + "')");
                }
            }
        }
        records.push_back(std::move(rec));
    }
    return Dataset(std::move(resolved), std::move(records), origin);
}

inline Dataset load_csv(const std::string& path, const AttributeSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open CSV file: " + path);
    return load_csv(in, schema, path);
}

// ---------------------------------------------------------------------------
// Train/holdout split
// ---------------------------------------------------------------------------

// |train| = fraction * N rounded with ties toward zero (20314 at 0.75 gives
// 15235/5079). Deterministic in the seed; the two halves partition the input.
inline std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction, uint64_t seed,
                                         bool stratified = false) {
    if (ds.empty()) throw ValidationError("cannot split an empty dataset");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ValidationError("split fraction must be in (0,1)");
    size_t n = ds.size();
    auto take_count = [&](size_t group_n) {
        double x = fraction * static_cast<double>(group_n);
        auto k = static_cast<size_t>(std::ceil(x - 0.5));
        return std::min(k, group_n);
    };
    if (take_count(n) < 1) throw ValidationError("split fraction leaves an empty training set");

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    std::vector<char> in_train(n, 0);
    Rng rng(seed);
    if (!stratified) {
        shuffle_indices(order, rng);
        size_t k = take_count(n);
        for (size_t i = 0; i < k; ++i) in_train[order[i]] = 1;
    } else {
        // group by the first sensitive attribute's value (missing = own group)
        int s = ds.schema().sensitive_indices().front();
        std::map<int, std::vector<size_t>> groups;
        for (size_t i = 0; i < n; ++i) {
            const Value& v = ds.record(i).values[s];
            groups[v.is_missing() ? -1 : v.cat].push_back(i);
        }
        for (auto& [_, idx] : groups) {
            shuffle_indices(idx, rng);
            size_t k = take_count(idx.size());
            for (size_t i = 0; i < k; ++i) in_train[idx[i]] = 1;
        }
    }

    std::vector<Record> train, test;
    for (size_t i = 0; i < n; ++i)
        (in_train[i] ? train : test).push_back(ds.record(i));
    return {Dataset(ds.schema_ptr(), std::move(train), ds.name() + "/train"),
            Dataset(ds.schema_ptr(), std::move(test), ds.name() + "/holdout")};
}

// ---------------------------------------------------------------------------
// Equal-frequency binning (fitted on the training split only)
// ---------------------------------------------------------------------------

// Returns a schema copy whose continuous attributes carry quantile bin edges
// and per-bin representative values computed from `train`.
inline SchemaPtr fit_bins(const AttributeSchema& schema, const Dataset& train) {
    auto fitted = std::make_shared<AttributeSchema>(schema);
    for (size_t a = 0; a < schema.size(); ++a) {
        Attribute& attr = fitted->mutable_attributes()[a];
        if (attr.is_categorical()) continue;
        std::vector<double> xs;
        for (const auto& r : train.records())
            if (!r.values[a].is_missing()) xs.push_back(r.values[a].num);
        if (xs.empty())
            throw ValidationError("cannot fit bins for attribute '" + attr.name + "': no values");
        std::sort(xs.begin(), xs.end());
        int k = attr.bins;
        attr.bin_edges.clear();
        for (int i = 1; i < k; ++i) {
            double pos = (static_cast<double>(xs.size()) - 1.0) * i / k;
            auto lo = static_cast<size_t>(std::floor(pos));
            double frac = pos - static_cast<double>(lo);
            double q = xs[lo];
            if (lo + 1 < xs.size()) q += frac * (xs[lo + 1] - xs[lo]);
            attr.bin_edges.push_back(q);
        }
        // representative = median of the training values landing in the bin
        std::vector<std::vector<double>> members(k);
        for (double v : xs) {
            int b = k - 1;
            for (int i = 0; i < k - 1; ++i)
                if (v <= attr.bin_edges[i]) { b = i; break; }
            members[b].push_back(v);
        }
        attr.bin_representatives.assign(k, 0.0);
        for (int b = 0; b < k; ++b) {
            if (!members[b].empty()) {
                attr.bin_representatives[b] = members[b][members[b].size() / 2];
            } else if (b == 0) {
                attr.bin_representatives[b] = xs.front();
            } else {
                attr.bin_representatives[b] = attr.bin_edges[std::min(b - 1, static_cast<int>(attr.bin_edges.size()) - 1)];
            }
        }
    }
    return fitted;
}

// Quantile bin index of a raw value; boundary values fall to the lower bin,
// so the mapping is monotone non-decreasing.
inline int bin_index(const Attribute& attr, double raw) {
    if (!attr.binning_fitted())
        throw ValidationError("binning not fitted for attribute '" + attr.name + "'");
    for (size_t i = 0; i < attr.bin_edges.size(); ++i)
        if (raw <= attr.bin_edges[i]) return static_cast<int>(i);
    return attr.bins - 1;
}

inline std::string bin_value(const AttributeSchema& schema, const std::string& attribute, double raw) {
    const Attribute& attr = schema.at(schema.require(attribute));
    return attr.resolved_domain()[bin_index(attr, raw)];
}

// Resolved-domain index of a record's value: categorical index as stored,
// continuous values mapped through the fitted bins. -1 for missing.
inline int resolved_value_index(const Attribute& attr, const Value& v) {
    if (v.is_missing()) return -1;
    if (attr.is_categorical()) return v.cat;
    return bin_index(attr, v.num);
}

// ---------------------------------------------------------------------------
// Marginal prior & subgroup filter
// ---------------------------------------------------------------------------

inline MarginalPrior marginal_prior(const Dataset& ds, const std::string& attribute) {
    const Attribute& attr = ds.schema().at(ds.schema().require(attribute));
    auto domain = attr.resolved_domain();
    if (domain.empty()) throw ValidationError("attribute '" + attribute + "' has no resolved domain");
    std::vector<int64_t> counts(domain.size(), 0);
    int64_t total = 0;
    for (const auto& r : ds.records()) {
        int idx = resolved_value_index(attr, r.values[ds.schema().require(attribute)]);
        if (idx < 0) continue;
        ++counts[idx];
        ++total;
    }
    if (total == 0)
        throw ValidationError("attribute '" + attribute + "' has no observed values");
    MarginalPrior p;
    p.attribute = attribute;
    p.values = domain;
    p.probabilities.resize(domain.size());
    for (size_t i = 0; i < domain.size(); ++i)
        p.probabilities[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
    return p;
}

// Records whose value for `attribute` equals `token`; order preserved.
// Passing token "(missing)" selects the rows where the attribute is missing.
inline Dataset subgroup(const Dataset& ds, const std::string& attribute, const std::string& token) {
    int a = ds.schema().require(attribute);
    const Attribute& attr = ds.schema().at(a);
    int want;
    if (token == "(missing)") {
        want = -1;
    } else {
        auto domain = attr.resolved_domain();
        want = -2;
        for (size_t i = 0; i < domain.size(); ++i)
            if (domain[i] == token) want = static_cast<int>(i);
        if (want == -2) return Dataset(ds.schema_ptr(), {}, ds.name());  // value outside domain: empty
    }
    std::vector<Record> out;
    for (const auto& r : ds.records())
        if (resolved_value_index(attr, r.values[a]) == want) out.push_back(r);
    return Dataset(ds.schema_ptr(), std::move(out), ds.name());
}

}  // namespace miai
