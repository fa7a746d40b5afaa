#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "miai/common.hpp"

namespace miai {

enum class Role { Sensitive, NonSensitive, TargetLabel };
enum class AttrKind { Categorical, Continuous };

inline std::string role_name(Role r) {
    switch (r) {
        case Role::Sensitive: return "sensitive";
        case Role::NonSensitive: return "nonsensitive";
        case Role::TargetLabel: return "target_label";
    }
    return "?";
}

// One cell of a record: a categorical domain index, a number, or missing.
struct Value {
    enum class Kind : uint8_t { Categorical, Numeric, Missing };
    Kind kind = Kind::Missing;
    int32_t cat = -1;
    double num = 0.0;

    static Value categorical(int32_t index) { return Value{Kind::Categorical, index, 0.0}; }
    static Value number(double v) { return Value{Kind::Numeric, -1, v}; }
    static Value missing() { return Value{}; }

    bool is_missing() const { return kind == Kind::Missing; }

    friend bool operator==(const Value& a, const Value& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == Kind::Categorical) return a.cat == b.cat;
        if (a.kind == Kind::Numeric) return a.num == b.num;
        return true;
    }
};

struct Record {
    std::vector<Value> values;
};

constexpr int kDefaultBins = 4;

struct Attribute {
    std::string name;
    AttrKind kind = AttrKind::Categorical;
    Role role = Role::NonSensitive;

    // Categorical: declared or inferred token list (inferred domains are
    // sorted lexicographically so value indices are deterministic).
    std::vector<std::string> domain;

    // Continuous: requested bin count plus the fitted equal-frequency edges.
    // Edges are fitted on the training split only; empty means not fitted.
    int bins = kDefaultBins;
    std::vector<double> bin_edges;           // bins-1 upper boundaries
    std::vector<double> bin_representatives; // per-bin query value (median)

    bool is_categorical() const { return kind == AttrKind::Categorical; }
    bool binning_fitted() const { return kind == AttrKind::Continuous && !bin_edges.empty(); }

    // Domain a value index refers to: tokens for categoricals, bin tokens for
    // fitted continuous attributes.
    std::vector<std::string> resolved_domain() const {
        if (is_categorical()) return domain;
        std::vector<std::string> out;
        for (int i = 0; i < bins; ++i) out.push_back("bin" + std::to_string(i + 1));
        return out;
    }
};

class AttributeSchema {
public:
    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<Attribute> attrs) : attributes_(std::move(attrs)) {
        validate_structure();
    }

    const std::vector<Attribute>& attributes() const { return attributes_; }
    size_t size() const { return attributes_.size(); }
    const Attribute& at(size_t i) const { return attributes_[i]; }

    int index_of(const std::string& name) const {
        for (size_t i = 0; i < attributes_.size(); ++i)
            if (attributes_[i].name == name) return static_cast<int>(i);
        return -1;
    }

    int require(const std::string& name) const {
        int i = index_of(name);
        if (i < 0) throw ValidationError("unknown attribute: " + name);
        return i;
    }

    int target_index() const {
        for (size_t i = 0; i < attributes_.size(); ++i)
            if (attributes_[i].role == Role::TargetLabel) return static_cast<int>(i);
        return -1;
    }

    std::vector<int> sensitive_indices() const {
        std::vector<int> out;
        for (size_t i = 0; i < attributes_.size(); ++i)
            if (attributes_[i].role == Role::Sensitive) out.push_back(static_cast<int>(i));
        return out;
    }

    std::vector<std::string> target_classes() const {
        int t = target_index();
        if (t < 0) throw ValidationError("schema has no target_label attribute");
        return attributes_[t].resolved_domain();
    }

    // Structural invariants that hold before domains are resolved. Derived
    // schemas (e.g. a surrogate model's, where the sensitive attribute has
    // become the label) may legitimately have no sensitive attribute left.
    void validate_structure() const {
        int targets = 0;
        for (size_t i = 0; i < attributes_.size(); ++i) {
            const auto& a = attributes_[i];
            if (a.name.empty()) throw ValidationError("attribute with empty name");
            for (size_t j = i + 1; j < attributes_.size(); ++j)
                if (attributes_[j].name == a.name)
                    throw ValidationError("duplicate attribute name: " + a.name);
            if (a.role == Role::TargetLabel) ++targets;
            if (a.kind == AttrKind::Continuous && a.bins < 2)
                throw ValidationError("attribute " + a.name + ": bin count must be >= 2");
        }
        if (targets != 1) throw ValidationError("schema must declare exactly one target_label attribute");
    }

    // Full invariants on an experiment schema, once every domain is known
    // (after CSV load / bin fit).
    void validate_resolved() const {
        validate_structure();
        if (sensitive_indices().empty())
            throw ValidationError("schema must declare at least one sensitive attribute");
        for (const auto& a : attributes_) {
            if (a.is_categorical() && a.domain.empty())
                throw ValidationError("attribute " + a.name + ": empty categorical domain");
            if (a.role == Role::Sensitive && a.resolved_domain().size() < 2)
                throw ValidationError("sensitive attribute " + a.name + " needs a domain of size >= 2");
            if (a.role == Role::TargetLabel && !a.is_categorical())
                throw ValidationError("target_label attribute must be categorical");
        }
    }

    // mutation is confined to loading / fitting helpers; the shared_ptr handed
    // to datasets and models is const
    std::vector<Attribute>& mutable_attributes() { return attributes_; }

private:
    std::vector<Attribute> attributes_;
};

using SchemaPtr = std::shared_ptr<const AttributeSchema>;

inline int token_index(const Attribute& attr, const std::string& token) {
    const auto dom = attr.is_categorical() ? attr.domain : attr.resolved_domain();
    for (size_t i = 0; i < dom.size(); ++i)
        if (dom[i] == token) return static_cast<int>(i);
    return -1;
}

// ---------------------------------------------------------------------------
// Schema file: INI-style blocks, one [attribute] section per column.
//
//   [attribute]
//   name = marital
//   kind = categorical
//   domain = Married, Single        # omit or "*" to infer from data
//   role = sensitive
//
//   [attribute]
//   name = age
//   kind = continuous
//   bins = 4
//   role = nonsensitive
// ---------------------------------------------------------------------------

inline AttributeSchema parse_schema(std::istream& in, const std::string& origin = "<schema>") {
    std::vector<Attribute> attrs;
    Attribute* current = nullptr;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string s = trim(line);
        if (s.empty()) continue;
        if (s == "[attribute]") {
            attrs.emplace_back();
            current = &attrs.back();
            continue;
        }
        auto eq = s.find('=');
        if (eq == std::string::npos)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (!current)
            throw ParseError(origin + ":" + std::to_string(lineno) + ": key outside [attribute] block");
        std::string key = trim(s.substr(0, eq));
        std::string value = trim(s.substr(eq + 1));
        if (key == "name") {
            current->name = value;
        } else if (key == "kind") {
            if (value == "categorical") current->kind = AttrKind::Categorical;
            else if (value == "continuous") current->kind = AttrKind::Continuous;
            else throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown kind '" + value + "'");
        } else if (key == "role") {
            if (value == "sensitive") current->role = Role::Sensitive;
            else if (value == "nonsensitive") current->role = Role::NonSensitive;
            else if (value == "target_label") current->role = Role::TargetLabel;
            else throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown role '" + value + "'");
        } else if (key == "domain") {
            if (value != "*") current->domain = split_list(value, ',');
        } else if (key == "bins") {
            try {
                current->bins = std::stoi(value);
            } catch (...) {
                throw ParseError(origin + ":" + std::to_string(lineno) + ": bins must be an integer");
            }
        } else {
            throw ParseError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return AttributeSchema(std::move(attrs));
}

inline AttributeSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open schema file: " + path);
    return parse_schema(in, path);
}

inline void write_schema(const AttributeSchema& schema, std::ostream& out) {
    for (const auto& a : schema.attributes()) {
        out << "[attribute]\n";
        out << "name = " << a.name << "\n";
        out << "kind = " << (a.is_categorical() ? "categorical" : "continuous") << "\n";
        if (a.is_categorical()) {
            out << "domain = ";
            for (size_t i = 0; i < a.domain.size(); ++i)
                out << (i ? ", " : "") << a.domain[i];
            out << "\n";
        } else {
            out << "bins = " << a.bins << "\n";
        }
        out << "role = " << role_name(a.role) << "\n\n";
    }
}

}  // namespace miai
