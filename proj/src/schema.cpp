#include "defectlens/schema.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "defectlens/errors.hpp"

namespace defectlens {

std::string to_string(DomainKind kind) {
    switch (kind) {
        case DomainKind::Traditional: return "traditional";
        case DomainKind::Jit: return "jit";
        case DomainKind::Custom: return "custom";
    }
    return "custom";
}

DomainKind domain_kind_from_string(const std::string& name) {
    if (name == "traditional") return DomainKind::Traditional;
    if (name == "jit") return DomainKind::Jit;
    return DomainKind::Custom;
}

FeatureSchema FeatureSchema::traditional() {
    FeatureSchema s;
    s.domain_kind = DomainKind::Traditional;
    s.feature_names = {"wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca",
                       "ce",  "npm", "lcom3", "loc", "dam", "moa", "mfa",
                       "cam", "ic",  "cbm", "amc", "max_cc", "avg_cc"};
    s.identifier_columns = {"name", "version", "name.1"};
    s.label_column = "bug";
    return s;
}

FeatureSchema FeatureSchema::jit() {
    FeatureSchema s;
    s.domain_kind = DomainKind::Jit;
    s.feature_names = {"fix", "la",  "ld",  "nf",  "nd",   "ns",  "entropy",
                       "ndev", "age", "nuc", "exp", "rexp", "sexp"};
    s.identifier_columns = {"commit_id", "project", "author_date", "fix_date", "year"};
    s.label_column = "buggy";
    return s;
}

FeatureSchema FeatureSchema::synthetic(std::size_t p) {
    FeatureSchema s;
    s.domain_kind = DomainKind::Custom;
    s.feature_names.reserve(p);
    for (std::size_t i = 0; i < p; ++i) s.feature_names.push_back("x" + std::to_string(i + 1));
    s.label_column = "label";
    return s;
}

void FeatureSchema::validate() const {
    if (feature_names.empty()) throw SchemaMismatch("schema has no feature names");
    if (label_column.empty()) throw SchemaMismatch("schema has no label column");
    std::unordered_set<std::string> seen;
    for (const auto& name : feature_names) {
        if (name.empty()) throw SchemaMismatch("empty feature name");
        if (!seen.insert(name).second) throw SchemaMismatch("duplicate feature name: " + name);
    }
    if (seen.count(label_column)) {
        throw SchemaMismatch("label column '" + label_column + "' is also a feature");
    }
}

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("invalid schema JSON: ") + e.what());
    }
    FeatureSchema s;
    try {
        s.domain_kind = domain_kind_from_string(j.at("domain_kind").get<std::string>());
        s.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        s.label_column = j.at("label_column").get<std::string>();
        if (j.contains("identifier_columns")) {
            s.identifier_columns = j.at("identifier_columns").get<std::vector<std::string>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaMismatch(std::string("schema JSON missing field: ") + e.what());
    }
    s.validate();
    return s;
}

FeatureSchema FeatureSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open schema file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string FeatureSchema::to_json_text() const {
    nlohmann::json j;
    j["domain_kind"] = to_string(domain_kind);
    j["feature_names"] = feature_names;
    j["label_column"] = label_column;
    j["identifier_columns"] = identifier_columns;
    return j.dump(2);
}

FeatureSchema resolve_schema(const std::string& name_or_path) {
    if (name_or_path == "traditional") return FeatureSchema::traditional();
    if (name_or_path == "jit") return FeatureSchema::jit();
    return FeatureSchema::from_json_file(name_or_path);
}

} // namespace defectlens
