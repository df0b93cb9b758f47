#pragma once

#include <string>
#include <vector>

namespace defectlens {

enum class DomainKind { Traditional, Jit, Custom };

std::string to_string(DomainKind kind);
DomainKind domain_kind_from_string(const std::string& name);

// Column contract for one dataset family: ordered predictor names, the label
// column, and identifier columns that are always dropped on ingestion.
struct FeatureSchema {
    DomainKind domain_kind = DomainKind::Custom;
    std::vector<std::string> feature_names;
    std::vector<std::string> identifier_columns;
    std::string label_column;

    std::size_t width() const { return feature_names.size(); }

    // Static code metrics at class level; label column counts bugs per class.
    static FeatureSchema traditional();
    // Commit-level change metrics; label column flags bug-inducing commits.
    static FeatureSchema jit();
    // p generically named features, for synthetic data.
    static FeatureSchema synthetic(std::size_t p);

    static FeatureSchema from_json_file(const std::string& path);
    static FeatureSchema from_json_text(const std::string& text);
    std::string to_json_text() const;

    // Throws SchemaMismatch on duplicate names or a label clashing with a predictor.
    void validate() const;

    bool operator==(const FeatureSchema& other) const = default;
};

// Resolves "traditional" / "jit", otherwise treats the argument as a path to
// a JSON schema file.
FeatureSchema resolve_schema(const std::string& name_or_path);

} // namespace defectlens
