#pragma once

#include <optional>
#include <string>
#include <vector>

#include "defectlens/attribution.hpp"

namespace defectlens {

// Dataset-level importance: mean absolute attribution per feature, normalized
// by the maximum so the top feature scores 1.
struct ImportanceReport {
    std::vector<std::string> feature_names; // schema order
    std::vector<double> raw_scores;
    std::vector<double> normalized_scores;
    std::vector<std::string> ranking; // by normalized score desc, ties by schema order
    std::string method;

    std::string to_json_text() const;
    static ImportanceReport from_json_text(const std::string& text);
    static ImportanceReport load(const std::string& path);

    // Two columns (feature, normalized_score) ordered by rank.
    std::string to_csv_text() const;
};

struct RankingComparison {
    std::size_t top_k_overlap = 0;
    std::optional<double> kendall_tau; // absent when schemas share no ordering
    std::vector<std::string> common_top_k; // intersection, in a's order
    std::size_t k = 0;
    bool disjoint_schemas = false;

    std::string to_json_text() const;
};

ImportanceReport global_importance(const std::vector<AttributionVector>& attributions,
                                   const std::vector<std::string>& feature_names);

// Requires identical feature-name sets; use compare_rankings_lenient when the
// reports may come from different schemas.
RankingComparison compare_rankings(const ImportanceReport& a, const ImportanceReport& b,
                                   std::size_t k);

// Intersects the name sets first; emits the disjoint-schema marker and omits
// tau when the reports cover different features.
RankingComparison compare_rankings_lenient(const ImportanceReport& a, const ImportanceReport& b,
                                           std::size_t k);

} // namespace defectlens
