#include "defectlens/importance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace defectlens {

using nlohmann::json;

ImportanceReport global_importance(const std::vector<AttributionVector>& attributions,
                                   const std::vector<std::string>& feature_names) {
    if (attributions.empty()) throw EmptyInput("global_importance attributions");
    const std::size_t p = feature_names.size();
    for (const auto& a : attributions) {
        if (a.values.size() != p) throw WidthMismatch(p, a.values.size());
    }

    ImportanceReport report;
    report.feature_names = feature_names;
    report.method = to_string(attributions.front().method);
    report.raw_scores.assign(p, 0.0);
    for (const auto& a : attributions) {
        for (std::size_t i = 0; i < p; ++i) report.raw_scores[i] += std::abs(a.values[i]);
    }
    for (auto& s : report.raw_scores) s /= static_cast<double>(attributions.size());

    const double max_raw = *std::max_element(report.raw_scores.begin(), report.raw_scores.end());
    report.normalized_scores.assign(p, 0.0);
    if (max_raw > 0.0) {
        for (std::size_t i = 0; i < p; ++i) {
            report.normalized_scores[i] = report.raw_scores[i] / max_raw;
        }
    }

    std::vector<std::size_t> order(p);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return report.normalized_scores[a] > report.normalized_scores[b];
    });
    report.ranking.reserve(p);
    for (auto i : order) report.ranking.push_back(feature_names[i]);
    return report;
}

namespace {

std::unordered_map<std::string, std::size_t> rank_positions(const std::vector<std::string>& r) {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < r.size(); ++i) pos.emplace(r[i], i);
    return pos;
}

double kendall_tau_of(const std::vector<std::string>& rank_a,
                      const std::vector<std::string>& rank_b) {
    const auto pos_b = rank_positions(rank_b);
    const std::size_t p = rank_a.size();
    long long concordant = 0, discordant = 0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            // rank_a orders (i, j) as i-before-j; check b's view of the pair
            const auto bi = pos_b.at(rank_a[i]);
            const auto bj = pos_b.at(rank_a[j]);
            (bi < bj ? concordant : discordant)++;
        }
    }
    const auto pairs = static_cast<double>(p) * static_cast<double>(p - 1) / 2.0;
    return (static_cast<double>(concordant) - static_cast<double>(discordant)) / pairs;
}

} // namespace

RankingComparison compare_rankings(const ImportanceReport& a, const ImportanceReport& b,
                                   std::size_t k) {
    std::unordered_set<std::string> names_a(a.feature_names.begin(), a.feature_names.end());
    std::unordered_set<std::string> names_b(b.feature_names.begin(), b.feature_names.end());
    if (names_a != names_b) throw SchemaMismatch("reports cover different feature sets");
    if (k == 0 || k > a.feature_names.size()) {
        throw ConfigError("k must be in [1, feature count]");
    }

    RankingComparison cmp;
    cmp.k = k;
    std::unordered_set<std::string> top_b(b.ranking.begin(),
                                          b.ranking.begin() + static_cast<long>(k));
    for (std::size_t i = 0; i < k; ++i) {
        if (top_b.count(a.ranking[i])) {
            ++cmp.top_k_overlap;
            cmp.common_top_k.push_back(a.ranking[i]);
        }
    }
    cmp.kendall_tau = kendall_tau_of(a.ranking, b.ranking);
    return cmp;
}

RankingComparison compare_rankings_lenient(const ImportanceReport& a, const ImportanceReport& b,
                                           std::size_t k) {
    std::unordered_set<std::string> names_a(a.feature_names.begin(), a.feature_names.end());
    std::unordered_set<std::string> names_b(b.feature_names.begin(), b.feature_names.end());
    if (names_a == names_b) return compare_rankings(a, b, k);

    RankingComparison cmp;
    cmp.k = k;
    cmp.disjoint_schemas = true;
    const std::size_t ka = std::min(k, a.ranking.size());
    const std::size_t kb = std::min(k, b.ranking.size());
    std::unordered_set<std::string> top_b(b.ranking.begin(),
                                          b.ranking.begin() + static_cast<long>(kb));
    for (std::size_t i = 0; i < ka; ++i) {
        if (top_b.count(a.ranking[i])) {
            ++cmp.top_k_overlap;
            cmp.common_top_k.push_back(a.ranking[i]);
        }
    }
    return cmp;
}

std::string ImportanceReport::to_json_text() const {
    json j;
    j["feature_names"] = feature_names;
    j["raw_scores"] = raw_scores;
    j["normalized_scores"] = normalized_scores;
    j["ranking"] = ranking;
    j["method"] = method;
    return j.dump(2);
}

ImportanceReport ImportanceReport::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid importance JSON: ") + e.what());
    }
    // Accepts both standalone reports and full run reports holding one.
    try {
        ImportanceReport report;
        report.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        report.raw_scores = j.at("raw_scores").get<std::vector<double>>();
        report.normalized_scores = j.at("normalized_scores").get<std::vector<double>>();
        report.ranking = j.at("ranking").get<std::vector<std::string>>();
        report.method = j.value("method", std::string{});
        return report;
    } catch (const json::exception& e) {
        throw DataError(std::string("importance JSON missing field: ") + e.what());
    }
}

ImportanceReport ImportanceReport::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open importance report: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string ImportanceReport::to_csv_text() const {
    const auto pos = [this] {
        std::unordered_map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < feature_names.size(); ++i) index.emplace(feature_names[i], i);
        return index;
    }();
    std::ostringstream out;
    out << "feature,normalized_score\n";
    out.precision(17);
    for (const auto& name : ranking) {
        out << name << ',' << normalized_scores[pos.at(name)] << '\n';
    }
    return out.str();
}

std::string RankingComparison::to_json_text() const {
    json j;
    j["k"] = k;
    j["top_k_overlap"] = top_k_overlap;
    j["common_top_k"] = common_top_k;
    if (kendall_tau) {
        j["kendall_tau"] = *kendall_tau;
    } else {
        j["kendall_tau"] = nullptr;
    }
    j["disjoint_schemas"] = disjoint_schemas;
    return j.dump(2);
}

} // namespace defectlens
