#include "defectlens/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "defectlens/rng.hpp"

namespace defectlens {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// RFC-4180 style: quoted fields may contain commas, newlines, and "" escapes.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(std::move(row));
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"': in_quotes = true; row_has_content = true; break;
            case ',': end_field(); row_has_content = true; break;
            case '\r': break;
            case '\n':
                if (row_has_content || !field.empty() || !row.empty()) end_row();
                break;
            default: field.push_back(c); row_has_content = true; break;
        }
    }
    if (row_has_content || !field.empty() || !row.empty()) end_row();
    return rows;
}

bool parse_double(const std::string& raw, double& out) {
    const std::string s = trim(raw);
    if (s.empty()) return false;
    const char* begin = s.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    return end == begin + s.size() && std::isfinite(out);
}

// Label cells: numeric counts, or boolean text as found in public JIT datasets.
int parse_label_cell(const std::string& raw, std::size_t row, const std::string& column) {
    const std::string s = lower(trim(raw));
    if (s == "true" || s == "t") return 1;
    if (s == "false" || s == "f") return 0;
    double value = 0.0;
    if (!parse_double(raw, value)) throw NonNumericCell(row, column, raw);
    return binarize_label(value);
}

} // namespace

std::size_t DefectDataset::count_positive() const {
    std::size_t n = 0;
    for (int y : labels) n += static_cast<std::size_t>(y == 1);
    return n;
}

void DefectDataset::validate() const {
    if (labels.empty() || features.rows() == 0) throw EmptyTable();
    if (features.rows() != labels.size()) throw LengthMismatch(features.rows(), labels.size());
    if (features.cols() != schema.width()) throw WidthMismatch(schema.width(), features.cols());
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("label outside {0,1}: " + std::to_string(y));
    }
}

int binarize_label(double raw_count) {
    if (raw_count < 0) throw NegativeCount(raw_count);
    return raw_count == 0.0 ? 0 : 1;
}

DefectDataset load_table_text(const std::string& csv_text, const FeatureSchema& schema,
                              const std::string& provenance) {
    schema.validate();
    std::string_view text(csv_text);
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3); // UTF-8 BOM
    const auto rows = parse_csv(std::string(text));
    if (rows.empty()) throw EmptyTable();

    const auto& header = rows.front();
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t c = 0; c < header.size(); ++c) col_of.emplace(trim(header[c]), c);

    std::vector<std::size_t> feature_cols;
    feature_cols.reserve(schema.width());
    for (const auto& name : schema.feature_names) {
        auto it = col_of.find(name);
        if (it == col_of.end()) throw MissingColumn(name);
        feature_cols.push_back(it->second);
    }
    auto label_it = col_of.find(schema.label_column);
    if (label_it == col_of.end()) throw MissingColumn(schema.label_column);
    const std::size_t label_col = label_it->second;

    if (rows.size() < 2) throw EmptyTable();
    const std::size_t n = rows.size() - 1;

    DefectDataset out;
    out.schema = schema;
    out.provenance = provenance;
    out.features = Matrix(n, schema.width());
    out.labels.resize(n);

    for (std::size_t r = 0; r < n; ++r) {
        const auto& cells = rows[r + 1];
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const std::size_t c = feature_cols[j];
            if (c >= cells.size()) throw NonNumericCell(r, schema.feature_names[j], "<missing>");
            double value = 0.0;
            if (!parse_double(cells[c], value)) {
                throw NonNumericCell(r, schema.feature_names[j], cells[c]);
            }
            out.features(r, j) = value;
        }
        if (label_col >= cells.size()) throw NonNumericCell(r, schema.label_column, "<missing>");
        out.labels[r] = parse_label_cell(cells[label_col], r, schema.label_column);
    }
    out.validate();
    return out;
}

DefectDataset load_table(const std::string& path, const FeatureSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_table_text(buf.str(), schema, path);
}

ClassWeights compute_class_weights(const std::vector<int>& labels) {
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y == 1);
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) throw SingleClass();
    const double n = static_cast<double>(labels.size());
    ClassWeights w;
    w.weight_negative = n / (2.0 * static_cast<double>(n_neg));
    w.weight_positive = n / (2.0 * static_cast<double>(n_pos));
    return w;
}

std::pair<DefectDataset, DefectDataset> stratified_split(const DefectDataset& data,
                                                         double test_fraction,
                                                         std::uint64_t seed) {
    data.validate();
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw DegenerateSplit("test_fraction must be in (0,1)");
    }

    std::vector<std::size_t> neg_idx, pos_idx;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (data.labels[i] == 1 ? pos_idx : neg_idx).push_back(i);
    }
    if (neg_idx.empty() || pos_idx.empty()) throw SingleClass();

    Rng rng(seed);
    std::vector<std::size_t> test_idx, train_idx;
    for (auto* cls : {&neg_idx, &pos_idx}) {
        auto& idx = *cls;
        rng.shuffle(idx);
        const auto n_c = static_cast<double>(idx.size());
        const auto k = static_cast<std::size_t>(std::llround(n_c * test_fraction));
        if (k == 0 || k >= idx.size()) {
            throw DegenerateSplit("a class would have zero instances on one side");
        }
        test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<long>(k));
        train_idx.insert(train_idx.end(), idx.begin() + static_cast<long>(k), idx.end());
    }
    std::sort(test_idx.begin(), test_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    auto take = [&](const std::vector<std::size_t>& idx, const char* tag) {
        DefectDataset part;
        part.features = data.features.select_rows(idx);
        part.labels.reserve(idx.size());
        for (auto i : idx) part.labels.push_back(data.labels[i]);
        part.schema = data.schema;
        part.provenance = data.provenance + "#" + tag;
        return part;
    };
    return {take(train_idx, "train"), take(test_idx, "test")};
}

DefectDataset generate_synthetic_linear(std::size_t n, const std::vector<double>& weights,
                                        double bias, double noise_scale, std::uint64_t seed) {
    if (n < 2) throw DataError("synthetic dataset needs n >= 2");
    if (weights.empty()) throw DataError("synthetic dataset needs at least one feature weight");
    if (noise_scale < 0) throw DataError("noise_scale must be nonnegative");

    const std::size_t p = weights.size();
    Rng rng(seed);

    DefectDataset out;
    out.schema = FeatureSchema::synthetic(p);
    out.provenance = "synthetic(seed=" + std::to_string(seed) + ")";
    out.features = Matrix(n, p);
    out.labels.resize(n);

    for (std::size_t r = 0; r < n; ++r) {
        double z = bias;
        for (std::size_t c = 0; c < p; ++c) {
            const double x = rng.normal();
            out.features(r, c) = x;
            z += weights[c] * x;
        }
        if (noise_scale > 0) z += noise_scale * rng.normal();
        const double prob = 1.0 / (1.0 + std::exp(-z));
        out.labels[r] = rng.bernoulli(prob) ? 1 : 0;
    }
    return out;
}

std::string to_csv(const DefectDataset& data) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t c = 0; c < data.schema.width(); ++c) {
        out << data.schema.feature_names[c] << ',';
    }
    out << data.schema.label_column << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.width(); ++c) out << data.features(r, c) << ',';
        out << data.labels[r] << '\n';
    }
    return out.str();
}

} // namespace defectlens
