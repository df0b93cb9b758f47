#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "defectlens/dataset.hpp"
#include "defectlens/rng.hpp"
#include "defectlens/schema.hpp"
#include "defectlens/standardize.hpp"

using namespace defectlens;

namespace {

std::string join_csv_row(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    out += '\n';
    return out;
}

// CSV with the given header; every feature cell is filled with row*31+col.
std::string synthetic_csv(const std::vector<std::string>& header,
                          const std::string& label_column,
                          const std::vector<int>& label_values) {
    std::string text = join_csv_row(header);
    for (std::size_t r = 0; r < label_values.size(); ++r) {
        std::vector<std::string> cells;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (header[c] == label_column) {
                cells.push_back(std::to_string(label_values[r]));
            } else {
                cells.push_back(std::to_string(static_cast<double>(r * 31 + c)));
            }
        }
        text += join_csv_row(cells);
    }
    return text;
}

} // namespace

TEST_CASE("builtin schemas match the published feature lists") {
    const auto trad = FeatureSchema::traditional();
    CHECK(trad.feature_names ==
          std::vector<std::string>{"wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm",
                                   "lcom3", "loc", "dam", "moa", "mfa", "cam", "ic", "cbm", "amc",
                                   "max_cc", "avg_cc"});
    CHECK(trad.label_column == "bug");
    CHECK(trad.width() == 20);

    const auto jit = FeatureSchema::jit();
    CHECK(jit.feature_names == std::vector<std::string>{"fix", "la", "ld", "nf", "nd", "ns",
                                                        "entropy", "ndev", "age", "nuc", "exp",
                                                        "rexp", "sexp"});
    CHECK(jit.label_column == "buggy");
    CHECK(jit.width() == 13);

    CHECK_NOTHROW(trad.validate());
    CHECK_NOTHROW(jit.validate());
}

TEST_CASE("schema JSON round-trip") {
    const auto jit = FeatureSchema::jit();
    const auto parsed = FeatureSchema::from_json_text(jit.to_json_text());
    CHECK(parsed == jit);

    CHECK_THROWS_AS(FeatureSchema::from_json_text("{\"domain_kind\": \"jit\"}"), SchemaMismatch);
    CHECK_THROWS_AS(FeatureSchema::from_json_text("not json"), SchemaMismatch);

    // duplicate feature names rejected
    FeatureSchema dup = jit;
    dup.feature_names.push_back("fix");
    CHECK_THROWS_AS(dup.validate(), SchemaMismatch);
}

TEST_CASE("binarize_label") {
    CHECK(binarize_label(0) == 0);
    CHECK(binarize_label(1) == 1);
    CHECK(binarize_label(7) == 1);
    CHECK_THROWS_AS(binarize_label(-1), NegativeCount);

    // idempotent on {0,1}
    CHECK(binarize_label(binarize_label(0)) == 0);
    CHECK(binarize_label(binarize_label(1)) == 1);
}

TEST_CASE("load_table drops identifier columns and keeps schema order") {
    auto header = FeatureSchema::jit().feature_names;
    header.insert(header.begin(), "commit_id");
    header.push_back("buggy");
    const auto csv = synthetic_csv(header, "buggy", {0, 1, 0, 1, 0});

    const auto data = load_table_text(csv, FeatureSchema::jit());
    CHECK(data.width() == 13);
    CHECK(data.size() == 5);
    CHECK(data.labels == std::vector<int>{0, 1, 0, 1, 0});
    // commit_id was column 0, so the first feature cell must be column 1's value
    CHECK(data.features(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("load_table reorders shuffled columns to schema order") {
    const FeatureSchema schema = FeatureSchema::jit();
    auto header = schema.feature_names;
    Rng rng(3);
    rng.shuffle(header);
    header.push_back("buggy");

    const auto csv = synthetic_csv(header, "buggy", {1, 0});
    const auto data = load_table_text(csv, schema);

    // column j of the output must equal the cell written under that name
    for (std::size_t j = 0; j < schema.width(); ++j) {
        std::size_t file_col = 0;
        while (header[file_col] != schema.feature_names[j]) ++file_col;
        CHECK(data.features(0, j) == doctest::Approx(static_cast<double>(file_col)));
    }
}

TEST_CASE("load_table error paths") {
    auto header = FeatureSchema::traditional().feature_names;
    header.push_back("bug");

    SUBCASE("missing predictor column") {
        auto bad = header;
        bad.erase(std::find(bad.begin(), bad.end(), "lcom3"));
        const auto csv = synthetic_csv(bad, "bug", {0, 1});
        CHECK_THROWS_AS(load_table_text(csv, FeatureSchema::traditional()), MissingColumn);
    }
    SUBCASE("non-numeric cell") {
        std::string csv = join_csv_row(header);
        std::vector<std::string> cells(header.size(), "1.0");
        cells[3] = "oops";
        csv += join_csv_row(cells);
        CHECK_THROWS_AS(load_table_text(csv, FeatureSchema::traditional()), NonNumericCell);
    }
    SUBCASE("empty table") {
        CHECK_THROWS_AS(load_table_text(join_csv_row(header), FeatureSchema::traditional()),
                        EmptyTable);
        CHECK_THROWS_AS(load_table_text("", FeatureSchema::traditional()), EmptyTable);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_table("/nonexistent/file.csv", FeatureSchema::traditional()),
                        DataError);
    }
}

TEST_CASE("load_table binarizes count labels") {
    auto header = FeatureSchema::traditional().feature_names;
    header.push_back("bug");
    const auto csv = synthetic_csv(header, "bug", {0, 2, 1, 0});
    const auto data = load_table_text(csv, FeatureSchema::traditional());
    CHECK(data.labels == std::vector<int>{0, 1, 1, 0});
}

TEST_CASE("load_table strips a UTF-8 BOM before the header") {
    auto header = FeatureSchema::jit().feature_names;
    header.push_back("buggy");
    const auto csv = "\xEF\xBB\xBF" + synthetic_csv(header, "buggy", {1, 0});
    const auto data = load_table_text(csv, FeatureSchema::jit());
    CHECK(data.size() == 2);
    CHECK(data.labels == std::vector<int>{1, 0});
}

TEST_CASE("load_table accepts boolean label text") {
    auto header = FeatureSchema::jit().feature_names;
    header.push_back("buggy");
    std::string csv = join_csv_row(header);
    std::vector<std::string> row(header.size(), "0.5");
    row.back() = "True";
    csv += join_csv_row(row);
    row.back() = "False";
    csv += join_csv_row(row);
    const auto data = load_table_text(csv, FeatureSchema::jit());
    CHECK(data.labels == std::vector<int>{1, 0});
}

TEST_CASE("load_table handles quoted fields") {
    const auto csv = std::string("a,b,label\n\"1.5\",\"2,5 is not here\",...\n");
    FeatureSchema schema;
    schema.feature_names = {"a"};
    schema.label_column = "label";
    // quoted numeric parses; the quoted comma stays inside column b (dropped)
    CHECK_THROWS_AS(load_table_text(csv, schema), NonNumericCell); // label "..." is not numeric

    const auto good = std::string("a,b,label\n\"1.5\",\"2,5 is not here\",3\n");
    const auto data = load_table_text(good, schema);
    CHECK(data.features(0, 0) == doctest::Approx(1.5));
    CHECK(data.labels == std::vector<int>{1});
}

TEST_CASE("stratified_split per-class rounding") {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 100; ++i) {
        rows.push_back({static_cast<double>(i)});
        labels.push_back(i < 90 ? 0 : 1);
    }
    DefectDataset data{Matrix::from_rows(rows), labels, FeatureSchema::synthetic(1), "test"};

    const auto [train, test] = stratified_split(data, 0.2, 7);
    CHECK(test.size() == 20);
    CHECK(test.count_positive() == 2);
    CHECK(test.count_negative() == 18);
    CHECK(train.size() == 80);
    CHECK(train.count_positive() == 8);

    SUBCASE("deterministic per seed") {
        const auto [train2, test2] = stratified_split(data, 0.2, 7);
        CHECK(train2.features == train.features);
        CHECK(test2.features == test.features);
        CHECK(train2.labels == train.labels);

        const auto [train3, test3] = stratified_split(data, 0.2, 8);
        CHECK(train3.features != train.features);
    }

    SUBCASE("partition is disjoint and exhaustive") {
        std::vector<double> seen;
        for (std::size_t r = 0; r < train.size(); ++r) seen.push_back(train.features(r, 0));
        for (std::size_t r = 0; r < test.size(); ++r) seen.push_back(test.features(r, 0));
        std::sort(seen.begin(), seen.end());
        for (int i = 0; i < 100; ++i) CHECK(seen[static_cast<std::size_t>(i)] == i);
    }
}

TEST_CASE("stratified_split degenerate cases") {
    DefectDataset tiny{Matrix::from_rows({{1.0}, {2.0}, {3.0}}), {0, 0, 1},
                       FeatureSchema::synthetic(1), "test"};
    CHECK_THROWS_AS(stratified_split(tiny, 0.5, 1), DegenerateSplit);

    DefectDataset single{Matrix::from_rows({{1.0}, {2.0}}), {0, 0}, FeatureSchema::synthetic(1),
                         "test"};
    CHECK_THROWS_AS(stratified_split(single, 0.5, 1), SingleClass);
}

TEST_CASE("stratified_split preserves prevalence") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed * 1000 + 5);
        const std::size_t n = 60 + rng.uniform_below(400);
        std::vector<std::vector<double>> rows;
        std::vector<int> labels;
        std::size_t n_pos = 0;
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back({rng.normal()});
            const int y = rng.bernoulli(0.25) ? 1 : 0;
            n_pos += static_cast<std::size_t>(y);
            labels.push_back(y);
        }
        if (n_pos < 8 || n - n_pos < 8) continue;
        DefectDataset data{Matrix::from_rows(rows), labels, FeatureSchema::synthetic(1), "test"};
        const auto [train, test] = stratified_split(data, 0.3, seed);

        const double overall = static_cast<double>(n_pos) / static_cast<double>(n);
        const double test_rate =
            static_cast<double>(test.count_positive()) / static_cast<double>(test.size());
        const double bound = 1.0 / static_cast<double>(std::min(n_pos, n - n_pos));
        CHECK(std::abs(test_rate - overall) <= bound);
    }
}

TEST_CASE("fit_standardizer population statistics") {
    const Matrix X = Matrix::from_rows({{1.0, 5.0}, {2.0, 5.0}, {3.0, 5.0}});
    const auto s = fit_standardizer(X);

    CHECK(s.means[0] == doctest::Approx(2.0));
    CHECK(s.scales[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-12));
    CHECK(s.scales[0] == doctest::Approx(0.81650).epsilon(1e-4));

    // zero-variance rule
    CHECK(s.means[1] == doctest::Approx(5.0));
    CHECK(s.scales[1] == 1.0);

    const auto Z = apply_standardizer(s, X);
    CHECK(Z(0, 0) == doctest::Approx(-1.2247).epsilon(1e-4));
    CHECK(Z(1, 0) == doctest::Approx(0.0));
    CHECK(Z(2, 0) == doctest::Approx(1.2247).epsilon(1e-4));
    CHECK(Z(0, 1) == 0.0);
    CHECK(Z(2, 1) == 0.0);

    // applying to the means row gives zeros
    const auto mean_row = apply_standardizer(s, Matrix::from_rows({{2.0, 5.0}}));
    CHECK(mean_row(0, 0) == 0.0);
    CHECK(mean_row(0, 1) == 0.0);

    CHECK_THROWS_AS(fit_standardizer(Matrix()), EmptyMatrix);
    CHECK_THROWS_AS(apply_standardizer(s, Matrix(2, 3)), WidthMismatch);
}

TEST_CASE("standardizer output has zero mean and unit variance") {
    Rng rng(12);
    Matrix X(200, 5);
    for (std::size_t r = 0; r < X.rows(); ++r) {
        for (std::size_t c = 0; c < X.cols(); ++c) {
            X(r, c) = rng.normal() * (1.0 + static_cast<double>(c)) + 3.0 * static_cast<double>(c);
        }
    }
    const auto s = fit_standardizer(X);
    const auto Z = s.transform(X);
    for (std::size_t c = 0; c < Z.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < Z.rows(); ++r) mean += Z(r, c);
        mean /= static_cast<double>(Z.rows());
        CHECK(std::abs(mean) <= 1e-9);
        double var = 0.0;
        for (std::size_t r = 0; r < Z.rows(); ++r) var += (Z(r, c) - mean) * (Z(r, c) - mean);
        var /= static_cast<double>(Z.rows());
        CHECK(std::abs(std::sqrt(var) - 1.0) <= 1e-9);
    }

    SUBCASE("round-trip within 1e-12 relative") {
        const auto back = s.inverse(Z);
        for (std::size_t r = 0; r < X.rows(); ++r) {
            for (std::size_t c = 0; c < X.cols(); ++c) {
                const double scale = std::max(1.0, std::abs(X(r, c)));
                CHECK(std::abs(back(r, c) - X(r, c)) <= 1e-12 * scale);
            }
        }
    }
    SUBCASE("idempotence: refitting standardized data is a no-op transform") {
        const auto s2 = fit_standardizer(Z);
        for (std::size_t c = 0; c < Z.cols(); ++c) {
            CHECK(std::abs(s2.means[c]) <= 1e-9);
            CHECK(std::abs(s2.scales[c] - 1.0) <= 1e-9);
        }
    }
}

TEST_CASE("compute_class_weights") {
    std::vector<int> labels(90, 0);
    labels.insert(labels.end(), 10, 1);
    const auto w = compute_class_weights(labels);
    CHECK(w.weight_negative == doctest::Approx(100.0 / 180.0).epsilon(1e-12));
    CHECK(w.weight_negative == doctest::Approx(0.5556).epsilon(1e-3));
    CHECK(w.weight_positive == doctest::Approx(5.0));

    std::vector<int> balanced(50, 0);
    balanced.insert(balanced.end(), 50, 1);
    const auto wb = compute_class_weights(balanced);
    CHECK(wb.weight_negative == doctest::Approx(1.0));
    CHECK(wb.weight_positive == doctest::Approx(1.0));

    CHECK_THROWS_AS(compute_class_weights(std::vector<int>(5, 1)), SingleClass);

    SUBCASE("identity N0*w0 + N1*w1 = N") {
        Rng rng(77);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 2 + rng.uniform_below(1000);
            std::vector<int> y(n);
            for (auto& v : y) v = rng.bernoulli(0.3) ? 1 : 0;
            const auto n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
            if (n_pos == 0 || n_pos == static_cast<double>(n)) continue;
            const auto cw = compute_class_weights(y);
            const double total =
                (static_cast<double>(n) - n_pos) * cw.weight_negative + n_pos * cw.weight_positive;
            CHECK(total == doctest::Approx(static_cast<double>(n)).epsilon(1e-9));
        }
    }
}

TEST_CASE("generate_synthetic_linear") {
    SUBCASE("symmetric weights give a balanced label rate") {
        const auto data = generate_synthetic_linear(5000, {4.0, 0.0}, 0.0, 0.0, 123);
        const double rate =
            static_cast<double>(data.count_positive()) / static_cast<double>(data.size());
        CHECK(std::abs(rate - 0.5) < 0.05);
        CHECK(data.width() == 2);
        CHECK(data.schema.feature_names == std::vector<std::string>{"x1", "x2"});
    }
    SUBCASE("strongly negative bias drives labels to zero") {
        const auto data = generate_synthetic_linear(2000, {0.0, 0.0, 0.0}, -10.0, 0.0, 9);
        CHECK(data.count_positive() <= 2);
    }
    SUBCASE("deterministic per seed") {
        const auto a = generate_synthetic_linear(100, {1.0, -1.0}, 0.5, 0.1, 42);
        const auto b = generate_synthetic_linear(100, {1.0, -1.0}, 0.5, 0.1, 42);
        CHECK(a.features == b.features);
        CHECK(a.labels == b.labels);
        const auto c = generate_synthetic_linear(100, {1.0, -1.0}, 0.5, 0.1, 43);
        CHECK(a.features != c.features);
    }
    SUBCASE("rejects degenerate arguments") {
        CHECK_THROWS_AS(generate_synthetic_linear(1, {1.0}, 0.0, 0.0, 1), DataError);
        CHECK_THROWS_AS(generate_synthetic_linear(10, {}, 0.0, 0.0, 1), DataError);
    }
}

TEST_CASE("dataset csv round-trip") {
    const auto data = generate_synthetic_linear(50, {2.0, -1.0, 0.5}, 0.1, 0.0, 5);
    const auto reloaded = load_table_text(to_csv(data), data.schema, "roundtrip");
    CHECK(reloaded.labels == data.labels);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (std::size_t c = 0; c < data.width(); ++c) {
            CHECK(reloaded.features(r, c) == doctest::Approx(data.features(r, c)).epsilon(1e-15));
        }
    }
}
