#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "defectlens/dataset.hpp"
#include "defectlens/pipeline.hpp"

using namespace defectlens;
using nlohmann::json;

namespace {

std::filesystem::path temp_dir(const std::string& tag) {
    const auto dir = std::filesystem::temp_directory_path() / ("defectlens_test_" + tag);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ExperimentConfig small_config(const std::filesystem::path& dir) {
    ExperimentConfig cfg;
    cfg.dataset_path = (dir / "data.csv").string();
    cfg.schema_kind = (dir / "schema.json").string();
    cfg.test_fraction = 0.25;
    cfg.split_seed = 11;
    cfg.logistic.max_epochs = 300;
    cfg.forest.seed = 5;
    cfg.mlp.max_epochs = 10;
    cfg.ig_steps = 32;
    cfg.shap_background_size = 20;
    cfg.shap_coalition_budget = 128;
    cfg.shap_exact_threshold = 6;
    cfg.explain_cap = 12;
    cfg.comparison_top_k = 3;
    cfg.output_dir = (dir / "out").string();
    return cfg;
}

void write_inputs(const std::filesystem::path& dir) {
    const auto data = generate_synthetic_linear(400, {2.0, -1.0, 0.5, 0.0, 1.0, -0.5}, 0.2,
                                                0.1, 2024);
    std::ofstream(dir / "data.csv") << to_csv(data);
    std::ofstream(dir / "schema.json") << data.schema.to_json_text();
}

} // namespace

TEST_CASE("experiment config JSON round-trip") {
    const auto dir = temp_dir("config");
    write_inputs(dir);
    const auto cfg = small_config(dir);
    const auto parsed = ExperimentConfig::from_json_text(cfg.to_json_text());
    CHECK(parsed.to_json_text() == cfg.to_json_text());
    CHECK(parsed.dataset_path == cfg.dataset_path);
    CHECK(parsed.mlp.max_epochs == 10);
    CHECK(parsed.shap_coalition_budget == 128);

    CHECK_THROWS_AS(ExperimentConfig::from_json_text("{}"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json_text("nope"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json_file("/missing/config.json"), ConfigError);
}

TEST_CASE("run_experiment produces a complete and deterministic report") {
    const auto dir = temp_dir("run");
    write_inputs(dir);
    const auto cfg = small_config(dir);

    const auto report = run_experiment(cfg);

    CHECK(report.version == kToolkitVersion);
    CHECK(report.evaluations.size() == 3);
    CHECK(report.evaluations.count("logistic") == 1);
    CHECK(report.evaluations.count("forest") == 1);
    CHECK(report.evaluations.count("mlp") == 1);
    // per-class rounding fixes the test-partition size
    const auto data = load_table(cfg.dataset_path, resolve_schema(cfg.schema_kind));
    const auto n_pos = data.count_positive();
    const auto expected_test =
        static_cast<std::size_t>(std::llround(static_cast<double>(n_pos) * 0.25)) +
        static_cast<std::size_t>(std::llround(static_cast<double>(data.size() - n_pos) * 0.25));
    for (const auto& [name, result] : report.evaluations) {
        CHECK(result.auc >= 0.0);
        CHECK(result.auc <= 1.0);
        CHECK(result.confusion.total() == expected_test);
    }
    CHECK(report.importance_ig.feature_names == report.schema.feature_names);
    CHECK(report.importance_shap.feature_names == report.schema.feature_names);
    const double ig_max = *std::max_element(report.importance_ig.normalized_scores.begin(),
                                            report.importance_ig.normalized_scores.end());
    CHECK(ig_max == doctest::Approx(1.0));
    CHECK(report.ranking_comparison.kendall_tau.has_value());
    CHECK(std::abs(*report.ranking_comparison.kendall_tau) <= 1.0);

    namespace fs = std::filesystem;
    for (const char* name : {"report.json", "importance_ig.csv", "importance_shap.csv",
                             "importance_ig.json", "importance_shap.json",
                             "model_logistic.json", "model_forest.json", "model_mlp.json"}) {
        CHECK(fs::exists(fs::path(cfg.output_dir) / name));
    }

    SUBCASE("byte-identical reruns modulo timings") {
        auto cfg2 = cfg;
        cfg2.output_dir = (dir / "out2").string();
        const auto report2 = run_experiment(cfg2);

        auto j1 = json::parse(report.to_json_text());
        auto j2 = json::parse(report2.to_json_text());
        j1.erase("timings");
        j2.erase("timings");
        // output_dir differs between the two configs by construction
        j1["config"].erase("output_dir");
        j2["config"].erase("output_dir");
        CHECK(j1.dump() == j2.dump());
    }

    SUBCASE("serial execution reproduces the parallel report") {
        auto cfg_serial = cfg;
        cfg_serial.execution = ExecMode::Serial;
        cfg_serial.output_dir = (dir / "out_serial").string();
        const auto serial_report = run_experiment(cfg_serial);
        for (const auto& [name, result] : report.evaluations) {
            CHECK(serial_report.evaluations.at(name).accuracy == result.accuracy);
            CHECK(serial_report.evaluations.at(name).auc == result.auc);
        }
        CHECK(serial_report.importance_ig.raw_scores == report.importance_ig.raw_scores);
        CHECK(serial_report.importance_shap.raw_scores == report.importance_shap.raw_scores);
    }
}

TEST_CASE("run_experiment leaves no partial outputs on failure") {
    const auto dir = temp_dir("fail");
    auto cfg = small_config(dir);
    cfg.dataset_path = (dir / "missing.csv").string();
    std::ofstream(dir / "schema.json") << FeatureSchema::synthetic(3).to_json_text();

    CHECK_THROWS_AS(run_experiment(cfg), DataError);
    CHECK_FALSE(std::filesystem::exists(std::filesystem::path(cfg.output_dir) / "report.json"));
}

TEST_CASE("persisted artifacts reload and reproduce pipeline predictions") {
    const auto dir = temp_dir("artifacts");
    write_inputs(dir);
    const auto cfg = small_config(dir);
    const auto report = run_experiment(cfg);

    const auto artifact =
        ModelArtifact::load((std::filesystem::path(cfg.output_dir) / "model_mlp.json").string());
    REQUIRE(artifact.standardizer.has_value());
    REQUIRE(report.trained_mlp.has_value());

    const auto data = load_table(cfg.dataset_path, resolve_schema(cfg.schema_kind));
    const auto X = artifact.standardizer->transform(data.features);
    const auto from_disk = predict_proba(artifact.model, X);
    const auto in_memory = report.trained_mlp->predict_proba(X);
    for (std::size_t i = 0; i < from_disk.size(); ++i) {
        CHECK(std::abs(from_disk[i] - in_memory[i]) <= 1e-12);
    }
}
