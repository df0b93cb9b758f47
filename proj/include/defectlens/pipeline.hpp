#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "defectlens/attribution.hpp"
#include "defectlens/dataset.hpp"
#include "defectlens/importance.hpp"
#include "defectlens/metrics.hpp"
#include "defectlens/model_io.hpp"
#include "defectlens/schema.hpp"
#include "defectlens/train_config.hpp"

namespace defectlens {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Full experiment description. The JSON config file mirrors these fields.
struct ExperimentConfig {
    std::string dataset_path;
    std::string schema_kind = "traditional"; // builtin name or schema JSON path

    double test_fraction = 0.2;
    std::uint64_t split_seed = 42;

    TrainConfig logistic = TrainConfig::logistic_defaults();
    TrainConfig forest = TrainConfig::forest_defaults();
    TrainConfig mlp = TrainConfig::mlp_defaults();

    std::size_t ig_steps = 64;
    IgTarget ig_target = IgTarget::Probability;

    std::size_t shap_background_size = 100;
    std::size_t shap_coalition_budget = 2048;
    std::size_t shap_exact_threshold = 10;
    std::uint64_t shap_seed = 7;

    std::string output_dir = "out";
    std::size_t explain_cap = 0; // 0 = every test instance
    std::size_t comparison_top_k = 5;
    ExecMode execution = ExecMode::Parallel;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::string& path);
    std::string to_json_text() const;

    void validate() const;
};

struct ExperimentReport {
    std::string version;
    FeatureSchema schema;
    ExperimentConfig config;
    std::map<std::string, EvalResult> evaluations; // logistic, forest, mlp
    ImportanceReport importance_ig;
    ImportanceReport importance_shap;
    RankingComparison ranking_comparison;
    std::map<std::string, double> timings_seconds;

    // Fitted artifacts, populated by the pipeline so callers can persist them.
    std::optional<LogisticModel> trained_logistic;
    std::optional<ForestModel> trained_forest;
    std::optional<MlpModel> trained_mlp;
    std::optional<Standardizer> standardizer;

    // Stable-keyed JSON; identical configs and data produce identical text
    // except for the timings block.
    std::string to_json_text() const;
};

// Ingest -> split -> standardize -> weights -> fit three models -> evaluate
// -> IG + SHAP on the MLP -> global importance -> ranking comparison.
// Writes report.json, importance_ig.csv, importance_shap.csv and the three
// model artifacts into config.output_dir (temp-then-rename, all at the end).
ExperimentReport run_experiment(const ExperimentConfig& config);

// Same pipeline without touching the filesystem for outputs.
ExperimentReport run_experiment_in_memory(const ExperimentConfig& config,
                                          const DefectDataset& data);

} // namespace defectlens
