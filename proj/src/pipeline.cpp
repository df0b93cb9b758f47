#include "defectlens/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "defectlens/dataset.hpp"
#include "defectlens/rng.hpp"
#include "defectlens/standardize.hpp"

namespace defectlens {

using nlohmann::json;

namespace {

json train_config_echo(const TrainConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"learning_rate", cfg.learning_rate},
                {"max_epochs", cfg.max_epochs},
                {"batch_size", cfg.batch_size},
                {"early_stop_patience", cfg.early_stop_patience},
                {"l2_penalty", cfg.l2_penalty},
                {"dropout_rate", cfg.dropout_rate},
                {"validation_fraction", cfg.validation_fraction}};
}

TrainConfig train_config_parse(const json& j, TrainConfig base) {
    base.seed = j.value("seed", base.seed);
    base.learning_rate = j.value("learning_rate", base.learning_rate);
    base.max_epochs = j.value("max_epochs", base.max_epochs);
    base.batch_size = j.value("batch_size", base.batch_size);
    base.early_stop_patience = j.value("early_stop_patience", base.early_stop_patience);
    base.l2_penalty = j.value("l2_penalty", base.l2_penalty);
    base.dropout_rate = j.value("dropout_rate", base.dropout_rate);
    base.validation_fraction = j.value("validation_fraction", base.validation_fraction);
    return base;
}

json eval_to_json(const EvalResult& e) {
    return json{{"accuracy", e.accuracy},
                {"auc", e.auc},
                {"accuracy_pct", e.accuracy_pct()},
                {"auc_pct", e.auc_pct()},
                {"threshold", e.threshold},
                {"confusion",
                 json{{"tp", e.confusion.tp},
                      {"fp", e.confusion.fp},
                      {"tn", e.confusion.tn},
                      {"fn", e.confusion.fn}}}};
}

json importance_to_json(const ImportanceReport& r) {
    return json{{"feature_names", r.feature_names},
                {"raw_scores", r.raw_scores},
                {"normalized_scores", r.normalized_scores},
                {"ranking", r.ranking},
                {"method", r.method}};
}

void write_atomically(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write output file: " + path.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

struct StageTimer {
    std::map<std::string, double>& sink;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void lap(const std::string& stage) {
        const auto now = std::chrono::steady_clock::now();
        sink[stage] = std::chrono::duration<double>(now - start).count();
        start = now;
    }
};

} // namespace

void ExperimentConfig::validate() const {
    if (dataset_path.empty()) throw ConfigError("dataset path is empty");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("test_fraction must be in (0,1)");
    }
    if (ig_steps < 1) throw ConfigError("ig_steps must be >= 1");
    if (shap_background_size < 1) throw ConfigError("shap_background_size must be >= 1");
    if (shap_coalition_budget < 2) throw ConfigError("shap_coalition_budget must be >= 2");
    if (shap_exact_threshold > 14) throw ConfigError("shap_exact_threshold must be <= 14");
    if (comparison_top_k < 1) throw ConfigError("comparison_top_k must be >= 1");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
    logistic.validate();
    forest.validate();
    mlp.validate();
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
    // Sections may be omitted or explicitly null; both mean "use defaults".
    const auto section = [&j](const char* name) -> const json* {
        if (!j.contains(name) || j[name].is_null()) return nullptr;
        if (!j[name].is_object()) {
            throw ConfigError(std::string("config field '") + name + "' must be an object");
        }
        return &j[name];
    };

    ExperimentConfig cfg;
    try {
        const auto* dataset = section("dataset");
        if (!dataset) throw ConfigError("config missing 'dataset' section");
        cfg.dataset_path = dataset->at("path").get<std::string>();
        cfg.schema_kind = dataset->value("schema", cfg.schema_kind);
        if (const auto* split = section("split")) {
            cfg.test_fraction = split->value("test_fraction", cfg.test_fraction);
            cfg.split_seed = split->value("seed", cfg.split_seed);
        }
        if (const auto* models = section("models")) {
            const auto model_section = [&](const char* name) -> const json* {
                if (!models->contains(name) || (*models)[name].is_null()) return nullptr;
                return &(*models)[name];
            };
            if (const auto* m = model_section("logistic")) {
                cfg.logistic = train_config_parse(*m, cfg.logistic);
            }
            if (const auto* m = model_section("forest")) {
                cfg.forest = train_config_parse(*m, cfg.forest);
            }
            if (const auto* m = model_section("mlp")) cfg.mlp = train_config_parse(*m, cfg.mlp);
        }
        if (const auto* ig = section("ig")) {
            cfg.ig_steps = ig->value("steps", cfg.ig_steps);
            const auto target = ig->value("target", std::string("probability"));
            if (target == "probability") {
                cfg.ig_target = IgTarget::Probability;
            } else if (target == "logit") {
                cfg.ig_target = IgTarget::Logit;
            } else {
                throw ConfigError("ig.target must be 'probability' or 'logit'");
            }
        }
        if (const auto* shap = section("shap")) {
            cfg.shap_background_size = shap->value("background_size", cfg.shap_background_size);
            cfg.shap_coalition_budget = shap->value("coalition_budget", cfg.shap_coalition_budget);
            cfg.shap_exact_threshold = shap->value("exact_threshold", cfg.shap_exact_threshold);
            cfg.shap_seed = shap->value("seed", cfg.shap_seed);
        }
        cfg.output_dir = j.value("output_dir", cfg.output_dir);
        cfg.explain_cap = j.value("explain_cap", cfg.explain_cap);
        cfg.comparison_top_k = j.value("comparison_top_k", cfg.comparison_top_k);
        const auto execution = j.value("execution", std::string("parallel"));
        if (execution == "serial") {
            cfg.execution = ExecMode::Serial;
        } else if (execution == "parallel") {
            cfg.execution = ExecMode::Parallel;
        } else {
            throw ConfigError("execution must be 'serial' or 'parallel'");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config missing field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string ExperimentConfig::to_json_text() const {
    json j;
    j["dataset"] = json{{"path", dataset_path}, {"schema", schema_kind}};
    j["split"] = json{{"test_fraction", test_fraction}, {"seed", split_seed}};
    j["models"] = json{{"logistic", train_config_echo(logistic)},
                       {"forest", train_config_echo(forest)},
                       {"mlp", train_config_echo(mlp)}};
    j["ig"] = json{{"steps", ig_steps},
                   {"target", ig_target == IgTarget::Logit ? "logit" : "probability"}};
    j["shap"] = json{{"background_size", shap_background_size},
                     {"coalition_budget", shap_coalition_budget},
                     {"exact_threshold", shap_exact_threshold},
                     {"seed", shap_seed}};
    j["output_dir"] = output_dir;
    j["explain_cap"] = explain_cap;
    j["comparison_top_k"] = comparison_top_k;
    j["execution"] = execution == ExecMode::Serial ? "serial" : "parallel";
    return j.dump(2);
}

std::string ExperimentReport::to_json_text() const {
    json j;
    j["version"] = version;
    j["schema"] = json{{"domain_kind", to_string(schema.domain_kind)},
                       {"feature_names", schema.feature_names},
                       {"label_column", schema.label_column}};
    j["config"] = json::parse(config.to_json_text());
    json evals;
    for (const auto& [name, result] : evaluations) evals[name] = eval_to_json(result);
    j["evaluations"] = evals;
    j["importance"] =
        json{{"ig", importance_to_json(importance_ig)}, {"shap", importance_to_json(importance_shap)}};
    j["ranking_comparison"] = json::parse(ranking_comparison.to_json_text());
    json timings;
    for (const auto& [stage, seconds] : timings_seconds) timings[stage] = seconds;
    j["timings"] = timings;
    return j.dump(2);
}

ExperimentReport run_experiment_in_memory(const ExperimentConfig& config,
                                          const DefectDataset& data) {
    config.validate();

    ExperimentReport report;
    report.version = kToolkitVersion;
    report.config = config;
    report.schema = data.schema;
    StageTimer timer{report.timings_seconds};

    const auto [train, test] = stratified_split(data, config.test_fraction, config.split_seed);
    timer.lap("split");

    const auto standardizer = fit_standardizer(train.features);
    const Matrix train_X = standardizer.transform(train.features);
    const Matrix test_X = standardizer.transform(test.features);
    timer.lap("standardize");

    const auto weights = compute_class_weights(train.labels);

    const LogisticModel logistic = fit_logistic(train_X, train.labels, weights, config.logistic);
    timer.lap("fit_logistic");
    const ForestModel forest = fit_random_forest(train_X, train.labels, weights, config.forest,
                                                 ForestParams{}, config.execution);
    timer.lap("fit_forest");
    const MlpModel mlp = fit_mlp(train_X, train.labels, weights, config.mlp);
    timer.lap("fit_mlp");

    report.evaluations["logistic"] = evaluate(logistic.predict_proba(test_X), test.labels);
    report.evaluations["forest"] =
        evaluate(forest.predict_proba(test_X, config.execution), test.labels);
    report.evaluations["mlp"] = evaluate(mlp.predict_proba(test_X), test.labels);
    timer.lap("evaluate");

    // Explained set: capped, seeded subsample of the test partition.
    Matrix explained = test_X;
    if (config.explain_cap > 0 && config.explain_cap < test_X.rows()) {
        Rng rng(derive_seed(config.split_seed, 0xE0));
        auto idx = rng.sample_indices(test_X.rows(), config.explain_cap);
        std::sort(idx.begin(), idx.end());
        explained = test_X.select_rows(idx);
    }

    const Model mlp_model = mlp;

    IgConfig ig_cfg;
    ig_cfg.steps = config.ig_steps;
    ig_cfg.target = config.ig_target;
    const auto ig_attrs = integrated_gradients_batch(mlp_model, explained, ig_cfg,
                                                     config.execution);
    report.importance_ig = global_importance(ig_attrs, data.schema.feature_names);
    timer.lap("ig");

    ShapConfig shap_cfg;
    shap_cfg.coalition_budget = config.shap_coalition_budget;
    shap_cfg.exact_threshold = config.shap_exact_threshold;
    shap_cfg.seed = config.shap_seed;
    {
        Rng rng(derive_seed(config.shap_seed, 0xB6));
        const std::size_t k = std::min<std::size_t>(config.shap_background_size, train_X.rows());
        auto idx = rng.sample_indices(train_X.rows(), k);
        std::sort(idx.begin(), idx.end());
        shap_cfg.background = train_X.select_rows(idx);
    }
    const auto shap_attrs = kernel_shap_batch(mlp_model, explained, shap_cfg, config.execution);
    report.importance_shap = global_importance(shap_attrs, data.schema.feature_names);
    timer.lap("shap");

    report.ranking_comparison =
        compare_rankings(report.importance_ig, report.importance_shap,
                         std::min(config.comparison_top_k, data.schema.width()));

    report.trained_logistic = logistic;
    report.trained_forest = forest;
    report.trained_mlp = mlp;
    report.standardizer = standardizer;
    timer.lap("compare");
    return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();

    std::map<std::string, double> load_timing;
    StageTimer load_timer{load_timing};
    const FeatureSchema schema = resolve_schema(config.schema_kind);
    const DefectDataset data = load_table(config.dataset_path, schema);
    load_timer.lap("load");

    ExperimentReport report = run_experiment_in_memory(config, data);
    report.timings_seconds["load"] = load_timing["load"];

    namespace fs = std::filesystem;
    const fs::path out_dir(config.output_dir);
    fs::create_directories(out_dir);

    auto artifact = [&](Model model, const TrainConfig& cfg) {
        ModelArtifact a;
        a.model = std::move(model);
        a.feature_names = data.schema.feature_names;
        a.train_config = cfg;
        a.standardizer = report.standardizer;
        return a;
    };
    write_atomically(out_dir / "model_logistic.json",
                     artifact(*report.trained_logistic, config.logistic).to_json_text() + "\n");
    write_atomically(out_dir / "model_forest.json",
                     artifact(*report.trained_forest, config.forest).to_json_text() + "\n");
    write_atomically(out_dir / "model_mlp.json",
                     artifact(*report.trained_mlp, config.mlp).to_json_text() + "\n");
    write_atomically(out_dir / "importance_ig.csv", report.importance_ig.to_csv_text());
    write_atomically(out_dir / "importance_shap.csv", report.importance_shap.to_csv_text());
    write_atomically(out_dir / "importance_ig.json", report.importance_ig.to_json_text() + "\n");
    write_atomically(out_dir / "importance_shap.json",
                     report.importance_shap.to_json_text() + "\n");
    write_atomically(out_dir / "report.json", report.to_json_text() + "\n");
    return report;
}

} // namespace defectlens
