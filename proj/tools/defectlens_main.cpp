#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "defectlens/dataset.hpp"
#include "defectlens/importance.hpp"
#include "defectlens/pipeline.hpp"
#include "defectlens/rng.hpp"
#include "defectlens/standardize.hpp"

namespace {

using namespace defectlens;
using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitTraining = 3;

struct RunOptions {
    std::string config_path;
};

struct EvaluateOptions {
    std::string data_path;
    std::string schema = "traditional";
    std::string model = "mlp";
    std::uint64_t seed = 42;
    double split = 0.2;
    double threshold = 0.5;
};

struct ExplainOptions {
    std::string data_path;
    std::string schema = "traditional";
    std::string method = "ig";
    std::string model_path;
    std::string out_dir = ".";
    std::size_t steps = 64;
    std::uint64_t seed = 7;
    std::size_t cap = 0;
    std::size_t top_k = 0;
    std::size_t budget = 2048;
    std::size_t background = 100;
    std::size_t exact_threshold = 10;
    bool exact = false;
    bool serial = false;
};

struct CompareOptions {
    std::string report_a;
    std::string report_b;
    std::size_t k = 5;
};

int cmd_run(const RunOptions& opt) {
    const auto config = ExperimentConfig::from_json_file(opt.config_path);
    const auto report = run_experiment(config);
    for (const auto& [name, result] : report.evaluations) {
        std::cout << name << ": accuracy " << result.accuracy_pct() << "% auc "
                  << result.auc_pct() << "%\n";
    }
    std::cout << "report written to " << config.output_dir << "/report.json\n";
    return kExitOk;
}

int cmd_evaluate(const EvaluateOptions& opt) {
    const auto schema = resolve_schema(opt.schema);
    const auto data = load_table(opt.data_path, schema);
    const auto [train, test] = stratified_split(data, opt.split, opt.seed);
    const auto standardizer = fit_standardizer(train.features);
    const auto train_X = standardizer.transform(train.features);
    const auto test_X = standardizer.transform(test.features);
    const auto weights = compute_class_weights(train.labels);

    std::vector<double> scores;
    if (opt.model == "logistic") {
        auto cfg = TrainConfig::logistic_defaults();
        cfg.seed = opt.seed;
        scores = fit_logistic(train_X, train.labels, weights, cfg).predict_proba(test_X);
    } else if (opt.model == "forest") {
        auto cfg = TrainConfig::forest_defaults();
        cfg.seed = opt.seed;
        scores = fit_random_forest(train_X, train.labels, weights, cfg).predict_proba(test_X);
    } else if (opt.model == "mlp") {
        auto cfg = TrainConfig::mlp_defaults();
        cfg.seed = opt.seed;
        scores = fit_mlp(train_X, train.labels, weights, cfg).predict_proba(test_X);
    } else {
        throw ConfigError("unknown model kind: " + opt.model);
    }

    const auto result = evaluate(scores, test.labels, opt.threshold);
    json j{{"model", opt.model},
           {"accuracy", result.accuracy},
           {"auc", result.auc},
           {"accuracy_pct", result.accuracy_pct()},
           {"auc_pct", result.auc_pct()},
           {"threshold", result.threshold},
           {"confusion",
            json{{"tp", result.confusion.tp},
                 {"fp", result.confusion.fp},
                 {"tn", result.confusion.tn},
                 {"fn", result.confusion.fn}}}};
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write output file: " + path.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

int cmd_explain(const ExplainOptions& opt) {
    const auto schema = resolve_schema(opt.schema);
    const auto data = load_table(opt.data_path, schema);
    const auto artifact = ModelArtifact::load(opt.model_path);
    if (artifact.feature_names != schema.feature_names) {
        throw SchemaMismatch("model artifact was trained on different features than '" +
                             opt.schema + "'");
    }

    Matrix rows = artifact.standardizer ? artifact.standardizer->transform(data.features)
                                        : data.features;
    if (opt.cap > 0 && opt.cap < rows.rows()) {
        Rng rng(derive_seed(opt.seed, 0xE0));
        auto idx = rng.sample_indices(rows.rows(), opt.cap);
        std::sort(idx.begin(), idx.end());
        rows = rows.select_rows(idx);
    }

    const ExecMode mode = opt.serial ? ExecMode::Serial : ExecMode::Parallel;
    std::vector<AttributionVector> attributions;
    if (opt.method == "ig") {
        IgConfig cfg;
        cfg.steps = opt.steps;
        attributions = integrated_gradients_batch(artifact.model, rows, cfg, mode);
    } else if (opt.method == "shap") {
        ShapConfig cfg;
        cfg.coalition_budget = opt.budget;
        cfg.seed = opt.seed;
        cfg.exact_threshold = opt.exact_threshold;
        if (opt.exact) {
            if (schema.width() > 14) {
                throw ConfigError("--exact requires at most 14 features");
            }
            cfg.exact_threshold = schema.width();
        }
        Rng rng(derive_seed(opt.seed, 0xB6));
        const std::size_t k = std::min<std::size_t>(opt.background, rows.rows());
        auto idx = rng.sample_indices(rows.rows(), k);
        std::sort(idx.begin(), idx.end());
        cfg.background = rows.select_rows(idx);
        attributions = kernel_shap_batch(artifact.model, rows, cfg, mode);
    } else {
        throw ConfigError("unknown method: " + opt.method + " (expected ig or shap)");
    }

    const auto report = global_importance(attributions, schema.feature_names);

    namespace fs = std::filesystem;
    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    write_file(dir / ("importance_" + opt.method + ".json"), report.to_json_text() + "\n");
    write_file(dir / ("importance_" + opt.method + ".csv"), report.to_csv_text());

    // Per-instance attributions with the completeness gap surfaced per row.
    {
        std::ostringstream csv;
        csv.precision(17);
        csv << "instance,completeness_gap";
        for (const auto& name : schema.feature_names) csv << ",phi_" << name;
        csv << '\n';
        for (std::size_t i = 0; i < attributions.size(); ++i) {
            csv << i << ',' << attributions[i].completeness_gap;
            for (double v : attributions[i].values) csv << ',' << v;
            csv << '\n';
        }
        write_file(dir / ("attributions_" + opt.method + ".csv"), csv.str());
    }

    if (opt.top_k > 0) {
        const std::size_t k = std::min<std::size_t>(opt.top_k, report.ranking.size());
        for (std::size_t i = 0; i < k; ++i) {
            const auto& name = report.ranking[i];
            double score = 0.0;
            for (std::size_t c = 0; c < report.feature_names.size(); ++c) {
                if (report.feature_names[c] == name) {
                    score = report.normalized_scores[c];
                    break;
                }
            }
            std::cout << (i + 1) << ". " << name << ' ' << score << '\n';
        }
    } else {
        std::cout << "importance written to " << opt.out_dir << "/importance_" << opt.method
                  << ".{json,csv}\n";
    }
    return kExitOk;
}

int cmd_compare(const CompareOptions& opt) {
    const auto a = ImportanceReport::load(opt.report_a);
    const auto b = ImportanceReport::load(opt.report_b);
    const auto cmp = compare_rankings_lenient(a, b, opt.k);
    std::cout << cmp.to_json_text() << '\n';
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"defectlens - train and explain defect prediction models"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Run the full pipeline from a JSON config");
    run->add_option("--config", run_opt.config_path, "Experiment config JSON")->required();

    EvaluateOptions eval_opt;
    auto* eval = app.add_subcommand("evaluate", "Train one model and print its test metrics");
    eval->add_option("--data", eval_opt.data_path, "Dataset CSV")->required();
    eval->add_option("--schema", eval_opt.schema, "traditional|jit|<schema.json>");
    eval->add_option("--model", eval_opt.model, "logistic|forest|mlp");
    eval->add_option("--seed", eval_opt.seed, "Split and training seed");
    eval->add_option("--split", eval_opt.split, "Test fraction");
    eval->add_option("--threshold", eval_opt.threshold, "Classification threshold");

    ExplainOptions explain_opt;
    auto* explain = app.add_subcommand("explain", "Attribute a persisted model over a dataset");
    explain->add_option("--data", explain_opt.data_path, "Dataset CSV")->required();
    explain->add_option("--schema", explain_opt.schema, "traditional|jit|<schema.json>");
    explain->add_option("--method", explain_opt.method, "ig|shap");
    explain->add_option("--model-file", explain_opt.model_path, "Model artifact JSON")->required();
    explain->add_option("--steps", explain_opt.steps, "IG steps");
    explain->add_option("--seed", explain_opt.seed, "Sampling seed");
    explain->add_option("--cap", explain_opt.cap, "Max explained instances (0 = all)");
    explain->add_option("--top-k", explain_opt.top_k, "Print the ranked head");
    explain->add_option("--budget", explain_opt.budget, "SHAP coalition budget");
    explain->add_option("--background", explain_opt.background, "SHAP background rows");
    explain->add_option("--exact-threshold", explain_opt.exact_threshold,
                        "Enumerate all coalitions at or below this feature count");
    explain->add_option("--out", explain_opt.out_dir, "Output directory");
    explain->add_flag("--exact", explain_opt.exact, "Force exact SHAP enumeration");
    explain->add_flag("--serial", explain_opt.serial, "Disable the parallel kernels");

    CompareOptions compare_opt;
    auto* compare = app.add_subcommand("compare", "Compare two importance rankings");
    compare->add_option("--a", compare_opt.report_a, "First importance JSON")->required();
    compare->add_option("--b", compare_opt.report_b, "Second importance JSON")->required();
    compare->add_option("--k", compare_opt.k, "Top-k cutoff");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (eval->parsed()) return cmd_evaluate(eval_opt);
        if (explain->parsed()) return cmd_explain(explain_opt);
        if (compare->parsed()) return cmd_compare(compare_opt);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const TrainError& e) {
        std::cerr << "training error: " << e.what() << '\n';
        return kExitTraining;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitConfig;
}
