// Integration tests that drive the installed binary end to end. The binary
// path arrives via the DEFECTLENS_BIN environment variable.

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <sys/wait.h>

#include "defectlens/dataset.hpp"
#include "defectlens/importance.hpp"
#include "defectlens/model_io.hpp"
#include "defectlens/standardize.hpp"

using namespace defectlens;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* bin = std::getenv("DEFECTLENS_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "DEFECTLENS_BIN must point at the CLI binary");
    return bin;
}

struct CliResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult run_cli(const std::string& args, const fs::path& dir) {
    const auto out_path = dir / "stdout.txt";
    const auto err_path = dir / "stderr.txt";
    const std::string command =
        cli_path() + " " + args + " > " + out_path.string() + " 2> " + err_path.string();
    const int status = std::system(command.c_str());
    int code = -1;
    if (WIFEXITED(status)) code = WEXITSTATUS(status);
    return {code, slurp(out_path), slurp(err_path)};
}

fs::path temp_dir(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("defectlens_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Dataset + schema + config files for a small synthetic experiment.
struct Workspace {
    fs::path dir;
    fs::path data_csv;
    fs::path schema_json;
    fs::path config_json;
    fs::path out_dir;
    DefectDataset data;

    explicit Workspace(const std::string& tag, std::size_t p = 6)
        : dir(temp_dir(tag)),
          data_csv(dir / "data.csv"),
          schema_json(dir / "schema.json"),
          config_json(dir / "config.json"),
          out_dir(dir / "out") {
        std::vector<double> weights(p, 0.0);
        weights[0] = 2.0;
        weights[1] = -1.5;
        weights[2] = 1.0;
        data = generate_synthetic_linear(360, weights, 0.1, 0.1, 77);
        std::ofstream(data_csv) << to_csv(data);
        std::ofstream(schema_json) << data.schema.to_json_text();

        json cfg;
        cfg["dataset"] = {{"path", data_csv.string()}, {"schema", schema_json.string()}};
        cfg["split"] = {{"test_fraction", 0.25}, {"seed", 3}};
        cfg["models"] = {{"logistic", {{"max_epochs", 300}}},
                         {"forest", {{"seed", 5}}},
                         {"mlp", {{"max_epochs", 8}, {"seed", 9}}}};
        cfg["ig"] = {{"steps", 32}};
        cfg["shap"] = {{"background_size", 16},
                       {"coalition_budget", 96},
                       {"exact_threshold", 6},
                       {"seed", 21}};
        cfg["output_dir"] = out_dir.string();
        cfg["explain_cap"] = 10;
        cfg["comparison_top_k"] = 3;
        std::ofstream(config_json) << cfg.dump(2);
    }
};

} // namespace

TEST_CASE("cli run writes a full report deterministically") {
    Workspace ws("run");
    const auto first = run_cli("run --config " + ws.config_json.string(), ws.dir);
    CHECK(first.exit_code == 0);
    CHECK(fs::exists(ws.out_dir / "report.json"));
    CHECK(fs::exists(ws.out_dir / "importance_ig.csv"));
    CHECK(fs::exists(ws.out_dir / "importance_shap.csv"));
    CHECK(fs::exists(ws.out_dir / "model_mlp.json"));

    const auto report_1 = slurp(ws.out_dir / "report.json");
    const auto second = run_cli("run --config " + ws.config_json.string(), ws.dir);
    CHECK(second.exit_code == 0);
    const auto report_2 = slurp(ws.out_dir / "report.json");

    auto j1 = json::parse(report_1);
    auto j2 = json::parse(report_2);
    j1.erase("timings");
    j2.erase("timings");
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("cli run on a missing dataset exits 2 without partial outputs") {
    Workspace ws("missing");
    fs::remove(ws.data_csv);
    const auto result = run_cli("run --config " + ws.config_json.string(), ws.dir);
    CHECK(result.exit_code == 2);
    CHECK_FALSE(fs::exists(ws.out_dir / "report.json"));
    CHECK(result.err.find("data error") != std::string::npos);
}

TEST_CASE("cli run with broken config exits 1") {
    Workspace ws("badcfg");
    std::ofstream(ws.config_json) << "{\"dataset\": {}}";
    const auto result = run_cli("run --config " + ws.config_json.string(), ws.dir);
    CHECK(result.exit_code == 1);
}

TEST_CASE("cli evaluate prints stable JSON") {
    Workspace ws("eval");
    const std::string args = "evaluate --data " + ws.data_csv.string() + " --schema " +
                             ws.schema_json.string() + " --model mlp --seed 1 --split 0.25";
    const auto first = run_cli(args, ws.dir);
    CHECK(first.exit_code == 0);
    const auto second = run_cli(args, ws.dir);
    CHECK(first.out == second.out);

    const auto parsed = json::parse(first.out);
    CHECK(parsed.at("model") == "mlp");
    CHECK(parsed.at("accuracy").get<double>() >= 0.0);
    CHECK(parsed.at("accuracy_pct").get<int>() ==
          static_cast<int>(std::lround(100.0 * parsed.at("accuracy").get<double>())));

    // separable labels: the forest must print near-perfect accuracy
    auto separable = ws.data;
    for (std::size_t i = 0; i < separable.size(); ++i) {
        separable.labels[i] = separable.features(i, 0) > 0 ? 1 : 0;
    }
    const auto separable_csv = ws.dir / "separable.csv";
    std::ofstream(separable_csv) << to_csv(separable);
    const auto forest = run_cli("evaluate --data " + separable_csv.string() + " --schema " +
                                    ws.schema_json.string() + " --model forest --split 0.25",
                                ws.dir);
    CHECK(forest.exit_code == 0);
    CHECK(json::parse(forest.out).at("accuracy").get<double>() >= 0.95);
    CHECK(json::parse(forest.out).at("auc").get<double>() > 0.9);

    const auto unknown = run_cli("evaluate --data " + ws.data_csv.string() + " --schema " +
                                     ws.schema_json.string() + " --model tree",
                                 ws.dir);
    CHECK(unknown.exit_code == 1);
}

TEST_CASE("cli explain") {
    Workspace ws("explain");
    REQUIRE(run_cli("run --config " + ws.config_json.string(), ws.dir).exit_code == 0);
    const std::string mlp_artifact = (ws.out_dir / "model_mlp.json").string();
    const std::string forest_artifact = (ws.out_dir / "model_forest.json").string();
    const std::string base = "explain --data " + ws.data_csv.string() + " --schema " +
                             ws.schema_json.string();

    SUBCASE("ig emits per-instance completeness gaps within tolerance") {
        const auto dir = ws.dir / "ig_out";
        const auto result = run_cli(base + " --method ig --steps 512 --model-file " +
                                        mlp_artifact + " --cap 20 --out " + dir.string(),
                                    ws.dir);
        CHECK(result.exit_code == 0);
        CHECK(fs::exists(dir / "importance_ig.csv"));
        CHECK(fs::exists(dir / "importance_ig.json"));

        std::ifstream rows(dir / "attributions_ig.csv");
        std::string line;
        std::getline(rows, line);
        CHECK(line.find("completeness_gap") != std::string::npos);
        int count = 0;
        while (std::getline(rows, line)) {
            const auto first_comma = line.find(',');
            const auto second_comma = line.find(',', first_comma + 1);
            const double gap = std::stod(line.substr(first_comma + 1, second_comma));
            CHECK(gap <= 1e-3);
            ++count;
        }
        CHECK(count == 20);
    }

    SUBCASE("sampled shap matches forced-exact shap") {
        const auto sampled_dir = ws.dir / "shap_sampled";
        const auto exact_dir = ws.dir / "shap_exact";
        // exact-threshold 2 forces the sampling path for the 6-feature schema
        CHECK(run_cli(base + " --method shap --model-file " + mlp_artifact +
                          " --cap 8 --background 12 --budget 2048 --exact-threshold 2" +
                          " --seed 4 --out " + sampled_dir.string(),
                      ws.dir)
                  .exit_code == 0);
        CHECK(run_cli(base + " --method shap --model-file " + mlp_artifact +
                          " --cap 8 --background 12 --exact --seed 4 --out " +
                          exact_dir.string(),
                      ws.dir)
                  .exit_code == 0);

        const auto sampled = ImportanceReport::load((sampled_dir / "importance_shap.json").string());
        const auto exact = ImportanceReport::load((exact_dir / "importance_shap.json").string());
        double max_exact = 0.0;
        for (double v : exact.raw_scores) max_exact = std::max(max_exact, std::abs(v));
        for (std::size_t i = 0; i < exact.raw_scores.size(); ++i) {
            CHECK(std::abs(sampled.raw_scores[i] - exact.raw_scores[i]) <= 0.05 * max_exact);
        }
    }

    SUBCASE("ig on a forest artifact exits 1") {
        const auto result = run_cli(base + " --method ig --model-file " + forest_artifact,
                                    ws.dir);
        CHECK(result.exit_code == 1);
    }

    SUBCASE("schema mismatch exits 2") {
        const auto other_schema = ws.dir / "other_schema.json";
        std::ofstream(other_schema) << FeatureSchema::synthetic(5).to_json_text();
        const auto result = run_cli("explain --data " + ws.data_csv.string() + " --schema " +
                                        other_schema.string() + " --method ig --model-file " +
                                        mlp_artifact,
                                    ws.dir);
        CHECK(result.exit_code == 2);
    }

    SUBCASE("top-k prints the ranked head") {
        const auto result = run_cli(base + " --method ig --model-file " + mlp_artifact +
                                        " --cap 10 --top-k 3 --out " +
                                        (ws.dir / "topk").string(),
                                    ws.dir);
        CHECK(result.exit_code == 0);
        CHECK(result.out.find("1. ") != std::string::npos);
        CHECK(result.out.find("3. ") != std::string::npos);
    }
}

TEST_CASE("cli compare") {
    Workspace ws("compare");
    const auto report_path = ws.dir / "imp_a.json";
    ImportanceReport a;
    a.feature_names = {"f1", "f2", "f3", "f4", "f5"};
    a.raw_scores = {5, 4, 3, 2, 1};
    a.normalized_scores = {1.0, 0.8, 0.6, 0.4, 0.2};
    a.ranking = {"f1", "f2", "f3", "f4", "f5"};
    std::ofstream(report_path) << a.to_json_text();

    SUBCASE("identical reports") {
        const auto result = run_cli("compare --a " + report_path.string() + " --b " +
                                        report_path.string() + " --k 5",
                                    ws.dir);
        CHECK(result.exit_code == 0);
        const auto parsed = json::parse(result.out);
        CHECK(parsed.at("top_k_overlap") == 5);
        CHECK(parsed.at("kendall_tau").get<double>() == doctest::Approx(1.0));
        CHECK(parsed.at("disjoint_schemas") == false);
    }
    SUBCASE("disjoint schemas get the marker and no tau") {
        ImportanceReport b = a;
        b.feature_names = {"g1", "g2", "g3", "g4", "g5"};
        b.ranking = {"g1", "g2", "g3", "g4", "g5"};
        const auto b_path = ws.dir / "imp_b.json";
        std::ofstream(b_path) << b.to_json_text();
        const auto result = run_cli("compare --a " + report_path.string() + " --b " +
                                        b_path.string() + " --k 3",
                                    ws.dir);
        CHECK(result.exit_code == 0);
        const auto parsed = json::parse(result.out);
        CHECK(parsed.at("disjoint_schemas") == true);
        CHECK(parsed.at("kendall_tau").is_null());
        CHECK(parsed.at("top_k_overlap") == 0);
    }
    SUBCASE("unparseable input exits 2") {
        const auto bad_path = ws.dir / "bad.json";
        std::ofstream(bad_path) << "this is not json";
        const auto result = run_cli("compare --a " + report_path.string() + " --b " +
                                        bad_path.string() + " --k 2",
                                    ws.dir);
        CHECK(result.exit_code == 2);
    }
}

TEST_CASE("cli compare works on the importance pair a run emits") {
    Workspace ws("compare_run");
    REQUIRE(run_cli("run --config " + ws.config_json.string(), ws.dir).exit_code == 0);
    const auto result = run_cli("compare --a " + (ws.out_dir / "importance_ig.json").string() +
                                    " --b " + (ws.out_dir / "importance_shap.json").string() +
                                    " --k 3",
                                ws.dir);
    CHECK(result.exit_code == 0);
    const auto parsed = json::parse(result.out);
    CHECK(parsed.at("disjoint_schemas") == false);
    const double tau = parsed.at("kendall_tau").get<double>();
    CHECK(tau >= -1.0);
    CHECK(tau <= 1.0);
}
