// Compares the serial reference path of each parallel kernel against the
// OpenMP path: identical outputs required, wall-clock speedup reported.

#include <chrono>
#include <cstdio>
#include <functional>

#include "defectlens/attribution.hpp"
#include "defectlens/dataset.hpp"
#include "defectlens/forest.hpp"
#include "defectlens/mlp.hpp"
#include "defectlens/parallel.hpp"
#include "defectlens/standardize.hpp"

using namespace defectlens;

namespace {

double time_of(const std::function<void()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double>(stop - start).count();
}

void report(const char* kernel, double serial_s, double parallel_s, bool identical) {
    std::printf("%-24s %10.3fs %10.3fs %8.2fx   %s\n", kernel, serial_s, parallel_s,
                serial_s / parallel_s, identical ? "outputs identical" : "OUTPUTS DIFFER");
}

} // namespace

int main() {
    std::printf("threads available: %d\n\n", hardware_threads());
    std::printf("%-24s %11s %11s %9s\n", "kernel", "serial", "parallel", "speedup");

    const auto data = generate_synthetic_linear(
        4000, {1.5, -2.0, 0.8, 0.0, 1.1, -0.6, 0.3, 2.2, -1.4, 0.9, 0.5, -0.2, 1.7}, 0.2, 0.1,
        99);
    const auto standardizer = fit_standardizer(data.features);
    const Matrix X = standardizer.transform(data.features);
    const auto weights = compute_class_weights(data.labels);

    // Forest training: one tree per task.
    TrainConfig forest_cfg = TrainConfig::forest_defaults();
    ForestModel forest_serial, forest_parallel;
    const double fit_serial = time_of([&] {
        forest_serial =
            fit_random_forest(X, data.labels, weights, forest_cfg, {}, ExecMode::Serial);
    });
    const double fit_parallel = time_of([&] {
        forest_parallel =
            fit_random_forest(X, data.labels, weights, forest_cfg, {}, ExecMode::Parallel);
    });
    bool same = forest_serial.trees.size() == forest_parallel.trees.size();
    for (std::size_t t = 0; same && t < forest_serial.trees.size(); ++t) {
        same = forest_serial.trees[t] == forest_parallel.trees[t];
    }
    report("forest fit", fit_serial, fit_parallel, same);

    // Forest prediction: one row per task.
    std::vector<double> pred_serial, pred_parallel;
    const double predict_serial =
        time_of([&] { pred_serial = forest_serial.predict_proba(X, ExecMode::Serial); });
    const double predict_parallel =
        time_of([&] { pred_parallel = forest_serial.predict_proba(X, ExecMode::Parallel); });
    report("forest predict", predict_serial, predict_parallel, pred_serial == pred_parallel);

    // Attribution kernels run against a trained network.
    TrainConfig mlp_cfg;
    mlp_cfg.max_epochs = 20;
    mlp_cfg.validation_fraction = 0.0;
    const MlpModel mlp = fit_mlp(X, data.labels, weights, mlp_cfg);
    const Model model = mlp;
    const Matrix explained = X.select_rows([&] {
        std::vector<std::size_t> idx(200);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return idx;
    }());

    IgConfig ig_cfg;
    ig_cfg.steps = 256;
    std::vector<AttributionVector> ig_serial, ig_parallel;
    const double ig_s = time_of(
        [&] { ig_serial = integrated_gradients_batch(model, explained, ig_cfg, ExecMode::Serial); });
    const double ig_p = time_of([&] {
        ig_parallel = integrated_gradients_batch(model, explained, ig_cfg, ExecMode::Parallel);
    });
    same = true;
    for (std::size_t i = 0; same && i < ig_serial.size(); ++i) {
        same = ig_serial[i].values == ig_parallel[i].values;
    }
    report("integrated gradients", ig_s, ig_p, same);

    ShapConfig shap_cfg;
    shap_cfg.coalition_budget = 512;
    shap_cfg.seed = 11;
    shap_cfg.background = X.select_rows([&] {
        std::vector<std::size_t> idx(50);
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i * 7;
        return idx;
    }());
    const Matrix shap_rows = X.select_rows({0, 1, 2, 3, 4, 5, 6, 7, 8, 9,
                                            10, 11, 12, 13, 14, 15, 16, 17, 18, 19});
    std::vector<AttributionVector> shap_serial, shap_parallel;
    const double shap_s = time_of(
        [&] { shap_serial = kernel_shap_batch(model, shap_rows, shap_cfg, ExecMode::Serial); });
    const double shap_p = time_of(
        [&] { shap_parallel = kernel_shap_batch(model, shap_rows, shap_cfg, ExecMode::Parallel); });
    same = true;
    for (std::size_t i = 0; same && i < shap_serial.size(); ++i) {
        same = shap_serial[i].values == shap_parallel[i].values;
    }
    report("kernel shap", shap_s, shap_p, same);

    return 0;
}
