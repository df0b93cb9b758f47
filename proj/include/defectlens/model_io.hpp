#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "defectlens/forest.hpp"
#include "defectlens/logistic.hpp"
#include "defectlens/mlp.hpp"
#include "defectlens/standardize.hpp"
#include "defectlens/train_config.hpp"

namespace defectlens {

using Model = std::variant<LogisticModel, ForestModel, MlpModel>;

std::string model_kind(const Model& model);
std::size_t model_width(const Model& model);
bool is_differentiable(const Model& model);

std::vector<double> predict_proba(const Model& model, const Matrix& X);
double predict_row(const Model& model, std::span<const double> x);

// Throws NonDifferentiableModel for the forest.
std::vector<double> input_gradient(const Model& model, std::span<const double> x);
std::vector<double> logit_gradient_of(const Model& model, std::span<const double> x);
double logit_row_of(const Model& model, std::span<const double> x);

// A trained model plus what it needs to score raw feature rows: the schema
// fingerprint it was trained against, the standardizer fitted on its training
// partition, and the TrainConfig used.
struct ModelArtifact {
    Model model;
    std::vector<std::string> feature_names;
    TrainConfig train_config;
    std::optional<Standardizer> standardizer;

    std::string to_json_text() const;
    static ModelArtifact from_json_text(const std::string& text);

    void save(const std::string& path) const;
    static ModelArtifact load(const std::string& path);
};

} // namespace defectlens
