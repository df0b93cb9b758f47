#include "defectlens/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace defectlens {

using nlohmann::json;

std::string model_kind(const Model& model) {
    return std::visit(
        [](const auto& m) -> std::string {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, LogisticModel>) return "logistic";
            if constexpr (std::is_same_v<T, ForestModel>) return "forest";
            if constexpr (std::is_same_v<T, MlpModel>) return "mlp";
        },
        model);
}

std::size_t model_width(const Model& model) {
    return std::visit([](const auto& m) { return m.width(); }, model);
}

bool is_differentiable(const Model& model) {
    return !std::holds_alternative<ForestModel>(model);
}

std::vector<double> predict_proba(const Model& model, const Matrix& X) {
    return std::visit([&](const auto& m) { return m.predict_proba(X); }, model);
}

double predict_row(const Model& model, std::span<const double> x) {
    return std::visit([&](const auto& m) { return m.predict_row(x); }, model);
}

std::vector<double> input_gradient(const Model& model, std::span<const double> x) {
    if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
        return logistic->input_gradient(x);
    }
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
        return mlp->input_gradient(x);
    }
    throw NonDifferentiableModel(model_kind(model));
}

std::vector<double> logit_gradient_of(const Model& model, std::span<const double> x) {
    if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
        const auto n = logistic->width();
        if (x.size() != n) throw WidthMismatch(n, x.size());
        return logistic->weights;
    }
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
        return mlp->logit_gradient(x);
    }
    throw NonDifferentiableModel(model_kind(model));
}

double logit_row_of(const Model& model, std::span<const double> x) {
    if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
        double z = logistic->bias;
        for (std::size_t i = 0; i < x.size(); ++i) z += logistic->weights[i] * x[i];
        return z;
    }
    if (const auto* mlp = std::get_if<MlpModel>(&model)) {
        return mlp->logit_row(x);
    }
    throw NonDifferentiableModel(model_kind(model));
}

namespace {

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"seed", cfg.seed},
                {"learning_rate", cfg.learning_rate},
                {"max_epochs", cfg.max_epochs},
                {"batch_size", cfg.batch_size},
                {"early_stop_patience", cfg.early_stop_patience},
                {"l2_penalty", cfg.l2_penalty},
                {"dropout_rate", cfg.dropout_rate},
                {"validation_fraction", cfg.validation_fraction}};
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.seed = j.value("seed", cfg.seed);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
    cfg.l2_penalty = j.value("l2_penalty", cfg.l2_penalty);
    cfg.dropout_rate = j.value("dropout_rate", cfg.dropout_rate);
    cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
    return cfg;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& row : j) rows.push_back(row.get<std::vector<double>>());
    return Matrix::from_rows(rows);
}

json model_params_to_json(const Model& model) {
    if (const auto* logistic = std::get_if<LogisticModel>(&model)) {
        return json{{"weights", logistic->weights}, {"bias", logistic->bias}};
    }
    if (const auto* forest = std::get_if<ForestModel>(&model)) {
        json trees = json::array();
        for (const auto& tree : forest->trees) {
            json nodes = json::array();
            for (const auto& n : tree.nodes) {
                nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.prob}));
            }
            trees.push_back(std::move(nodes));
        }
        return json{{"n_features", forest->n_features},
                    {"tree_seeds", forest->tree_seeds},
                    {"trees", std::move(trees)}};
    }
    const auto& mlp = std::get<MlpModel>(model);
    json layers = json::array();
    for (std::size_t l = 0; l < mlp.layer_count(); ++l) {
        layers.push_back(
            json{{"weights", matrix_to_json(mlp.weights()[l])}, {"bias", mlp.biases()[l]}});
    }
    return json{{"dropout_rate", mlp.dropout_rate},
                {"input_width", mlp.width()},
                {"layers", std::move(layers)}};
}

Model model_from_json(const std::string& kind, const json& params) {
    if (kind == "logistic") {
        LogisticModel m;
        m.weights = params.at("weights").get<std::vector<double>>();
        m.bias = params.at("bias").get<double>();
        return m;
    }
    if (kind == "forest") {
        ForestModel m;
        m.n_features = params.at("n_features").get<std::size_t>();
        m.tree_seeds = params.at("tree_seeds").get<std::vector<std::uint64_t>>();
        for (const auto& tree_json : params.at("trees")) {
            DecisionTree tree;
            for (const auto& n : tree_json) {
                tree.nodes.push_back(TreeNode{n.at(0).get<int>(), n.at(1).get<double>(),
                                              n.at(2).get<int>(), n.at(3).get<int>(),
                                              n.at(4).get<double>()});
            }
            m.trees.push_back(std::move(tree));
        }
        return m;
    }
    if (kind == "mlp") {
        MlpModel m(params.at("input_width").get<std::size_t>());
        m.dropout_rate = params.at("dropout_rate").get<double>();
        const auto& layers = params.at("layers");
        if (layers.size() != m.layer_count()) {
            throw DataError("mlp artifact has wrong layer count");
        }
        for (std::size_t l = 0; l < m.layer_count(); ++l) {
            Matrix W = matrix_from_json(layers[l].at("weights"));
            if (W.rows() != m.weights()[l].rows() || W.cols() != m.weights()[l].cols()) {
                throw DataError("mlp artifact layer shape mismatch");
            }
            m.weights()[l] = std::move(W);
            m.biases()[l] = layers[l].at("bias").get<std::vector<double>>();
        }
        return m;
    }
    throw DataError("unknown model kind: " + kind);
}

} // namespace

std::string ModelArtifact::to_json_text() const {
    json j;
    j["kind"] = model_kind(model);
    j["feature_names"] = feature_names;
    j["train_config"] = train_config_to_json(train_config);
    j["params"] = model_params_to_json(model);
    if (standardizer) {
        j["standardizer"] = json{{"means", standardizer->means}, {"scales", standardizer->scales}};
    }
    return j.dump(2);
}

ModelArtifact ModelArtifact::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid model artifact JSON: ") + e.what());
    }
    try {
        ModelArtifact artifact;
        artifact.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        artifact.train_config = train_config_from_json(j.at("train_config"));
        artifact.model = model_from_json(j.at("kind").get<std::string>(), j.at("params"));
        if (j.contains("standardizer")) {
            Standardizer s;
            s.means = j["standardizer"].at("means").get<std::vector<double>>();
            s.scales = j["standardizer"].at("scales").get<std::vector<double>>();
            artifact.standardizer = std::move(s);
        }
        return artifact;
    } catch (const json::exception& e) {
        throw DataError(std::string("model artifact missing field: ") + e.what());
    }
}

void ModelArtifact::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write model artifact: " + path);
    out << to_json_text() << '\n';
}

ModelArtifact ModelArtifact::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model artifact: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

} // namespace defectlens
