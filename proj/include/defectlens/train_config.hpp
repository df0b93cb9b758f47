#pragma once

#include <cstdint>

namespace defectlens {

struct TrainConfig {
    std::uint64_t seed = 42;
    double learning_rate = 1e-3;
    std::size_t max_epochs = 200;
    std::size_t batch_size = 32;
    std::size_t early_stop_patience = 10;
    double l2_penalty = 0.0;
    double dropout_rate = 0.2;
    double validation_fraction = 0.15;

    void validate() const;

    // Full-batch gradient descent needs a larger step and more iterations
    // than the minibatch defaults above.
    static TrainConfig logistic_defaults() {
        TrainConfig cfg;
        cfg.learning_rate = 0.05;
        cfg.max_epochs = 10000;
        cfg.l2_penalty = 1e-6;
        cfg.dropout_rate = 0.0;
        cfg.validation_fraction = 0.0;
        return cfg;
    }

    static TrainConfig forest_defaults() {
        TrainConfig cfg;
        cfg.dropout_rate = 0.0;
        cfg.validation_fraction = 0.0;
        return cfg;
    }

    static TrainConfig mlp_defaults() { return TrainConfig{}; }
};

} // namespace defectlens
