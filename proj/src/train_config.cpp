#include "defectlens/train_config.hpp"

#include "defectlens/errors.hpp"

namespace defectlens {

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (validation_fraction < 0.0 || validation_fraction > 0.5) {
        throw ConfigError("validation_fraction must be in [0, 0.5]");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ConfigError("dropout_rate must be in [0, 1)");
    }
    if (l2_penalty < 0.0) throw ConfigError("l2_penalty must be >= 0");
}

} // namespace defectlens
