#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "defectlens/matrix.hpp"
#include "defectlens/schema.hpp"

namespace defectlens {

// Immutable after construction: feature matrix, binary labels, schema.
struct DefectDataset {
    Matrix features;             // n x p, columns in schema order
    std::vector<int> labels;     // n entries in {0, 1}, 1 = defective / bug-inducing
    FeatureSchema schema;
    std::string provenance;

    std::size_t size() const { return labels.size(); }
    std::size_t width() const { return features.cols(); }

    std::size_t count_positive() const;
    std::size_t count_negative() const { return size() - count_positive(); }

    // Throws on label outside {0,1}, width/schema disagreement, or n = 0.
    void validate() const;
};

// Balanced per-class loss multipliers: w_c = N / (2 * N_c).
struct ClassWeights {
    double weight_negative = 1.0;
    double weight_positive = 1.0;

    double of(int label) const { return label == 1 ? weight_positive : weight_negative; }
};

// 0 stays 0, any positive count becomes 1. Throws NegativeCount.
int binarize_label(double raw_count);

// Reads a CSV file (RFC-4180 style, header row mandatory), drops identifier
// and extra columns, reorders columns to schema order, binarizes labels.
DefectDataset load_table(const std::string& path, const FeatureSchema& schema);

// Same, from in-memory text (the file loader delegates here).
DefectDataset load_table_text(const std::string& csv_text, const FeatureSchema& schema,
                              const std::string& provenance = "memory");

ClassWeights compute_class_weights(const std::vector<int>& labels);

// Deterministic per-class split; test gets round(n_c * test_fraction) of each
// class. Throws DegenerateSplit if either side would lose a class entirely.
std::pair<DefectDataset, DefectDataset> stratified_split(const DefectDataset& data,
                                                         double test_fraction,
                                                         std::uint64_t seed);

// Features i.i.d. standard normal, label ~ Bernoulli(sigmoid(w.x + b + eps)),
// eps ~ Normal(0, noise_scale). Deterministic per seed.
DefectDataset generate_synthetic_linear(std::size_t n, const std::vector<double>& weights,
                                        double bias, double noise_scale, std::uint64_t seed);

// Writes the dataset back out as CSV (header = schema features + label).
std::string to_csv(const DefectDataset& data);

} // namespace defectlens
