#pragma once

#include <stdexcept>
#include <string>

namespace defectlens {

// Error categories map onto CLI exit codes: config=1, data=2, training=3.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

struct TrainError : std::runtime_error {
    explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct MissingColumn : DataError {
    std::string column;
    explicit MissingColumn(const std::string& name)
        : DataError("missing column: " + name), column(name) {}
};

struct NonNumericCell : DataError {
    std::size_t row;
    std::string column;
    NonNumericCell(std::size_t r, const std::string& col, const std::string& cell)
        : DataError("non-numeric cell at row " + std::to_string(r) + ", column " + col +
                    ": '" + cell + "'"),
          row(r), column(col) {}
};

struct EmptyTable : DataError {
    EmptyTable() : DataError("table has no data rows") {}
};

struct NegativeCount : DataError {
    explicit NegativeCount(double value)
        : DataError("label count is negative: " + std::to_string(value)) {}
};

struct DegenerateSplit : DataError {
    explicit DegenerateSplit(const std::string& msg) : DataError("degenerate split: " + msg) {}
};

struct EmptyMatrix : DataError {
    EmptyMatrix() : DataError("matrix has no rows") {}
};

struct WidthMismatch : DataError {
    WidthMismatch(std::size_t expected, std::size_t got)
        : DataError("width mismatch: expected " + std::to_string(expected) + ", got " +
                    std::to_string(got)) {}
};

struct LengthMismatch : DataError {
    LengthMismatch(std::size_t a, std::size_t b)
        : DataError("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

struct SingleClass : DataError {
    SingleClass() : DataError("only one class present in labels") {}
};

struct SchemaMismatch : DataError {
    explicit SchemaMismatch(const std::string& msg) : DataError("schema mismatch: " + msg) {}
};

struct EmptyInput : DataError {
    explicit EmptyInput(const std::string& what) : DataError("empty input: " + what) {}
};

struct NonFiniteLoss : TrainError {
    explicit NonFiniteLoss(const std::string& where)
        : TrainError("loss became non-finite during " + where) {}
};

struct NonDifferentiableModel : ConfigError {
    explicit NonDifferentiableModel(const std::string& kind)
        : ConfigError("model kind '" + kind + "' does not expose input gradients") {}
};

struct TooManyFeatures : ConfigError {
    TooManyFeatures(std::size_t p, std::size_t limit)
        : ConfigError("exact Shapley enumeration limited to " + std::to_string(limit) +
                      " features, got " + std::to_string(p)) {}
};

} // namespace defectlens
