#pragma once

#include <stdexcept>
#include <string>

namespace punctr {

// Bad flag values, malformed config files, invalid hyperparameter ranges.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable/ill-formed data files, vocabulary mismatches, length mismatches.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Divergence (non-finite loss or gradients) and other failures mid-training.
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg) : std::runtime_error(msg) {}
};

// API misuse that a correct caller can never trigger (e.g. reusing a
// consumed forward cache).
struct LogicError : std::logic_error {
    explicit LogicError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace punctr
