#pragma once

#include <stdexcept>
#include <string>

namespace hydrodiff {

/// Bad caller input: shape mismatch, out-of-range argument, invalid config.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Non-finite values or numerical breakdown inside an otherwise valid call.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A verification metric is mathematically undefined for the given series.
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries a 1-based line number when known.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg, long line = -1)
        : std::runtime_error(line >= 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_number(line) {}
    long line_number;
};

/// Checkpoint or data file cannot be read/written as requested.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hydrodiff
