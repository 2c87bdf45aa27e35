#pragma once

#include <stdexcept>
#include <string>

namespace privsnn {

// Dimension mismatch in a linear-algebra or tensor operation.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input file (CSV / IDX); message names the offending line or field.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid argument value (negative stddev, bad fraction, ...).
struct ArgumentError : std::invalid_argument {
    explicit ArgumentError(const std::string& what) : std::invalid_argument(what) {}
};

// Bad experiment configuration; message carries the key path.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Training cannot proceed (single-class attack set, unreachable privacy target, ...).
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace privsnn
