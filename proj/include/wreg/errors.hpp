#pragma once

#include <stdexcept>
#include <string>

namespace wreg {

// Grid/channel dimension violations.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid option values (unknown wavelet, even NCC window, negative steps, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite sampling coordinates.
struct SampleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent recorded state (e.g. an integration trace that does not match its inputs).
struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Optimization produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A metric is undefined for the given inputs (e.g. label missing from a volume).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// File format / corruption problems.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace wreg
