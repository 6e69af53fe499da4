#pragma once

#include <stdexcept>

namespace qrng {

/// Invalid or inconsistent configuration (CLI exit code 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Failure while running the pipeline, including corrupt data files
/// (CLI exit code 2).
struct PipelineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qrng
