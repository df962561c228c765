#pragma once

#include <stdexcept>
#include <string>

namespace skelact {

// Shape/extent mismatches between tensors or against a layer's expectations.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid argument values (bad axis, non-positive stride, out-of-range index, ...).
struct ArgumentError : std::runtime_error {
    explicit ArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid or inconsistent configuration (unknown keys, bad field values,
// checkpoint/config mismatches).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed files: datasets, checkpoints, skeleton captures, score files.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures (missing file, unreadable/unwritable path).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace skelact
