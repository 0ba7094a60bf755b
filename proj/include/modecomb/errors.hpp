#pragma once

#include <stdexcept>
#include <string>

namespace modecomb {

// Invalid arguments or inconsistent inputs (bad parameter ranges, malformed
// structures). CLI maps these to exit code 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape/size mismatches between tensors, permutations or vectors.
struct DimensionError : ValidationError {
    explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

// Malformed on-disk artifacts (bad magic, truncation). Carries a byte offset
// when one is known.
struct FormatError : ValidationError {
    explicit FormatError(const std::string& msg, long offset = -1)
        : ValidationError(offset >= 0 ? msg + " (byte offset " + std::to_string(offset) + ")" : msg),
          byte_offset(offset) {}
    long byte_offset;
};

// Config-text problems; message carries the line number.
struct ParseError : ValidationError {
    explicit ParseError(const std::string& msg) : ValidationError(msg) {}
};

// Training produced a non-finite loss. CLI maps these to exit code 2.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures; message carries the path. Exit code 2.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace modecomb
