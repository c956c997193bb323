#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fuse3d {

/// Tensor or image dimensions do not agree with what an operation requires.
class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument value (empty stack, bad window size, out-of-range crop, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Configuration the implementation deliberately does not support.
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content. Carries the byte offset where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

class VersionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A cached forward trace no longer matches the parameters or inputs it is used with.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fuse3d
