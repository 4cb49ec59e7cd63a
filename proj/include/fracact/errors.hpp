#pragma once

#include <stdexcept>
#include <string>

namespace fracact {

/// Argument landed on (or within tolerance of) a pole of the underlying
/// function, e.g. Gamma at a non-positive integer.
class PoleError : public std::domain_error {
public:
    explicit PoleError(const std::string& msg) : std::domain_error(msg) {}
};

/// Argument outside the documented domain of the operation.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& msg) : std::domain_error(msg) {}
};

/// Result magnitude exceeds the double range.
class OverflowError : public std::overflow_error {
public:
    explicit OverflowError(const std::string& msg) : std::overflow_error(msg) {}
};

/// An evaluation produced NaN/Inf; the message carries the location
/// (layer, element index) when known.
class NonFiniteError : public std::runtime_error {
public:
    explicit NonFiniteError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Tensor shapes (or a cache/forward pairing) do not match.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Text input (config file, CSV) failed to parse; the message names the
/// line/row and column.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Binary input (IDX) has a bad magic number or inconsistent lengths.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training hit a non-finite loss or activation and stopped.
class NanAbortError : public std::runtime_error {
public:
    explicit NanAbortError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace fracact
