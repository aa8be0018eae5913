#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace robinsim {

/// Caller broke a documented precondition (dimension mismatch, bad index, ...).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Domain parameters outside the admissible range of their family.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedAnchor : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class UnsupportedDimension : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operation is not available for a family (e.g. simulating a criterion-only family).
class UnsupportedFamily : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class QuadratureError : public std::runtime_error {
public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    [[nodiscard]] double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Non-finite state inside a simulated path.
class NumericFailure : public std::runtime_error {
public:
    NumericFailure(const std::string& what, std::uint64_t path_index)
        : std::runtime_error(what + " (path " + std::to_string(path_index) + ")"),
          path_index_(path_index) {}
    [[nodiscard]] std::uint64_t path_index() const noexcept { return path_index_; }

private:
    std::uint64_t path_index_;
};

}  // namespace robinsim
