#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace idmfit {

/// Raised while reading CSV input. `row()` is the 1-based data row (0 when
/// the problem is not tied to a row, e.g. a missing header).
class ParseError : public std::runtime_error {
public:
    enum class Kind {
        bad_header,
        malformed_number,
        count_exceeds_total,
        negative_value,
        invalid_interval,
        overlapping_intervals,
        grid_mismatch,
        empty_table,
    };

    ParseError(Kind kind, std::size_t row, const std::string& what)
        : std::runtime_error(what), kind_(kind), row_(row) {}

    Kind kind() const noexcept { return kind_; }
    std::size_t row() const noexcept { return row_; }

private:
    Kind kind_;
    std::size_t row_;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Quadrature or ODE step-halving check failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hessian at the optimum is not positive definite.
class CovarianceError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

struct Diagnostic {
    std::string code;
    std::string message;
};

/// Warning channel. Numerical routines append here instead of printing;
/// the CLI forwards entries to stderr.
class Diagnostics {
public:
    void warn(std::string code, std::string message) {
        entries_.push_back({std::move(code), std::move(message)});
    }

    const std::vector<Diagnostic>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    bool contains(const std::string& code) const {
        for (const auto& d : entries_)
            if (d.code == code) return true;
        return false;
    }
    void append(const Diagnostics& other) {
        entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
    }

private:
    std::vector<Diagnostic> entries_;
};

inline void warn(Diagnostics* sink, std::string code, std::string message) {
    if (sink) sink->warn(std::move(code), std::move(message));
}

} // namespace idmfit
