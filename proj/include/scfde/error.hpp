#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace scfde {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite input or a numerical precondition that does not hold.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Raised by the Hermitian inversion when a pivot is not strictly positive.
class SingularMatrixError : public NumericError {
public:
    static constexpr std::size_t no_subchannel = std::numeric_limits<std::size_t>::max();

    SingularMatrixError(std::size_t subchannel, std::size_t pivot)
        : NumericError(describe(subchannel, pivot)), subchannel_(subchannel), pivot_(pivot) {}

    std::size_t subchannel() const noexcept { return subchannel_; }
    std::size_t pivot() const noexcept { return pivot_; }

private:
    static std::string describe(std::size_t subchannel, std::size_t pivot) {
        std::string msg = "singular matrix: non-positive pivot " + std::to_string(pivot);
        if (subchannel != no_subchannel) msg += " at subchannel " + std::to_string(subchannel);
        return msg;
    }

    std::size_t subchannel_;
    std::size_t pivot_;
};

/// The per-input signal gain collapsed to (numerically) zero.
class DegenerateGainError : public NumericError {
public:
    DegenerateGainError(std::size_t input, double magnitude)
        : NumericError("degenerate signal gain for input " + std::to_string(input) + " (|gamma| = " +
                       std::to_string(magnitude) + ")"),
          input_(input) {}

    std::size_t input() const noexcept { return input_; }

private:
    std::size_t input_;
};

/// Invalid configuration. `line` is 0 when the source position is unknown.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what, std::size_t line = 0, std::string source = {})
        : Error(format(what, line, source)), line_(line), field_message_(what) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field_message() const noexcept { return field_message_; }

private:
    static std::string format(const std::string& what, std::size_t line, const std::string& source) {
        if (line == 0) return what;
        return (source.empty() ? std::string("line ") : source + ":") + std::to_string(line) + ": " + what;
    }

    std::size_t line_;
    std::string field_message_;
};

}  // namespace scfde
