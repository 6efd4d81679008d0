#pragma once

#include <stdexcept>
#include <string>

namespace side {

// Base class for every failure raised by the library. The CLI maps the
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed data: shape mismatches, bad file contents, unknown builtins.
class InputError : public Error {
public:
    using Error::Error;
};

// A coefficient was requested outside the sampled window.
class HorizonError : public Error {
public:
    HorizonError(long long required, long long available, const std::string& what)
        : Error(what + ": requires time " + std::to_string(required) +
                " but coefficients end at " + std::to_string(available)),
          required_(required), available_(available) {}

    long long required() const noexcept { return required_; }
    long long available() const noexcept { return available_; }

private:
    long long required_;
    long long available_;
};

// A constant-rank hypothesis failed (local ranks drift with n).
class AssumptionError : public Error {
public:
    AssumptionError(std::string what, long long time, int step)
        : Error(std::move(what) + " (step " + std::to_string(step) + ", n = " +
                std::to_string(time) + ")"),
          time_(time), step_(step) {}

    long long time() const noexcept { return time_; }
    int step() const noexcept { return step_; }

private:
    long long time_;
    int step_;
};

// A verdict that the data admits no (unique) solution.
class SolvabilityError : public Error {
public:
    SolvabilityError(std::string what, double residual)
        : Error(std::move(what)), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Numerical breakdown (e.g. feedback gain escalation exhausted, singular
// leading matrix that contradicts a certificate).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace side
