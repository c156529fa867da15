#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace obstacle_ldp {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Field/grid shapes disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A parameter lies outside its admissible range (p <= 1, delta <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Non-finite input or intermediate value.
class NumericError : public Error {
public:
    using Error::Error;
};

/// Newton failed on a single implicit step.
class StepError : public Error {
public:
    StepError(const std::string& what, int step, double residual)
        : Error(what), step_(step), residual_(residual) {}

    int step() const { return step_; }
    double residual() const { return residual_; }

private:
    int step_;
    double residual_;
};

/// The epsilon schedule was exhausted before consecutive solutions met cauchy_tol.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> gaps)
        : Error(what), gaps_(std::move(gaps)) {}

    const std::vector<double>& gaps() const { return gaps_; }

private:
    std::vector<double> gaps_;
};

/// Configuration text failed to parse or validate; carries every violation found.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace obstacle_ldp
