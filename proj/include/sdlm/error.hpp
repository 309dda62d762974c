#pragma once
#ifndef SDLM_ERROR_HPP
#define SDLM_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdlm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (CSV or config). `line` is 1-based, 0 when unknown.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : Error(line == 0 ? what : what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// One or more model invariants are violated. Every violation found is kept.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : Error(join(violations)), violations_(std::move(violations)) {}
    explicit ValidationError(const std::string& violation)
        : ValidationError(std::vector<std::string>{violation}) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) out += "; ";
            out += v[i];
        }
        return out;
    }
    std::vector<std::string> violations_;
};

/// Factorization failure or non-finite result. `step` is the time index (1-based
/// for filter steps, 0 for the initial state) or -1 when not step-specific.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, long step = -1)
        : Error(step < 0 ? what : what + " at step " + std::to_string(step)), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

} // namespace sdlm

#endif
