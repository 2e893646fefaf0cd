#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sgdlab {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or malformed configuration (bad field, unknown key, missing file).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown: non-PSD covariance, non-finite activation, failed
/// power iteration, and similar.
class NumericsError : public Error {
public:
    using Error::Error;
};

/// Raised when a training update produces non-finite parameters or the loss
/// explodes. Carries the step index at which the run blew up. Training
/// drivers catch this and record a diverged run instead of propagating.
class DivergenceSignal : public Error {
public:
    DivergenceSignal(std::int64_t step, const std::string& what)
        : Error(what), step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw Error(msg);
}

} // namespace sgdlab
