#pragma once

#include <stdexcept>
#include <string>

namespace chirpctl {

// Invalid user-supplied parameters. The message names the offending field.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed its self-consistency check. Carries the two
// estimates that disagreed so callers can report both.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double coarse, double fine)
        : std::runtime_error(what), coarse_(coarse), fine_(fine) {}

    double coarse() const noexcept { return coarse_; }
    double fine() const noexcept { return fine_; }

private:
    double coarse_;
    double fine_;
};

// Sampling grid too coarse or too short for the requested transform.
class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace chirpctl
