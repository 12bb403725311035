#pragma once

#include <stdexcept>
#include <string>

namespace lockloop {

// Malformed or inconsistent configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A closed loop diverged during simulation (CLI exit code 3).
struct LoopInstabilityError : std::runtime_error {
    LoopInstabilityError(std::string loop, const std::string& what)
        : std::runtime_error(what), loop_name(std::move(loop)) {}
    std::string loop_name;
};

// Analysis failure, e.g. no beat peak or a fit that went nowhere (exit 4).
struct AnalysisError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 1 + G(j2pi f) vanished at the queried frequency.
struct SingularPointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lockloop
