#pragma once

#include <string>

#include "lockloop/cascade.hpp"
#include "lockloop/eit.hpp"

namespace lockloop {

// One scenario file drives every subcommand: named sections with explicit
// units in the key names (see configs/default.json).
struct RunConfig {
    std::string name = "default";
    Scenario scenario;
    EitModel eit;
    double coupling_detuning_hz = 2.4e6;
    ReadoutBand readout_band;
    BeatOptions beat;
};

// Throws ConfigError with a line-numbered diagnostic on malformed input.
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& json_text, const std::string& origin);

// Canonical serialization; load(dump(c)) round-trips bit-exactly.
std::string dump_config(const RunConfig& cfg);

}  // namespace lockloop
