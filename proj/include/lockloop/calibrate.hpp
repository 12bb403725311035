#pragma once

#include <string>

#include "lockloop/config.hpp"

namespace lockloop {

struct CalibrationReport {
    double inner_unity_hz = 0.0;
    double inner_phase_margin_deg = 0.0;
    double loose_unity_hz = 0.0;
    double outer_unity_hz = 0.0;
    double sas_only_unity_hz = 0.0;
    double suppression_1khz_db = 0.0;   // tight vs loose, predicted
    double cascade_fwhm_hz = 0.0;       // measured on the calibration run
    double cavity_flicker_amplitude = 0.0;  // bisected 1/f amplitude at 1 Hz
    RunConfig config;
    std::string summary() const;
};

// Regenerates the default scenario: pins the loop crossovers against the
// modeled discriminator slopes, then bisects the cavity 1/f amplitude until
// the cascade beat linewidth lands on target. `fast` shortens the linewidth
// runs (used by tests; the shipped config comes from the full run).
CalibrationReport calibrate_default(double target_fwhm_hz = 53e3, bool fast = false);

// The parameter template calibration starts from (also the built-in default
// scenario used by tests when no config file is given).
RunConfig default_config_template();

}  // namespace lockloop
