#pragma once

#include <cstddef>
#include <vector>

#include "lockloop/lti.hpp"
#include "lockloop/pdh.hpp"

namespace lockloop {

struct SasLine {
    double center_hz = 0.0;  // detuning relative to the lock transition
    double fwhm_hz = 12e6;
    double depth = 0.1;      // transmission recovered at the peak
};

// Doppler-broadened absorption dip with Lorentzian sub-Doppler peaks riding
// on it, frequency-dither lock-in on a chosen line.
struct SasConfig {
    double doppler_sigma_hz = 230e6;
    double background_depth = 0.7;
    std::vector<SasLine> lines;
    double mod_freq_hz = 17e6;
    double mod_depth_hz = 3e6;   // frequency-modulation excursion
    double demod_phase_rad = 0.0;
    double lockin_bandwidth_hz = 100e3;
    std::size_t lock_line_index = 0;

    void validate() const;
    // True when mod_depth >= lock-line fwhm (distorted-lineshape regime;
    // sas_error still evaluates by brute-force modulation average).
    bool modulation_distorted() const;

    static std::vector<SasLine> cs_d2_f4_lines();  // default hyperfine + crossover table
};

// Probe transmission in (0, 1]: 1 - Gaussian background + Lorentzian peaks.
double sas_transmission(const SasConfig& cfg, double detuning_hz);

// First-harmonic lock-in error (volts): (1/pi) integral of
// T(detuning + m sin theta) sin theta dtheta, rotated by the demod phase.
double sas_error(const SasConfig& cfg, double detuning_hz);

// d(sas_error)/d(detuning) at the lock-line center, V/Hz (signed).
double sas_slope(const SasConfig& cfg);

// sas slope x lock-in low-pass x PID2 x cavity PZT response. Refuses outer
// unity-gain above inner_unity_hint/10 (loop-separation condition).
TransferFunction outer_loop_open_tf(const SasConfig& cfg, const CavityModel& cavity,
                                    const PidConfig& pid2,
                                    double inner_unity_hint_hz = 1.5e6);

}  // namespace lockloop
