#pragma once

#include <optional>

#include "lockloop/lti.hpp"
#include "lockloop/psd.hpp"
#include "lockloop/spectral.hpp"

namespace lockloop {

// Low-cost reference cavity. fsr must equal finesse * linewidth; the noise
// model is expected to be dominated by negative exponents at low f.
struct CavityModel {
    double linewidth_hz = 1e6;  // FWHM
    double finesse = 1500.0;
    double fsr_hz = 1.5e9;
    double pzt_gain_hz_per_v = 1e6;
    double pzt_bandwidth_hz = 20e3;
    PsdModel noise;

    void validate() const;
    // Frequency-discrimination response: one pole at linewidth/2.
    TransferFunction discrimination_pole() const;
    TransferFunction pzt_response() const;
};

struct PdhConfig {
    double mod_freq_hz = 7e6;
    double mod_depth_rad = 0.6;
    double demod_phase_rad = 1.5707963267948966;  // quadrature: optimal for fm >> linewidth
    double carrier_power = 0.83;   // normalized optical power
    double sideband_power = 0.084; // per sideband
    std::optional<double> slope_override_v_per_hz;
    PsdModel detector_noise;   // V^2/Hz at the error point
    PsdModel intensity_noise;  // V^2/Hz, monitor floor only

    void validate(const CavityModel& cavity) const;
};

// Static PDH error signal (volts) of the two-mirror lossless cavity
// reflection demodulated at mod_freq. Antisymmetric in detuning at the
// optimal demod phase, zero at resonance and at +-mod_freq.
double pdh_error_curve(const PdhConfig& cfg, const CavityModel& cavity,
                       double detuning_hz);

// Central slope d(error)/d(detuning) in V/Hz (signed); slope_override wins
// when present. Throws on zero carrier or sideband power.
double discriminator_slope(const PdhConfig& cfg, const CavityModel& cavity);

// slope x PID x fast actuator x cavity discrimination pole x loop delay.
// Gain uses |slope|; servo polarity is handled by the simulator.
TransferFunction inner_loop_open_tf(const PdhConfig& cfg, const CavityModel& cavity,
                                    const PidConfig& pid,
                                    const TransferFunction& fast_path,
                                    double loop_delay_s = 50e-9);

enum class MonitorState { amp_noise_only, intensity_noise, loose_lock, tight_lock };

struct MonitorInputs {
    PsdModel relative_free_noise;    // laser - cavity free-running, Hz^2/Hz
    TransferFunction tight_open_loop;
    TransferFunction loose_open_loop;
};

// Modeled single-side PSD (V^2/Hz) at the PD1 monitor port, tabulated on a
// log grid over [f_lo, f_hi]. Tabulated because closed-loop shapes are not
// representable as power-law segments.
SpectrumSeries pd_monitor_psd(const PdhConfig& cfg, const CavityModel& cavity,
                              MonitorState state, const MonitorInputs& in,
                              double f_lo = 10.0, double f_hi = 5e6,
                              std::size_t points = 601);

}  // namespace lockloop
