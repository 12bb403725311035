#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lockloop/eit.hpp"
#include "lockloop/lti.hpp"
#include "lockloop/pdh.hpp"
#include "lockloop/psd.hpp"
#include "lockloop/sas.hpp"

namespace lockloop {

enum class LockConfig { free_run, sas_only, lc_only, cascade, ule_reference };

std::string to_string(LockConfig c);
LockConfig lock_config_from_string(const std::string& name);  // ConfigError lists valid names
std::vector<LockConfig> all_lock_configs();

struct Rates {
    double fast_hz = 20e6;
    double slow_hz = 1e6;  // must divide fast_hz
};

// Optional PID1 auxiliary output: a slow path onto the laser PZT that takes
// over large excursions so the DC current port does not saturate.
struct AuxPath {
    PidConfig pid;
    TransferFunction actuator;  // laser PZT, Hz/V
};

struct Scenario {
    PsdModel laser_noise;  // free-running absolute frequency noise
    PsdModel ule_noise;    // near-floor stand-in used by lock_config ule_reference
    CavityModel cavity;
    PdhConfig pdh;
    SasConfig sas;
    PidConfig pid1, pid2;
    PidConfig pid_loose;  // 1 kHz-limited inner lock (monitor / suppression tests)
    TransferFunction fast_actuator;  // laser current port, Hz/V
    TransferFunction slow_actuator;  // laser PZT, Hz/V (sas_only feedback path)
    std::optional<AuxPath> aux;
    Rates rates;
    double duration_s = 0.4;
    std::uint64_t seed = 1;
    LockConfig lock_config = LockConfig::cascade;
    double loop_delay_s = 50e-9;
    double outer_enable_delay_s = 2e-3;
    double settle_s = 30e-3;
    bool loose_inner = false;  // run the inner loop with pid_loose instead of pid1

    void validate() const;  // ConfigError on violated invariants
    double inner_unity_gain_hz() const;
    TransferFunction inner_open_loop() const;  // tight (or loose) inner loop
    TransferFunction outer_open_loop() const;
};

struct SimResult {
    TimeSeries absolute_freq_noise;  // laser vs the atomic line, fast rate
    TimeSeries relative_freq_noise;  // laser minus cavity mode, samplewise
    TimeSeries cavity_mode_noise;
    TimeSeries fast_actuator_drive;  // volts
    TimeSeries slow_actuator_drive;  // volts (cavity PZT or laser PZT)
    std::size_t saturation_events = 0;
    double settle_s = 0.0;  // analysis helpers drop [0, settle)
};

// Multi-rate closed-loop run: inner loop stepped at rates.fast, outer loop at
// rates.slow, lock_config gating which loops act. Deterministic given seed.
// Throws LoopInstabilityError (naming the loop) when the residual runs away.
SimResult simulate(const Scenario& scenario);

// Closed-form residual absolute-frequency PSD of the linearized two-loop
// diagram, evaluated with the exact discrete responses of the blocks the
// simulator runs (biquads, integer-sample delay, ZOH at the slow rate).
double analytic_residual_psd(const Scenario& scenario, double f_hz);

// Common-random-numbers comparison: same seed and noise models, one result
// per lock_config. ConfigError when the scenarios' noise models differ.
std::map<LockConfig, SimResult> run_comparison(const std::vector<Scenario>& scenarios);

// Welch PSD of a result series with the settle time dropped.
SpectrumSeries residual_psd(const TimeSeries& series, double settle_s,
                            std::size_t segment_len);

struct BeatAnalysis {
    SpectrumSeries spectrum;
    LineshapeFit gaussian;
    LineshapeFit lorentzian;
    const LineshapeFit& preferred() const {
        return gaussian.residual_rms <= lorentzian.residual_rms ? gaussian : lorentzian;
    }
};

struct BeatOptions {
    double rbw_hz = 15.0;
    double rate_hz = 10e6;        // beat grid span is +-rate/2
    double fit_window_hz = 0.0;   // 0: auto, ~3x the estimated FWHM
};

// Decimate to the beat rate, drop the settle, beat against a quiet reference
// and fit both lineshape models.
BeatAnalysis analyze_beat(const SimResult& result, const BeatOptions& opt = {});

}  // namespace lockloop
