#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lockloop/psd.hpp"
#include "lockloop/spectral.hpp"
#include "lockloop/timeseries.hpp"

namespace lockloop {

// Weak-probe steady-state three-level ladder. Rates and detunings in Hz
// (half-widths); transmission via exp(-OD * normalized absorption).
struct EitModel {
    double probe_rabi_hz = 0.5e6;
    double coupling_rabi_hz = 6e6;
    double gamma_e_hz = 2.6e6;   // intermediate-state half width
    double gamma_r_hz = 0.3e6;   // Rydberg dephasing half width
    double optical_depth = 2.0;
    double doppler_sigma_hz = 0.0;  // 0 disables Doppler averaging
    PsdModel intensity_noise_floor;  // transmission^2/Hz, flat readout floor

    void validate() const;
};

struct OperatingPoint {
    double probe_detuning_hz = 0.0;
    double coupling_detuning_hz = 0.0;
    bool resonant() const { return coupling_detuning_hz == 0.0; }

    static OperatingPoint resonant_point() { return {0.0, 0.0}; }
    static OperatingPoint detuned_point(double coupling_hz = 2.4e6) { return {0.0, coupling_hz}; }
};

double eit_transmission(const EitModel& model, double probe_detuning_hz,
                        double coupling_detuning_hz);

// dT/d(probe detuning) at the operating point, central finite difference
// with step gamma_e/1000 by default. Zero (to numerics) at the resonant op.
double transmission_slope(const EitModel& model, const OperatingPoint& op,
                          double step_hz = 0.0);

struct ReadoutSeries {
    TimeSeries transmission;
    std::size_t clipped_samples = 0;  // excursions beyond 10x gamma_e, clamped
};

// Samplewise T(op + frequency noise) through the full static surface
// (adiabatic approximation); captures the quadratic response at resonance.
ReadoutSeries simulate_readout(const TimeSeries& freq_noise, const EitModel& model,
                               const OperatingPoint& op);

struct ReadoutBand {
    double f_lo_hz = 10e3;
    double f_hi_hz = 100e3;
    std::size_t points = 61;  // log-spaced output grid
};

// Readout-noise PSD on the band grid, in dB relative to the intensity floor.
// Detuned op: first-order slope^2 * S_nu + floor. Resonant op: floor plus the
// second-order term measured on a simulate_readout run of noise synthesized
// from the given laser PSD (deterministic via `seed`).
SpectrumSeries readout_noise_psd(const PsdModel& laser_psd, const EitModel& model,
                                 const OperatingPoint& op, const ReadoutBand& band = {},
                                 std::uint64_t seed = 0x5eed);
SpectrumSeries readout_noise_psd(const SpectrumSeries& laser_psd, const EitModel& model,
                                 const OperatingPoint& op, const ReadoutBand& band = {},
                                 std::uint64_t seed = 0x5eed);

// Keyed residual laser PSDs (from cascade-sim) -> the six Fig.-style curves:
// {sas_only, cascade, ule_reference} x {resonant, detuned}, common grid,
// dB re the shared floor. Keys of the result: "<config>_resonant" etc.
std::map<std::string, SpectrumSeries> run_fig3_comparison(
    const std::map<std::string, SpectrumSeries>& residual_psds, const EitModel& model,
    const ReadoutBand& band = {}, double coupling_detuning_hz = 2.4e6,
    std::uint64_t seed = 0x5eed);

}  // namespace lockloop
