#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lockloop/timeseries.hpp"

namespace lockloop {

enum class SpectrumKind { psd, beat_power };

// A one-sided PSD (Hz^2/Hz) or a two-sided beat power spectrum (unit total
// power) on a strictly increasing frequency grid.
struct SpectrumSeries {
    std::vector<double> frequencies;
    std::vector<double> values;
    SpectrumKind kind = SpectrumKind::psd;
    std::size_t averaging = 1;
    double rbw_hz = 0.0;  // analysis bandwidth (Hann ENBW) for beat spectra

    double value_at(double f) const;  // log-log interpolation, edge-clamped
    double total_power() const;       // plain sum of values (beat spectra sum to 1)
};

enum class Detrend { mean, linear };

// Welch one-sided PSD, Hann window, per-segment detrending (mean removal by
// default; linear detrend tames sidelobe leakage from steep drift spectra),
// window-power-corrected so that sum(psd)*df tracks the series variance.
SpectrumSeries welch_psd(const TimeSeries& x, std::size_t segment_len,
                         double overlap = 0.5, Detrend detrend = Detrend::mean);

// Beat note against an optional reference: integrates frequency deviation to
// phase, forms the unit-amplitude complex beat field and returns its averaged
// Hann-windowed two-sided power spectrum (fftshifted, total power 1).
// rbw picks the Welch segment length via the Hann ENBW = 1.5/T_seg.
SpectrumSeries beat_spectrum(const TimeSeries& freq_noise,
                             const TimeSeries* reference_noise, double rbw);

enum class LineModel { gaussian, lorentzian };

struct LineshapeFit {
    LineModel model = LineModel::gaussian;
    double center_hz = 0.0;
    double fwhm_hz = 0.0;
    double amplitude = 0.0;     // linear peak power
    double residual_rms = 0.0;  // rms of log10(power) residual over the window
    bool converged = false;
};

// Least squares on log power over [peak - window/2, peak + window/2].
// Throws AnalysisError when no peak rises 3x above the median floor;
// a fit that exhausts its iterations comes back with converged = false.
LineshapeFit fit_lineshape(const SpectrumSeries& spectrum, LineModel model,
                           double window_hz);

struct BetaLineResult {
    double fwhm_hz = 0.0;
    // False when the PSD never exceeds the separation line; fwhm_hz then
    // holds the white-FM floor estimate pi * median(S).
    bool separation_line_exceeded = false;
};

// Beta-separation-line linewidth: integrate S(f) where S(f) > 8 ln2 f / pi^2,
// from 1/obs_time upward; FWHM = sqrt(8 ln2 A).
BetaLineResult beta_line_linewidth(const SpectrumSeries& psd, double obs_time);

// Geometric-mean band averaging onto log-spaced bands (for tolerance checks
// against smooth model curves; empty bands are dropped).
SpectrumSeries band_average(const SpectrumSeries& s, double f_lo, double f_hi,
                            int bands_per_decade);

}  // namespace lockloop
