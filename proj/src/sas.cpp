#include "lockloop/sas.hpp"

#include <cmath>
#include <stdexcept>

#include "lockloop/errors.hpp"

namespace lockloop {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<SasLine> SasConfig::cs_d2_f4_lines() {
    // F=4 -> F'=3,4,5 peaks and crossovers, detunings relative to the
    // F'=5 lock transition. Literature-typical spacings; config data.
    return {
        {0.0, 12e6, 0.12},       // F'=5 (lock line)
        {-125.55e6, 12e6, 0.10}, // co 4/5
        {-226.2e6, 12e6, 0.08},  // co 3/5
        {-251.1e6, 12e6, 0.05},  // F'=4
        {-351.75e6, 12e6, 0.06}, // co 3/4
        {-452.4e6, 12e6, 0.03},  // F'=3
    };
}

void SasConfig::validate() const {
    if (!(doppler_sigma_hz > 0.0)) throw std::invalid_argument("SasConfig: doppler_sigma must be > 0");
    if (background_depth <= 0.0 || background_depth >= 1.0)
        throw std::invalid_argument("SasConfig: background_depth must be in (0, 1)");
    if (lines.empty()) throw std::invalid_argument("SasConfig: need at least one line");
    for (const auto& l : lines) {
        if (!(l.fwhm_hz > 0.0) || !(l.depth > 0.0))
            throw std::invalid_argument("SasConfig: line fwhm and depth must be > 0");
    }
    if (lock_line_index >= lines.size())
        throw std::invalid_argument("SasConfig: lock_line_index out of range");
    if (!(lockin_bandwidth_hz > 0.0) || lockin_bandwidth_hz > mod_freq_hz / 10.0)
        throw std::invalid_argument("SasConfig: lockin bandwidth must be << mod_freq");
    if (!(mod_depth_hz > 0.0)) throw std::invalid_argument("SasConfig: mod_depth must be > 0");
    // peaks must not push transmission above 1
    for (const auto& l : lines) {
        const double bg = background_depth *
                          std::exp(-l.center_hz * l.center_hz / (2.0 * doppler_sigma_hz * doppler_sigma_hz));
        if (l.depth > bg)
            throw std::invalid_argument("SasConfig: peak depth exceeds Doppler background");
    }
}

bool SasConfig::modulation_distorted() const {
    return mod_depth_hz >= lines[lock_line_index].fwhm_hz;
}

double sas_transmission(const SasConfig& cfg, double detuning_hz) {
    const double sg = cfg.doppler_sigma_hz;
    double t = 1.0 - cfg.background_depth * std::exp(-detuning_hz * detuning_hz / (2.0 * sg * sg));
    for (const auto& l : cfg.lines) {
        const double hw = l.fwhm_hz / 2.0;
        const double d = detuning_hz - l.center_hz;
        t += l.depth * hw * hw / (d * d + hw * hw);
    }
    return t;
}

double sas_error(const SasConfig& cfg, double detuning_hz) {
    // ideal first-harmonic lock-in of the frequency-dithered transmission
    const int n = 256;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * kPi * (static_cast<double>(i) + 0.5) / n;
        acc += sas_transmission(cfg, detuning_hz + cfg.mod_depth_hz * std::sin(theta)) *
               std::sin(theta);
    }
    const double first_harmonic = acc * 2.0 / n;  // (1/pi) integral over theta
    return first_harmonic * std::cos(cfg.demod_phase_rad);
}

double sas_slope(const SasConfig& cfg) {
    const double c = cfg.lines[cfg.lock_line_index].center_hz;
    const double h = cfg.lines[cfg.lock_line_index].fwhm_hz * 1e-3;
    const double d1 = (sas_error(cfg, c + h) - sas_error(cfg, c - h)) / (2.0 * h);
    const double d2 = (sas_error(cfg, c + 2.0 * h) - sas_error(cfg, c - 2.0 * h)) / (4.0 * h);
    return (4.0 * d1 - d2) / 3.0;
}

TransferFunction outer_loop_open_tf(const SasConfig& cfg, const CavityModel& cavity,
                                    const PidConfig& pid2, double inner_unity_hint_hz) {
    const double slope = std::abs(sas_slope(cfg));
    auto loop = TransferFunction::unity(slope) *
                TransferFunction::low_pass(cfg.lockin_bandwidth_hz) * make_pid(pid2) *
                cavity.pzt_response();
    const double fu = unity_gain_frequency(loop, 0.1, inner_unity_hint_hz);
    if (std::isfinite(fu) && fu > inner_unity_hint_hz / 10.0)
        throw ConfigError("outer loop unity gain " + std::to_string(fu) +
                          " Hz violates loop separation (inner/10 = " +
                          std::to_string(inner_unity_hint_hz / 10.0) + " Hz)");
    return loop;
}

}  // namespace lockloop
