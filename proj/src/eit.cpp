#include "lockloop/eit.hpp"

#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>

#include "lockloop/errors.hpp"

namespace lockloop {

namespace {

// 16-point Gauss-Hermite nodes/weights for optional Doppler averaging.
constexpr int kGh = 16;
constexpr double kGhNodes[kGh] = {
    -4.688738939305818, -3.869447904860123, -3.176999161979956, -2.546202157847481,
    -1.951787990916254, -1.380258539198881, -0.8229514491446559, -0.2734810461381525,
    0.2734810461381525, 0.8229514491446559, 1.380258539198881, 1.951787990916254,
    2.546202157847481, 3.176999161979956, 3.869447904860123, 4.688738939305818};
constexpr double kGhWeights[kGh] = {
    2.654807474011182e-10, 2.320980844865211e-07, 2.711860092537881e-05,
    9.322840086241805e-04, 1.288031153550997e-02, 8.381004139898583e-02,
    2.806474585285337e-01, 5.079294790166137e-01, 5.079294790166137e-01,
    2.806474585285337e-01, 8.381004139898583e-02, 1.288031153550997e-02,
    9.322840086241805e-04, 2.711860092537881e-05, 2.320980844865211e-07,
    2.654807474011182e-10};
constexpr double kInvSqrtPi = 0.5641895835477563;

double absorption(const EitModel& m, double dp, double dc) {
    const std::complex<double> i(0.0, 1.0);
    const double omega_half_sq = 0.25 * m.coupling_rabi_hz * m.coupling_rabi_hz;
    const std::complex<double> d =
        m.gamma_e_hz - i * dp + omega_half_sq / (m.gamma_r_hz - i * (dp + dc));
    return (m.gamma_e_hz / d).real();
}

}  // namespace

void EitModel::validate() const {
    if (!(gamma_e_hz > 0.0) || !(gamma_r_hz > 0.0))
        throw std::invalid_argument("EitModel: decay rates must be > 0");
    if (coupling_rabi_hz < 0.0 || probe_rabi_hz < 0.0)
        throw std::invalid_argument("EitModel: Rabi frequencies must be >= 0");
    if (!(optical_depth > 0.0)) throw std::invalid_argument("EitModel: optical_depth must be > 0");
    if (doppler_sigma_hz < 0.0) throw std::invalid_argument("EitModel: doppler_sigma must be >= 0");
    intensity_noise_floor.validate();
}

double eit_transmission(const EitModel& model, double probe_detuning_hz,
                        double coupling_detuning_hz) {
    double a;
    if (model.doppler_sigma_hz > 0.0) {
        // velocity classes shift the one-photon detuning; counter-propagating
        // beams largely cancel the two-photon shift, kept exact here
        a = 0.0;
        for (int k = 0; k < kGh; ++k) {
            const double shift = std::sqrt(2.0) * model.doppler_sigma_hz * kGhNodes[k];
            a += kGhWeights[k] *
                 absorption(model, probe_detuning_hz + shift, coupling_detuning_hz - shift);
        }
        a *= kInvSqrtPi;
    } else {
        a = absorption(model, probe_detuning_hz, coupling_detuning_hz);
    }
    return std::exp(-model.optical_depth * a);
}

double transmission_slope(const EitModel& model, const OperatingPoint& op, double step_hz) {
    if (step_hz == 0.0) step_hz = model.gamma_e_hz / 1000.0;
    if (!(step_hz > 1e-6))
        throw std::invalid_argument("transmission_slope: step collapses below precision");
    const double dc = op.coupling_detuning_hz;
    const double dp = op.probe_detuning_hz;
    const double t1 = eit_transmission(model, dp + step_hz, dc);
    const double t2 = eit_transmission(model, dp - step_hz, dc);
    const double t3 = eit_transmission(model, dp + 2.0 * step_hz, dc);
    const double t4 = eit_transmission(model, dp - 2.0 * step_hz, dc);
    const double d1 = (t1 - t2) / (2.0 * step_hz);
    const double d2 = (t3 - t4) / (4.0 * step_hz);
    return (4.0 * d1 - d2) / 3.0;
}

ReadoutSeries simulate_readout(const TimeSeries& freq_noise, const EitModel& model,
                               const OperatingPoint& op) {
    if (freq_noise.unit != Unit::hz_deviation)
        throw std::invalid_argument("simulate_readout: input must be hz_deviation");
    const double limit = 10.0 * model.gamma_e_hz;
    ReadoutSeries out;
    out.transmission.sample_rate = freq_noise.sample_rate;
    out.transmission.unit = Unit::transmission;
    out.transmission.samples.resize(freq_noise.samples.size());
    for (std::size_t i = 0; i < freq_noise.samples.size(); ++i) {
        double dv = freq_noise.samples[i];
        if (std::abs(dv) > limit) {
            dv = dv > 0.0 ? limit : -limit;
            ++out.clipped_samples;
        }
        out.transmission.samples[i] =
            eit_transmission(model, op.probe_detuning_hz + dv, op.coupling_detuning_hz);
    }
    return out;
}

namespace {

std::vector<double> band_grid(const ReadoutBand& band) {
    if (!(band.f_lo_hz > 0.0) || !(band.f_hi_hz > band.f_lo_hz) || band.points < 2)
        throw std::invalid_argument("ReadoutBand: bad band spec");
    std::vector<double> g(band.points);
    for (std::size_t i = 0; i < band.points; ++i)
        g[i] = band.f_lo_hz * std::pow(band.f_hi_hz / band.f_lo_hz,
                                       static_cast<double>(i) / static_cast<double>(band.points - 1));
    return g;
}

SpectrumSeries readout_noise_impl(const std::function<double(double)>& laser_psd,
                                  const std::function<TimeSeries(double, std::size_t)>& synth,
                                  const EitModel& model, const OperatingPoint& op,
                                  const ReadoutBand& band) {
    model.validate();
    const auto grid = band_grid(band);
    SpectrumSeries out;
    out.kind = SpectrumKind::psd;
    out.frequencies = grid;
    out.values.resize(grid.size());

    if (!op.resonant()) {
        const double slope = transmission_slope(model, op);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double floor = model.intensity_noise_floor.eval_at(grid[i]).density;
            if (!(floor > 0.0))
                throw std::invalid_argument("readout_noise_psd: intensity floor must be > 0");
            const double s_t = slope * slope * laser_psd(grid[i]);
            out.values[i] = 10.0 * std::log10((floor + s_t) / floor);
        }
        return out;
    }

    // Resonant: the first-order term vanishes; measure the second-order term
    // on a time-domain run through the full transmission surface.
    const double rate = std::max(1e6, 8.0 * band.f_hi_hz);
    const std::size_t n = std::size_t{1} << 21;
    const TimeSeries noise = synth(rate, n);
    const auto readout = simulate_readout(noise, model, op);
    const std::size_t seg = 4096;
    const auto spec = welch_psd(readout.transmission, seg);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double floor = model.intensity_noise_floor.eval_at(grid[i]).density;
        if (!(floor > 0.0))
            throw std::invalid_argument("readout_noise_psd: intensity floor must be > 0");
        out.values[i] = 10.0 * std::log10((floor + spec.value_at(grid[i])) / floor);
    }
    out.averaging = spec.averaging;
    return out;
}

}  // namespace

SpectrumSeries readout_noise_psd(const PsdModel& laser_psd, const EitModel& model,
                                 const OperatingPoint& op, const ReadoutBand& band,
                                 std::uint64_t seed) {
    for (double f : {band.f_lo_hz, band.f_hi_hz})
        if (!laser_psd.eval_at(f).defined)
            throw std::invalid_argument("readout_noise_psd: laser PSD does not cover the band");
    return readout_noise_impl(
        [&laser_psd](double f) { return laser_psd.eval_at(f).density; },
        [&laser_psd, seed](double rate, std::size_t n) {
            return synthesize(laser_psd, rate, n, seed);
        },
        model, op, band);
}

SpectrumSeries readout_noise_psd(const SpectrumSeries& laser_psd, const EitModel& model,
                                 const OperatingPoint& op, const ReadoutBand& band,
                                 std::uint64_t seed) {
    if (laser_psd.kind != SpectrumKind::psd)
        throw std::invalid_argument("readout_noise_psd: need a psd-kind spectrum");
    if (laser_psd.frequencies.empty() || laser_psd.frequencies.front() > band.f_lo_hz ||
        laser_psd.frequencies.back() < band.f_hi_hz)
        throw std::invalid_argument("readout_noise_psd: laser PSD does not cover the band");
    return readout_noise_impl(
        [&laser_psd](double f) { return laser_psd.value_at(f); },
        [&laser_psd, seed](double rate, std::size_t n) {
            return synthesize_tabulated(laser_psd.frequencies, laser_psd.values, rate, n, seed);
        },
        model, op, band);
}

std::map<std::string, SpectrumSeries> run_fig3_comparison(
    const std::map<std::string, SpectrumSeries>& residual_psds, const EitModel& model,
    const ReadoutBand& band, double coupling_detuning_hz, std::uint64_t seed) {
    for (const char* key : {"sas_only", "cascade", "ule_reference"})
        if (!residual_psds.count(key))
            throw std::invalid_argument(std::string("run_fig3_comparison: missing config ") + key);
    std::map<std::string, SpectrumSeries> out;
    for (const auto& [key, psd] : residual_psds) {
        out[key + "_resonant"] =
            readout_noise_psd(psd, model, OperatingPoint::resonant_point(), band, seed);
        out[key + "_detuned"] = readout_noise_psd(
            psd, model, OperatingPoint::detuned_point(coupling_detuning_hz), band, seed);
    }
    return out;
}

}  // namespace lockloop
