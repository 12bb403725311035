#include "lockloop/pdh.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "lockloop/errors.hpp"

namespace lockloop {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Amplitude reflectivity from finesse: finesse = pi sqrt(rho) / (1 - rho),
// rho = r^2 the round-trip power factor.
double round_trip_rho(double finesse) {
    const double x = (-kPi + std::sqrt(kPi * kPi + 4.0 * finesse * finesse)) / (2.0 * finesse);
    return x * x;
}

// Two-mirror lossless cavity reflection coefficient vs detuning.
std::complex<double> reflection(double detuning_hz, double fsr_hz, double rho) {
    const double delta = 2.0 * kPi * detuning_hz / fsr_hz;
    const std::complex<double> e(std::cos(delta), std::sin(delta));
    const double r = std::sqrt(rho);
    return r * (e - 1.0) / (1.0 - rho * e);
}
}  // namespace

void CavityModel::validate() const {
    if (!(linewidth_hz > 0.0)) throw std::invalid_argument("CavityModel: linewidth must be > 0");
    if (!(finesse > 1.0)) throw std::invalid_argument("CavityModel: finesse must be > 1");
    if (std::abs(fsr_hz - finesse * linewidth_hz) > 1e-6 * fsr_hz)
        throw std::invalid_argument("CavityModel: fsr must equal finesse * linewidth");
    if (!(pzt_gain_hz_per_v > 0.0) || !(pzt_bandwidth_hz > 0.0))
        throw std::invalid_argument("CavityModel: PZT gain and bandwidth must be > 0");
    noise.validate();
    if (!noise.segments.empty()) {
        const auto lowest = *std::min_element(
            noise.segments.begin(), noise.segments.end(),
            [](const auto& a, const auto& b) { return a.f_lo < b.f_lo; });
        if (!(lowest.exponent < 0.0))
            throw std::invalid_argument(
                "CavityModel: low-frequency noise must be a negative power law");
    }
}

TransferFunction CavityModel::discrimination_pole() const {
    return TransferFunction::low_pass(linewidth_hz / 2.0);
}

TransferFunction CavityModel::pzt_response() const {
    return TransferFunction::low_pass(pzt_bandwidth_hz, pzt_gain_hz_per_v);
}

void PdhConfig::validate(const CavityModel& cavity) const {
    if (!(mod_freq_hz > 2.0 * cavity.linewidth_hz))
        throw std::invalid_argument("PdhConfig: mod_freq must exceed twice the cavity linewidth");
    if (carrier_power < 0.0 || sideband_power < 0.0 ||
        carrier_power + 2.0 * sideband_power > 1.0 + 1e-12)
        throw std::invalid_argument("PdhConfig: carrier + 2 sidebands must stay within unit power");
    detector_noise.validate();
    intensity_noise.validate();
}

double pdh_error_curve(const PdhConfig& cfg, const CavityModel& cavity, double detuning_hz) {
    if (std::abs(detuning_hz) >= cavity.fsr_hz / 2.0)
        throw std::domain_error("pdh_error_curve: detuning wraps to the adjacent mode");
    const double rho = round_trip_rho(cavity.finesse);
    const auto f0 = reflection(detuning_hz, cavity.fsr_hz, rho);
    const auto fp = reflection(detuning_hz + cfg.mod_freq_hz, cavity.fsr_hz, rho);
    const auto fm = reflection(detuning_hz - cfg.mod_freq_hz, cavity.fsr_hz, rho);
    const auto chi = f0 * std::conj(fp) - std::conj(f0) * fm;
    const double scale = 2.0 * std::sqrt(cfg.carrier_power * cfg.sideband_power);
    return scale * (chi.real() * std::cos(cfg.demod_phase_rad) +
                    chi.imag() * std::sin(cfg.demod_phase_rad));
}

double discriminator_slope(const PdhConfig& cfg, const CavityModel& cavity) {
    if (cfg.slope_override_v_per_hz) return *cfg.slope_override_v_per_hz;
    if (cfg.carrier_power <= 0.0 || cfg.sideband_power <= 0.0)
        throw std::invalid_argument("discriminator_slope: zero carrier or sideband power");
    // Richardson-extrapolated central difference around resonance.
    const double h = cavity.linewidth_hz * 1e-4;
    const double d1 = (pdh_error_curve(cfg, cavity, h) - pdh_error_curve(cfg, cavity, -h)) /
                      (2.0 * h);
    const double d2 =
        (pdh_error_curve(cfg, cavity, 2.0 * h) - pdh_error_curve(cfg, cavity, -2.0 * h)) /
        (4.0 * h);
    return (4.0 * d1 - d2) / 3.0;
}

TransferFunction inner_loop_open_tf(const PdhConfig& cfg, const CavityModel& cavity,
                                    const PidConfig& pid, const TransferFunction& fast_path,
                                    double loop_delay_s) {
    const double slope = std::abs(discriminator_slope(cfg, cavity));
    return TransferFunction::unity(slope) * make_pid(pid) * fast_path *
           cavity.discrimination_pole() * TransferFunction::pure_delay(loop_delay_s);
}

SpectrumSeries pd_monitor_psd(const PdhConfig& cfg, const CavityModel& cavity,
                              MonitorState state, const MonitorInputs& in, double f_lo,
                              double f_hi, std::size_t points) {
    if (points < 2 || !(f_lo > 0.0) || !(f_hi > f_lo))
        throw std::invalid_argument("pd_monitor_psd: bad grid");
    const double slope = std::abs(discriminator_slope(cfg, cavity));
    const auto dcav = cavity.discrimination_pole();

    SpectrumSeries out;
    out.kind = SpectrumKind::psd;
    out.frequencies.resize(points);
    out.values.resize(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double f =
            f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / static_cast<double>(points - 1));
        out.frequencies[i] = f;
        double v = cfg.detector_noise.eval_at(f).density;
        if (state != MonitorState::amp_noise_only) v += cfg.intensity_noise.eval_at(f).density;
        if (state == MonitorState::loose_lock || state == MonitorState::tight_lock) {
            const auto& loop =
                state == MonitorState::tight_lock ? in.tight_open_loop : in.loose_open_loop;
            const double supp = closed_loop_suppression(loop, f);
            const double disc = std::abs(dcav.eval(f)) * slope;
            v += in.relative_free_noise.eval_at(f).density * supp * supp * disc * disc;
        }
        out.values[i] = v;
    }
    return out;
}

}  // namespace lockloop
