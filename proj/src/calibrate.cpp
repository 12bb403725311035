#include "lockloop/calibrate.hpp"

#include <cmath>
#include <sstream>

#include "lockloop/errors.hpp"
#include "lockloop/pid_sim.hpp"

namespace lockloop {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
constexpr double kLn2 = 0.6931471805599453;

PsdModel one_over_f(double amp_at_1hz, double f_lo, double f_hi, double f_ref) {
    PsdModel m;
    m.segments.push_back({f_lo, f_hi, -1.0, amp_at_1hz / f_ref, f_ref});
    return m;
}

// beta-separation-line area of a model between f_lo and f_hi
double beta_area(const PsdModel& m, double f_lo, double f_hi) {
    const double coeff = 8.0 * kLn2 / (kPi * kPi);
    const int n = 4000;
    double area = 0.0;
    double f_prev = f_lo;
    double s_prev = m.eval_at(f_lo).density;
    for (int i = 1; i <= n; ++i) {
        const double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / n);
        const double s = m.eval_at(f).density;
        const double w0 = s_prev > coeff * f_prev ? s_prev : 0.0;
        const double w1 = s > coeff * f ? s : 0.0;
        area += 0.5 * (w0 + w1) * (f - f_prev);
        f_prev = f;
        s_prev = s;
    }
    return area;
}

double phase_margin_deg(const TransferFunction& loop, double f_unity) {
    const auto bp = bode(loop, f_unity);
    return 180.0 + bp.phase_rad * 180.0 / kPi;
}

}  // namespace

namespace {

// Everything cheap and deterministic: pin the loop crossovers against the
// modeled discriminator slopes, size the cavity drift segment, set the EIT
// floor. The expensive cavity-flicker bisection lives in calibrate_default.
void solve_template_gains(RunConfig& cfg) {
    Scenario& sc = cfg.scenario;
    const double fs = sc.rates.fast_hz;
    const double delay_q =
        static_cast<double>(std::max<long>(1, std::lround(sc.loop_delay_s * fs))) / fs;

    // inner PI, corner 600 kHz, unity gain at 1.5 MHz (log-scale bisection)
    {
        PidConfig pid = sc.pid1;
        pid.kp = 1.0;
        pid.ki = kTwoPi * 6e5;
        const auto g1 = inner_loop_open_tf(sc.pdh, sc.cavity, pid, sc.fast_actuator, delay_q);
        double lo = -8.0, hi = 8.0;
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            (std::pow(10.0, mid) * std::abs(g1.eval(1.5e6)) > 1.0 ? hi : lo) = mid;
        }
        const double scale = std::pow(10.0, 0.5 * (lo + hi));
        sc.pid1.kp = scale;
        sc.pid1.ki = kTwoPi * 6e5 * scale;
    }
    // loose lock: pure integrator crossing 500 Hz
    {
        PidConfig pid = sc.pid_loose;
        pid.ki = 1.0;
        const auto gl = inner_loop_open_tf(sc.pdh, sc.cavity, pid, sc.fast_actuator, delay_q);
        sc.pid_loose.ki = 1.0 / std::abs(gl.eval(500.0));
    }
    // outer loop: pure integrator, unity at 5 kHz through the cavity PZT --
    // the 1/f rolloff keeps the residual untouched a decade above crossover
    {
        PidConfig pid = sc.pid2;
        pid.kp = 0.0;
        pid.ki = 1.0;
        const double slope2 = std::abs(sas_slope(sc.sas));
        const auto path = TransferFunction::unity(slope2) *
                          TransferFunction::low_pass(sc.sas.lockin_bandwidth_hz) *
                          make_pid(pid) * sc.cavity.pzt_response();
        sc.pid2.kp = 0.0;
        sc.pid2.ki = 1.0 / std::abs(path.eval(5e3));
    }
    // cavity f^-4 amplitude: lc_only beta area 4x the free-running one
    {
        const double a_free = beta_area(sc.laser_noise, 10.0, 5e6);
        PsdModel rest = sc.cavity.noise;
        rest.segments.erase(rest.segments.begin());
        const double a_rest = beta_area(rest, 10.0, 5e6);
        const double c = std::pow(150.0, 4);
        const double unit_area = c / 3.0 * (std::pow(10.0, -3) - std::pow(150.0, -3));
        sc.cavity.noise.segments[0].amplitude_ref =
            std::max(0.0, (4.0 * a_free - a_rest) / unit_area);
    }
    // EIT intensity floor: 1.5x the worst in-band cascade residual
    {
        Scenario casc = sc;
        casc.lock_config = LockConfig::cascade;
        double s_max = 0.0;
        for (std::size_t i = 0; i < cfg.readout_band.points; ++i) {
            const double f = cfg.readout_band.f_lo_hz *
                             std::pow(cfg.readout_band.f_hi_hz / cfg.readout_band.f_lo_hz,
                                      static_cast<double>(i) /
                                          static_cast<double>(cfg.readout_band.points - 1));
            s_max = std::max(s_max, analytic_residual_psd(casc, f));
        }
        const double slope_det = transmission_slope(
            cfg.eit, OperatingPoint::detuned_point(cfg.coupling_detuning_hz));
        cfg.eit.intensity_noise_floor = PsdModel::white(slope_det * slope_det * 1.5 * s_max);
    }
}

}  // namespace

RunConfig default_config_template() {
    RunConfig cfg;
    cfg.name = "default";
    Scenario& sc = cfg.scenario;

    // Free-running laser: flicker FM through 20 kHz, a steeper acoustic
    // rolloff above, white floor.
    sc.laser_noise.segments = {{1.0, 2e4, -1.0, 1.1e11, 1.0},
                               {2e4, 2e7, -3.0, 5.5e6, 2e4}};
    sc.laser_noise.floor = 2e3;

    // Hertz-level-linewidth comparison laser.
    sc.ule_noise.floor = 0.5;

    sc.cavity.linewidth_hz = 1e6;
    sc.cavity.finesse = 1500.0;
    sc.cavity.fsr_hz = 1.5e9;
    sc.cavity.pzt_gain_hz_per_v = 1e6;
    sc.cavity.pzt_bandwidth_hz = 1e5;
    // steep drift below 150 Hz, 1/f through the acoustic band, falling fast
    // above 25 kHz; the 1/f amplitude comes from the linewidth calibration
    sc.cavity.noise.segments = {{10.0, 150.0, -4.0, 1.3e7, 150.0},
                                {150.0, 2.5e4, -1.0, 2.4e5, 1000.0},
                                {2.5e4, 5e6, -3.0, 9.6e3, 2.5e4}};
    sc.cavity.noise.floor = 0.5;

    sc.pdh.mod_freq_hz = 7e6;
    sc.pdh.mod_depth_rad = 0.6;
    sc.pdh.demod_phase_rad = kPi / 2.0;
    sc.pdh.carrier_power = 0.83;
    sc.pdh.sideband_power = 0.084;
    sc.pdh.detector_noise = PsdModel::white(1e-16);
    sc.pdh.intensity_noise = PsdModel::white(4e-16);

    sc.sas.doppler_sigma_hz = 230e6;
    sc.sas.background_depth = 0.7;
    sc.sas.lines = SasConfig::cs_d2_f4_lines();
    sc.sas.mod_freq_hz = 17e6;
    sc.sas.mod_depth_hz = 3e6;
    sc.sas.demod_phase_rad = 0.0;
    sc.sas.lockin_bandwidth_hz = 2e5;
    sc.sas.lock_line_index = 0;

    sc.fast_actuator = TransferFunction::low_pass(2e7, 5e6);   // laser current port
    sc.slow_actuator = TransferFunction::low_pass(3e4, 6e5);   // laser PZT

    // gains are re-solved by calibrate_default; these are its outputs
    sc.pid1 = {0.0473, 1.783e5, 0.0, 4e6, 1.5e7, 2.0};
    sc.pid_loose = {0.0, 2.5e4, 0.0, 4e6, 1e5, 10.0};
    sc.pid2 = {0.0, 4.6e5, 0.0, 1e5, 4e5, 10.0};

    sc.rates = {2e7, 1e6};
    sc.duration_s = 0.45;
    sc.seed = 20260810;
    sc.lock_config = LockConfig::cascade;
    sc.loop_delay_s = 50e-9;
    sc.outer_enable_delay_s = 2e-3;
    sc.settle_s = 30e-3;

    cfg.eit.probe_rabi_hz = 5e5;
    cfg.eit.coupling_rabi_hz = 1.1e7;
    cfg.eit.gamma_e_hz = 2.6e6;
    cfg.eit.gamma_r_hz = 5e5;
    cfg.eit.optical_depth = 2.0;
    cfg.eit.intensity_noise_floor = PsdModel::white(3e-19);
    cfg.coupling_detuning_hz = 2.4e6;
    cfg.readout_band = {1e4, 1e5, 61};

    cfg.beat = {15.0, 1e7, 1.2e5};

    solve_template_gains(cfg);
    return cfg;
}

CalibrationReport calibrate_default(double target_fwhm_hz, bool fast) {
    CalibrationReport rep;
    RunConfig cfg = default_config_template();
    Scenario& sc = cfg.scenario;
    const double fs = sc.rates.fast_hz;

    const auto inner = sc.inner_open_loop();
    rep.inner_unity_hz = unity_gain_frequency(inner, 1e3, fs / 2.0);
    rep.inner_phase_margin_deg = phase_margin_deg(inner, rep.inner_unity_hz);
    {
        Scenario tmp = sc;
        tmp.loose_inner = true;
        rep.loose_unity_hz = unity_gain_frequency(tmp.inner_open_loop(), 1.0, 1e6);
        const double s_tight = closed_loop_suppression(inner, 1e3);
        const double s_loose = closed_loop_suppression(tmp.inner_open_loop(), 1e3);
        rep.suppression_1khz_db = 20.0 * std::log10(s_loose / s_tight);
    }
    rep.outer_unity_hz = unity_gain_frequency(sc.outer_open_loop(), 10.0, 1e6);
    {
        const double slope2 = std::abs(sas_slope(sc.sas));
        const auto sas_loop = TransferFunction::unity(slope2) *
                              TransferFunction::low_pass(sc.sas.lockin_bandwidth_hz) *
                              make_pid(sc.pid2) * sc.slow_actuator;
        rep.sas_only_unity_hz = unity_gain_frequency(sas_loop, 10.0, 1e6);
    }

    // bisect the cavity 1/f amplitude against the measured beat linewidth
    {
        Scenario run = sc;
        run.lock_config = LockConfig::cascade;
        run.duration_s = fast ? 0.25 : 0.45;
        auto set_flicker = [](Scenario& s2, double amp_at_1hz) {
            s2.cavity.noise.segments[1].amplitude_ref = amp_at_1hz / 1000.0;
            s2.cavity.noise.segments[2].amplitude_ref = amp_at_1hz / 2.5e4;
        };
        auto measure = [&](double amp_at_1hz) {
            set_flicker(run, amp_at_1hz);
            const auto result = simulate(run);
            const auto beat = analyze_beat(result, cfg.beat);
            return beat.preferred().fwhm_hz;
        };
        double lo = std::log10(5e7), hi = std::log10(2e9);
        double best_amp = 0.0, best_err = 1e300, best_fwhm = 0.0;
        const int iters = fast ? 6 : 10;
        for (int i = 0; i < iters; ++i) {
            const double mid = 0.5 * (lo + hi);
            const double amp = std::pow(10.0, mid);
            const double fwhm = measure(amp);
            const double err = std::abs(std::log(fwhm / target_fwhm_hz));
            if (err < best_err) {
                best_err = err;
                best_amp = amp;
                best_fwhm = fwhm;
            }
            if (err < 0.02) break;
            (fwhm > target_fwhm_hz ? hi : lo) = mid;
        }
        set_flicker(sc, best_amp);
        rep.cavity_flicker_amplitude = best_amp;
        rep.cascade_fwhm_hz = best_fwhm;
    }

    // the flicker amplitude moved, so refresh the dependent template pieces
    solve_template_gains(cfg);

    rep.config = cfg;
    return rep;
}

std::string CalibrationReport::summary() const {
    std::ostringstream ss;
    ss << "inner unity gain:      " << inner_unity_hz / 1e6 << " MHz (PM "
       << inner_phase_margin_deg << " deg)\n"
       << "loose-lock unity gain: " << loose_unity_hz << " Hz\n"
       << "outer unity gain:      " << outer_unity_hz / 1e3 << " kHz\n"
       << "sas-only unity gain:   " << sas_only_unity_hz / 1e3 << " kHz\n"
       << "tight-vs-loose suppression at 1 kHz: " << suppression_1khz_db << " dB\n"
       << "cascade beat linewidth (measured):   " << cascade_fwhm_hz / 1e3 << " kHz\n"
       << "cavity 1/f amplitude at 1 Hz:        " << cavity_flicker_amplitude << " Hz^2/Hz\n";
    return ss.str();
}

}  // namespace lockloop
