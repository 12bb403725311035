#include "lockloop/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "lockloop/errors.hpp"
#include "lockloop/pid_sim.hpp"

namespace lockloop {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    return detail::splitmix64(s);
}
}  // namespace

std::string to_string(LockConfig c) {
    switch (c) {
        case LockConfig::free_run: return "free_run";
        case LockConfig::sas_only: return "sas_only";
        case LockConfig::lc_only: return "lc_only";
        case LockConfig::cascade: return "cascade";
        case LockConfig::ule_reference: return "ule_reference";
    }
    return "unknown";
}

std::vector<LockConfig> all_lock_configs() {
    return {LockConfig::free_run, LockConfig::sas_only, LockConfig::lc_only,
            LockConfig::cascade, LockConfig::ule_reference};
}

LockConfig lock_config_from_string(const std::string& name) {
    for (auto c : all_lock_configs())
        if (to_string(c) == name) return c;
    std::string valid;
    for (auto c : all_lock_configs()) valid += (valid.empty() ? "" : ", ") + to_string(c);
    throw ConfigError("unknown lock_config '" + name + "' (valid: " + valid + ")");
}

void Scenario::validate() const {
    cavity.validate();
    pdh.validate(cavity);
    sas.validate();
    laser_noise.validate();
    ule_noise.validate();
    pid1.validate();
    pid2.validate();
    pid_loose.validate();
    if (aux) aux->pid.validate();
    if (!(rates.fast_hz > 0.0) || !(rates.slow_hz > 0.0))
        throw ConfigError("rates must be > 0");
    const double ratio = rates.fast_hz / rates.slow_hz;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
        throw ConfigError("rates.slow must divide rates.fast");
    if (!(duration_s > 0.0) || !(seed >= 0)) throw ConfigError("bad duration or seed");
    if (settle_s >= duration_s) throw ConfigError("settle time exceeds the run duration");
    if (loop_delay_s < 0.0) throw ConfigError("loop delay must be >= 0");
    const double fu = inner_unity_gain_hz();
    if (std::isfinite(fu) && rates.fast_hz < 4.0 * fu)
        throw ConfigError("rates.fast below 4x the inner-loop unity-gain frequency");
    if (lock_config == LockConfig::cascade)
        (void)outer_open_loop();  // throws when loop separation is violated
}

double Scenario::inner_unity_gain_hz() const {
    return unity_gain_frequency(inner_open_loop(), 10.0, rates.fast_hz / 2.0);
}

TransferFunction Scenario::inner_open_loop() const {
    // delay quantized exactly as the simulator runs it
    const auto nd = std::max<long>(1, std::lround(loop_delay_s * rates.fast_hz));
    return inner_loop_open_tf(pdh, cavity, loose_inner ? pid_loose : pid1, fast_actuator,
                              static_cast<double>(nd) / rates.fast_hz);
}

TransferFunction Scenario::outer_open_loop() const {
    return outer_loop_open_tf(sas, cavity, pid2, inner_unity_gain_hz());
}

namespace {

// Everything the fast loop steps, grouped so simulate() stays readable.
struct LoopBlocks {
    double slope1 = 0.0;  // |discriminator slopes|; drive signs are fixed
    double slope2 = 0.0;
    DigitalFilter dcav;
    DigitalFilter act_fast;
    DigitalFilter pzt;       // cavity PZT, fast rate
    DigitalFilter act_slow;  // laser PZT, fast rate
    DigitalFilter lockin;
    std::size_t delay_samples = 1;
    std::size_t ratio = 1;  // fast / slow
};

LoopBlocks build_blocks(const Scenario& sc) {
    LoopBlocks b;
    const double fs = sc.rates.fast_hz;
    b.slope1 = std::abs(discriminator_slope(sc.pdh, sc.cavity));
    b.slope2 = std::abs(sas_slope(sc.sas));
    b.dcav = discretize(sc.cavity.discrimination_pole(), fs);
    b.act_fast = discretize(sc.fast_actuator, fs);
    b.pzt = discretize(sc.cavity.pzt_response(), fs);
    b.act_slow = discretize(sc.slow_actuator, fs);
    b.lockin = discretize(TransferFunction::low_pass(sc.sas.lockin_bandwidth_hz), fs);
    b.delay_samples =
        static_cast<std::size_t>(std::max<long>(1, std::lround(sc.loop_delay_s * fs)));
    b.ratio = static_cast<std::size_t>(std::llround(sc.rates.fast_hz / sc.rates.slow_hz));
    return b;
}

}  // namespace

SimResult simulate(const Scenario& sc) {
    sc.validate();
    const double fs = sc.rates.fast_hz;
    const std::size_t n = static_cast<std::size_t>(std::llround(sc.duration_s * fs));
    if (n < 16) throw ConfigError("duration too short for the fast rate");

    const bool inner_on = sc.lock_config == LockConfig::lc_only ||
                          sc.lock_config == LockConfig::cascade;
    const bool outer_on = sc.lock_config == LockConfig::cascade;
    const bool sas_on = sc.lock_config == LockConfig::sas_only;

    const PsdModel& laser_model =
        sc.lock_config == LockConfig::ule_reference ? sc.ule_noise : sc.laser_noise;
    const TimeSeries laser_free = synthesize(laser_model, fs, n, sub_seed(sc.seed, 1));
    const TimeSeries cavity_free = synthesize(sc.cavity.noise, fs, n, sub_seed(sc.seed, 2));
    const TimeSeries det_noise = synthesize(sc.pdh.detector_noise, fs, n, sub_seed(sc.seed, 3));

    LoopBlocks blocks = build_blocks(sc);
    PidSim pid1(sc.loose_inner ? sc.pid_loose : sc.pid1, fs);
    PidSim pid2(sc.pid2, sc.rates.slow_hz);
    std::optional<PidSim> pid_aux;
    DigitalFilter aux_act;
    if (sc.aux && inner_on) {
        pid_aux.emplace(sc.aux->pid, fs);
        aux_act = discretize(sc.aux->actuator, fs);
    }

    std::vector<double> delay_line(blocks.delay_samples, 0.0);
    std::size_t delay_pos = 0;

    SimResult out;
    auto prep = [&](TimeSeries& ts, Unit u) {
        ts.sample_rate = fs;
        ts.unit = u;
        ts.samples.resize(n);
    };
    prep(out.absolute_freq_noise, Unit::hz_deviation);
    prep(out.relative_freq_noise, Unit::hz_deviation);
    prep(out.cavity_mode_noise, Unit::hz_deviation);
    prep(out.fast_actuator_drive, Unit::volts);
    prep(out.slow_actuator_drive, Unit::volts);
    out.settle_s = sc.settle_s;

    // divergence guards (spec: residual beyond 10x the open-loop RMS)
    double open_rel_rms = 0.0, open_abs_rms = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double rel = laser_free.samples[i] - cavity_free.samples[i];
        open_rel_rms += rel * rel;
        open_abs_rms += laser_free.samples[i] * laser_free.samples[i];
    }
    open_rel_rms = std::sqrt(open_rel_rms / static_cast<double>(n));
    open_abs_rms = std::sqrt(open_abs_rms / static_cast<double>(n));
    const std::size_t check_every = 1 << 16;

    const std::size_t enable_at =
        static_cast<std::size_t>(std::llround(sc.outer_enable_delay_s * fs));
    double u1 = 0.0, u2_held = 0.0, aux_u = 0.0;
    double chunk_rel = 0.0, chunk_abs = 0.0;

    for (std::size_t i = 0; i < n; ++i) {
        // corrections computed from strictly older controller outputs
        double corr_fast = 0.0;
        if (inner_on) {
            const double delayed = delay_line[delay_pos];
            corr_fast = blocks.act_fast.step(delayed);
        }
        double corr_aux = pid_aux ? aux_act.step(aux_u) : 0.0;

        // |slope| in the error path + fixed negative drive = the polarity a
        // locked servo runs at, whatever sign the demod phase gives the curve
        double pzt_shift = 0.0;
        if (outer_on) pzt_shift = blocks.pzt.step(-u2_held);
        double sas_corr = 0.0;
        if (sas_on) sas_corr = blocks.act_slow.step(-u2_held);

        const double cavity_mode = cavity_free.samples[i] + pzt_shift;
        const double laser = laser_free.samples[i] - (corr_fast + corr_aux) + sas_corr;
        const double rel = laser - cavity_mode;

        if (inner_on) {
            const double ev = blocks.slope1 * blocks.dcav.step(rel) + det_noise.samples[i];
            u1 = pid1.step(ev);
            delay_line[delay_pos] = u1;
            delay_pos = (delay_pos + 1) % blocks.delay_samples;
            if (pid_aux) aux_u = pid_aux->step(ev);
        }
        if (outer_on || sas_on) {
            const double lk = blocks.lockin.step(laser);
            if (i % blocks.ratio == 0 && i >= enable_at)
                u2_held = pid2.step(blocks.slope2 * lk);
        }

        out.absolute_freq_noise.samples[i] = laser;
        out.relative_freq_noise.samples[i] = rel;
        out.cavity_mode_noise.samples[i] = cavity_mode;
        out.fast_actuator_drive.samples[i] = u1;
        out.slow_actuator_drive.samples[i] = u2_held;

        chunk_rel += rel * rel;
        chunk_abs += laser * laser;
        if ((i + 1) % check_every == 0) {
            const double denom = static_cast<double>(check_every);
            const double rel_rms = std::sqrt(chunk_rel / denom);
            const double abs_rms = std::sqrt(chunk_abs / denom);
            chunk_rel = chunk_abs = 0.0;
            if (inner_on && open_rel_rms > 0.0 &&
                (!std::isfinite(rel_rms) || rel_rms > 10.0 * open_rel_rms))
                throw LoopInstabilityError("inner",
                                           "inner loop diverged: relative RMS " +
                                               std::to_string(rel_rms) + " Hz");
            if ((outer_on || sas_on) && open_abs_rms > 0.0 &&
                (!std::isfinite(abs_rms) || abs_rms > 10.0 * open_abs_rms))
                throw LoopInstabilityError("outer",
                                           "outer loop diverged: absolute RMS " +
                                               std::to_string(abs_rms) + " Hz");
        }
    }

    out.saturation_events = pid1.saturation_events() + pid2.saturation_events() +
                            (pid_aux ? pid_aux->saturation_events() : 0);
    return out;
}

double analytic_residual_psd(const Scenario& sc, double f_hz) {
    if (!(f_hz > 0.0)) throw std::domain_error("analytic_residual_psd: f must be > 0");
    const double fs = sc.rates.fast_hz;
    const double fss = sc.rates.slow_hz;
    const std::complex<double> j(0.0, 1.0);

    const double s_laser = (sc.lock_config == LockConfig::ule_reference ? sc.ule_noise
                                                                        : sc.laser_noise)
                               .eval_at(f_hz)
                               .density;
    if (sc.lock_config == LockConfig::free_run || sc.lock_config == LockConfig::ule_reference)
        return s_laser;

    LoopBlocks blocks = build_blocks(sc);
    const double s_cavity = sc.cavity.noise.eval_at(f_hz).density;
    const double s_det = sc.pdh.detector_noise.eval_at(f_hz).density;

    // exact discrete responses of the very blocks the simulator steps
    auto pid_resp = [&](const PidConfig& cfg, double rate) {
        return PidSim(cfg, rate).response(f_hz);
    };
    const auto dcav = blocks.dcav.response(f_hz);
    const std::complex<double> delay =
        std::exp(-j * kTwoPi * f_hz * static_cast<double>(blocks.delay_samples) / fs);

    // zero-order hold of the slow-rate output, Dirichlet form
    const double r = static_cast<double>(blocks.ratio);
    const double x = f_hz / fs;
    std::complex<double> zoh(1.0, 0.0);
    if (x > 0.0 && std::abs(std::sin(kTwoPi * x / 2.0)) > 1e-300) {
        zoh = std::exp(-j * (kTwoPi * x * (r - 1.0) / 2.0)) *
              (std::sin(kTwoPi * x * r / 2.0) / (r * std::sin(kTwoPi * x / 2.0)));
    }

    std::complex<double> g_outer_path = blocks.slope2 * blocks.lockin.response(f_hz) *
                                        pid_resp(sc.pid2, fss) * zoh;

    if (sc.lock_config == LockConfig::sas_only) {
        const auto g = g_outer_path * blocks.act_slow.response(f_hz);
        const auto denom = 1.0 + g;
        if (std::abs(denom) == 0.0) throw SingularPointError("1 + G vanished");
        return s_laser / std::norm(denom);
    }

    // inner loop (lc_only, cascade); one extra sample of transport around the
    // loop: corrections are applied from strictly older controller outputs
    const auto c1 = pid_resp(sc.loose_inner ? sc.pid_loose : sc.pid1, fs);
    const auto g1 = blocks.slope1 * c1 * blocks.act_fast.response(f_hz) * dcav * delay;
    auto denom1 = 1.0 + g1;
    if (std::abs(denom1) == 0.0) throw SingularPointError("1 + G1 vanished");
    const auto s1 = 1.0 / denom1;
    const auto t1 = g1 / denom1;
    const auto det_gain = t1 / (dcav * blocks.slope1);

    std::complex<double> denom2(1.0, 0.0);
    if (sc.lock_config == LockConfig::cascade) {
        const auto g2 = t1 * g_outer_path * blocks.pzt.response(f_hz);
        denom2 = 1.0 + g2;
        if (std::abs(denom2) == 0.0) throw SingularPointError("1 + G2 vanished");
    }
    const double num = std::norm(s1) * s_laser + std::norm(t1) * s_cavity +
                       std::norm(det_gain) * s_det;
    return num / std::norm(denom2);
}

std::map<LockConfig, SimResult> run_comparison(const std::vector<Scenario>& scenarios) {
    if (scenarios.empty()) throw std::invalid_argument("run_comparison: no scenarios");
    const auto& ref = scenarios.front();
    for (const auto& sc : scenarios) {
        if (sc.seed != ref.seed || !(sc.laser_noise == ref.laser_noise) ||
            !(sc.cavity.noise == ref.cavity.noise) || !(sc.ule_noise == ref.ule_noise))
            throw ConfigError("run_comparison: scenarios must share seed and noise models");
    }
    std::map<LockConfig, SimResult> out;
    for (const auto& sc : scenarios) out[sc.lock_config] = simulate(sc);
    return out;
}

SpectrumSeries residual_psd(const TimeSeries& series, double settle_s,
                            std::size_t segment_len) {
    // locked-loop residuals ride on steep low-frequency drift; linear
    // detrending plus denser overlap keeps the low bins leakage-free
    return welch_psd(series.tail_from(settle_s), segment_len, 0.75, Detrend::linear);
}

BeatAnalysis analyze_beat(const SimResult& result, const BeatOptions& opt) {
    const auto trimmed = result.absolute_freq_noise.tail_from(result.settle_s);
    const double ratio = trimmed.sample_rate / opt.rate_hz;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0)
        throw std::invalid_argument("analyze_beat: beat rate must divide the fast rate");
    const auto beat_in = decimate(trimmed, static_cast<std::size_t>(std::llround(ratio)));

    BeatAnalysis out;
    out.spectrum = beat_spectrum(beat_in, nullptr, opt.rbw_hz);

    // half-maximum width of a boxcar-smoothed copy sizes the fit span; the
    // configured window acts as a floor so narrow lines keep a pinned span
    // while lines much wider than it still get fitted across their core
    double est_width;
    {
        const auto& v = out.spectrum.values;
        const std::size_t box = std::max<std::size_t>(1, v.size() / 1024);
        std::vector<double> smooth(v.size(), 0.0);
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            acc += v[i];
            if (i >= box) acc -= v[i - box];
            smooth[i] = acc / static_cast<double>(std::min(i + 1, box));
        }
        const auto peak_it = std::max_element(smooth.begin(), smooth.end());
        const double half = 0.5 * *peak_it;
        double lo = 0.0, hi = 0.0;
        for (std::size_t i = 0; i < smooth.size(); ++i) {
            if (smooth[i] >= half) {
                lo = std::min(lo, out.spectrum.frequencies[i]);
                hi = std::max(hi, out.spectrum.frequencies[i]);
            }
        }
        est_width = std::max(hi - lo, 10.0 * opt.rbw_hz);
    }
    const double window = opt.fit_window_hz > 0.0
                              ? std::max(opt.fit_window_hz, 2.5 * est_width)
                              : std::max(3.0 * est_width, 100.0 * opt.rbw_hz);
    out.gaussian = fit_lineshape(out.spectrum, LineModel::gaussian, window);
    out.lorentzian = fit_lineshape(out.spectrum, LineModel::lorentzian, window);
    return out;
}

}  // namespace lockloop
