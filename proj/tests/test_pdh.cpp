#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lockloop/calibrate.hpp"
#include "lockloop/pdh.hpp"
#include "test_support.hpp"

using namespace lockloop;

namespace {
CavityModel lc_cavity() {
    CavityModel c;
    c.linewidth_hz = 1e6;
    c.finesse = 1500.0;
    c.fsr_hz = 1.5e9;
    c.noise.segments = {{10.0, 1e5, -1.0, 1e8, 10.0}};
    return c;
}

PdhConfig pdh_cfg() {
    PdhConfig p;
    p.mod_freq_hz = 7e6;
    p.carrier_power = 0.83;
    p.sideband_power = 0.084;
    return p;
}
}  // namespace

TEST_CASE("cavity model validation") {
    auto c = lc_cavity();
    CHECK_NOTHROW(c.validate());
    c.fsr_hz = 1.4e9;  // finesse * linewidth mismatch
    CHECK_THROWS(c.validate());

    auto c2 = lc_cavity();
    c2.noise.segments[0].exponent = 1.0;  // low f must be a falling power law
    CHECK_THROWS(c2.validate());
}

TEST_CASE("error curve is zero on resonance and odd in detuning") {
    const auto cav = lc_cavity();
    const auto cfg = pdh_cfg();
    const double peak = std::abs(pdh_error_curve(cfg, cav, cav.linewidth_hz / 2.0));
    REQUIRE(peak > 0.0);
    CHECK(std::abs(pdh_error_curve(cfg, cav, 0.0)) < 1e-9 * peak);
    for (double d : {1e3, 2e5, 5e5, 3e6, 6.9e6})
        CHECK(std::abs(pdh_error_curve(cfg, cav, d) + pdh_error_curve(cfg, cav, -d)) <
              1e-9 * peak);
}

TEST_CASE("error curve crosses zero at the sideband resonances near +-mod_freq") {
    const auto cav = lc_cavity();
    const auto cfg = pdh_cfg();
    // brute force on the reflection formula: the sideband crossing sits a few
    // 10 kHz off +-7 MHz (finite-FSR phase of the carrier term), well within
    // 2% of the modulation frequency
    const double w = 0.02 * cfg.mod_freq_hz;
    const double lo = pdh_error_curve(cfg, cav, cfg.mod_freq_hz - w);
    const double hi = pdh_error_curve(cfg, cav, cfg.mod_freq_hz + w);
    CHECK(lo * hi < 0.0);
    const double lo2 = pdh_error_curve(cfg, cav, -cfg.mod_freq_hz - w);
    const double hi2 = pdh_error_curve(cfg, cav, -cfg.mod_freq_hz + w);
    CHECK(lo2 * hi2 < 0.0);
}

TEST_CASE("demod phase shift by pi negates the curve") {
    const auto cav = lc_cavity();
    auto cfg = pdh_cfg();
    auto flipped = cfg;
    flipped.demod_phase_rad += 3.14159265358979323846;
    for (double d : {-2e6, -3e5, 1e4, 4e5, 6e6})
        CHECK(pdh_error_curve(flipped, cav, d) ==
              doctest::Approx(-pdh_error_curve(cfg, cav, d)).epsilon(1e-12));
}

TEST_CASE("detuning beyond half an FSR refuses to alias") {
    CHECK_THROWS_AS(pdh_error_curve(pdh_cfg(), lc_cavity(), 0.76e9), std::domain_error);
}

TEST_CASE("discriminator slope") {
    const auto cav = lc_cavity();
    auto cfg = pdh_cfg();

    auto with_override = cfg;
    with_override.slope_override_v_per_hz = 1e-6;
    CHECK(discriminator_slope(with_override, cav) == 1e-6);

    auto no_carrier = cfg;
    no_carrier.carrier_power = 0.0;
    CHECK_THROWS_AS(discriminator_slope(no_carrier, cav), std::invalid_argument);

    // halving the cavity linewidth doubles the central slope
    const double s1 = discriminator_slope(cfg, cav);
    CavityModel narrow = cav;
    narrow.linewidth_hz = 5e5;
    narrow.finesse = 3000.0;
    const double s2 = discriminator_slope(cfg, narrow);
    CHECK(s2 / s1 == doctest::Approx(2.0).epsilon(0.01));

    auto flipped = cfg;
    flipped.demod_phase_rad += 3.14159265358979323846;
    CHECK(discriminator_slope(flipped, cav) == doctest::Approx(-s1).epsilon(1e-9));
}

TEST_CASE("slope agrees with an independent finite difference to 0.1%") {
    const auto cav = lc_cavity();
    const auto cfg = pdh_cfg();
    const double h = 50.0;  // Hz, deep inside the linear range
    const double fd = (pdh_error_curve(cfg, cav, h) - pdh_error_curve(cfg, cav, -h)) / (2.0 * h);
    CHECK(discriminator_slope(cfg, cav) == doctest::Approx(fd).epsilon(1e-3));
}

TEST_CASE("linearized slope matches the static curve within 1% below linewidth/20") {
    const auto cav = lc_cavity();
    const auto cfg = pdh_cfg();
    const double slope = discriminator_slope(cfg, cav);
    for (double d = -cav.linewidth_hz / 20.0; d <= cav.linewidth_hz / 20.0;
         d += cav.linewidth_hz / 100.0) {
        if (std::abs(d) < 1.0) continue;
        CHECK(pdh_error_curve(cfg, cav, d) == doctest::Approx(slope * d).epsilon(0.01));
    }
}

TEST_CASE("default inner loop: unity gain above 1 MHz and 60 dB at 100 Hz") {
    const auto full = default_config_template();
    const auto loop = full.scenario.inner_open_loop();
    const double fu = unity_gain_frequency(loop, 1e4, 1e7);
    CHECK(fu > 1e6);
    CHECK(20.0 * std::log10(std::abs(loop.eval(100.0))) > 60.0);

    // doubling the slope doubles the magnitude, phase untouched
    auto pdh_double = full.scenario.pdh;
    pdh_double.slope_override_v_per_hz =
        2.0 * discriminator_slope(full.scenario.pdh, full.scenario.cavity);
    const auto loop2 = inner_loop_open_tf(pdh_double, full.scenario.cavity, full.scenario.pid1,
                                          full.scenario.fast_actuator, 5e-8);
    for (double f : {1e3, 1e5, 2e6}) {
        CHECK(bode(loop2, f).magnitude == doctest::Approx(2.0 * bode(loop, f).magnitude));
        CHECK(bode(loop2, f).phase_rad == doctest::Approx(bode(loop, f).phase_rad));
    }
}

TEST_CASE("default loop keeps more than 45 degrees of phase margin") {
    const auto full = default_config_template();
    const auto loop = full.scenario.inner_open_loop();
    const double fu = unity_gain_frequency(loop, 1e4, 1e7);
    const auto bp = bode(loop, fu);
    CHECK(180.0 + bp.phase_rad * 180.0 / 3.14159265358979323846 > 45.0);
}

TEST_CASE("loose lock is transparent above 2 kHz") {
    // a 1 kHz-limited loop must hand the free-running relative noise through
    // within 1 dB above 2 kHz
    auto full = default_config_template();
    Scenario loose = full.scenario;
    loose.loose_inner = true;
    const auto loop = loose.inner_open_loop();
    for (double f = 2e3; f <= 1e6; f *= 2.0) {
        const double s = closed_loop_suppression(loop, f);
        CHECK(std::abs(20.0 * std::log10(s)) < 1.0);
    }
}

TEST_CASE("modulation frequency must exceed twice the cavity linewidth") {
    const auto cav = lc_cavity();
    auto cfg = pdh_cfg();
    cfg.mod_freq_hz = 1.5e6;
    CHECK_THROWS(cfg.validate(cav));
    cfg.mod_freq_hz = 7e6;
    CHECK_NOTHROW(cfg.validate(cav));
}

TEST_CASE("monitor port spectra") {
    const auto full = default_config_template();
    const auto& sc = full.scenario;
    MonitorInputs in;
    in.relative_free_noise = compose({sc.laser_noise, sc.cavity.noise});
    in.tight_open_loop = sc.inner_open_loop();
    Scenario loose = sc;
    loose.loose_inner = true;
    in.loose_open_loop = loose.inner_open_loop();

    const auto amp = pd_monitor_psd(sc.pdh, sc.cavity, MonitorState::amp_noise_only, in);
    for (std::size_t i = 0; i < amp.frequencies.size(); ++i)
        CHECK(amp.values[i] == sc.pdh.detector_noise.eval_at(amp.frequencies[i]).density);

    const auto tight = pd_monitor_psd(sc.pdh, sc.cavity, MonitorState::tight_lock, in);
    const auto loose_psd = pd_monitor_psd(sc.pdh, sc.cavity, MonitorState::loose_lock, in);
    CHECK(testing::db(loose_psd.value_at(1e3) / tight.value_at(1e3)) >= 60.0);

    // far above the unity-gain frequency both locks show the same spectrum
    CHECK(std::abs(testing::db(tight.value_at(4.9e6) / loose_psd.value_at(4.9e6))) < 3.0);
}
