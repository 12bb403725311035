#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "lockloop/calibrate.hpp"
#include "lockloop/eit.hpp"
#include "lockloop/fft.hpp"

using namespace lockloop;

namespace {
constexpr double kPi = 3.14159265358979323846;

EitModel eit_model() {
    EitModel m = default_config_template().eit;
    m.intensity_noise_floor = PsdModel::white(1e-12);
    return m;
}
}  // namespace

TEST_CASE("two-level limit: plain absorption dip at zero probe detuning") {
    auto m = eit_model();
    m.coupling_rabi_hz = 0.0;
    const double t0 = eit_transmission(m, 0.0, 0.0);
    for (double d : {0.5e6, 2e6, 8e6, -3e6}) CHECK(eit_transmission(m, d, 0.0) > t0);
    CHECK(eit_transmission(m, 50e6, 0.0) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("EIT peak at two-photon resonance") {
    const auto m = eit_model();
    const double peak = eit_transmission(m, 0.0, 0.0);
    auto two_level = m;
    two_level.coupling_rabi_hz = 0.0;
    CHECK(peak > eit_transmission(two_level, 0.0, 0.0));  // transparency window opened
    CHECK(peak > eit_transmission(m, 4e6, 0.0));          // local maximum vs probe
    CHECK(peak > eit_transmission(m, -4e6, 0.0));
    for (double t = 0.1e6; t < 20e6; t *= 2.0) {
        CHECK(eit_transmission(m, t, 0.0) > 0.0);
        CHECK(eit_transmission(m, t, 0.0) <= 1.0);
    }
}

TEST_CASE("transmission symmetric under coupling-detuning sign flip") {
    const auto m = eit_model();
    for (double dc : {0.5e6, 2.4e6, 6e6})
        CHECK(eit_transmission(m, 0.0, dc) ==
              doctest::Approx(eit_transmission(m, 0.0, -dc)).epsilon(1e-12));
}

TEST_CASE("Doppler averaging stays normalized and smooth") {
    auto m = eit_model();
    m.doppler_sigma_hz = 20e6;
    const double t = eit_transmission(m, 0.0, 0.0);
    CHECK(t > 0.0);
    CHECK(t <= 1.0);
}

TEST_CASE("slope vanishes on resonance and is finite on the shoulder") {
    const auto m = eit_model();
    CHECK(std::abs(transmission_slope(m, OperatingPoint::resonant_point())) < 1e-12);

    const double s = transmission_slope(m, OperatingPoint::detuned_point(2.4e6));
    CHECK(std::abs(s) > 1e-9);

    // antisymmetric in the coupling detuning
    const double s_minus = transmission_slope(m, OperatingPoint::detuned_point(-2.4e6));
    CHECK(s == doctest::Approx(-s_minus).epsilon(0.01));

    CHECK_THROWS_AS(transmission_slope(m, OperatingPoint::resonant_point(), 1e-9),
                    std::invalid_argument);
}

TEST_CASE("simulate_readout: constant input, dither response, clipping") {
    const auto m = eit_model();
    const auto op = OperatingPoint::detuned_point(2.4e6);

    TimeSeries quiet(1e6, Unit::hz_deviation, std::vector<double>(256, 0.0));
    const auto flat = simulate_readout(quiet, m, op);
    for (double v : flat.transmission.samples)
        CHECK(v == doctest::Approx(eit_transmission(m, 0.0, 2.4e6)));
    CHECK(flat.clipped_samples == 0);

    // small sinusoidal dither maps through the local slope
    const double fs = 1e6, f0 = 10e3, amp = 2e3;
    std::vector<double> dither(1 << 14);
    for (std::size_t i = 0; i < dither.size(); ++i)
        dither[i] = amp * std::sin(2.0 * kPi * f0 * static_cast<double>(i) / fs);
    const auto out = simulate_readout(TimeSeries(fs, Unit::hz_deviation, dither), m, op);
    double re = 0.0;
    for (std::size_t i = 0; i < dither.size(); ++i)
        re += (out.transmission.samples[i]) * std::sin(2.0 * kPi * f0 * i / fs);
    const double measured_amp = 2.0 * re / dither.size();
    const double slope = transmission_slope(m, op);
    CHECK(measured_amp == doctest::Approx(slope * amp).epsilon(0.02));

    // clipping kicks in beyond 10x gamma_e
    TimeSeries wild(1e6, Unit::hz_deviation, std::vector<double>(64, 100.0 * m.gamma_e_hz));
    CHECK(simulate_readout(wild, m, OperatingPoint::resonant_point()).clipped_samples == 64);
}

TEST_CASE("resonant dither answers at the second harmonic") {
    const auto m = eit_model();
    const double fs = 1e6, f0 = 12.5e3, amp = 50e3;
    const std::size_t n = 1 << 14;
    std::vector<double> dither(n);
    for (std::size_t i = 0; i < n; ++i)
        dither[i] = amp * std::sin(2.0 * kPi * f0 * static_cast<double>(i) / fs);
    const auto out =
        simulate_readout(TimeSeries(fs, Unit::hz_deviation, dither), m,
                         OperatingPoint::resonant_point());
    auto spec = fft::rfft(out.transmission.samples);
    const auto bin = [&](double f) {
        return std::norm(spec[static_cast<std::size_t>(std::llround(f * n / fs))]);
    };
    CHECK(bin(2.0 * f0) > 100.0 * bin(f0));
}

TEST_CASE("readout PSD: linear at the shoulder, floor-dominated on resonance") {
    const auto m = eit_model();
    ReadoutBand band{10e3, 100e3, 31};

    PsdModel laser = PsdModel::white(1e3);
    laser.segments = {{1.0, 5e5, -1.0, 1e7, 1.0}};

    const auto det = readout_noise_psd(laser, m, OperatingPoint::detuned_point(2.4e6), band);
    PsdModel twice = laser;
    twice.floor *= 2.0;
    twice.segments[0].amplitude_ref *= 2.0;
    const auto det2 = readout_noise_psd(twice, m, OperatingPoint::detuned_point(2.4e6), band);
    for (std::size_t i = 0; i < det.values.size(); ++i) {
        const double above1 = std::pow(10.0, det.values[i] / 10.0) - 1.0;
        const double above2 = std::pow(10.0, det2.values[i] / 10.0) - 1.0;
        CHECK(above2 / above1 == doctest::Approx(2.0).epsilon(0.02));
    }

    // band-coverage precondition
    PsdModel narrow;
    narrow.segments = {{1.0, 2e4, -1.0, 1e7, 1.0}};
    CHECK_THROWS_AS(readout_noise_psd(narrow, m, OperatingPoint::detuned_point(2.4e6), band),
                    std::invalid_argument);
}

TEST_CASE("resonant second-order scaling: 4x PSD gives ~16x above-floor readout") {
    auto m = eit_model();
    m.intensity_noise_floor = PsdModel::white(1e-16);  // deep floor, pure physics term
    ReadoutBand band{10e3, 100e3, 21};
    PsdModel base = PsdModel::white(20.0);  // sigma ~ 3 kHz at 1 MHz rate

    const auto r1 = readout_noise_psd(base, m, OperatingPoint::resonant_point(), band, 42);
    PsdModel four = PsdModel::white(80.0);
    const auto r4 = readout_noise_psd(four, m, OperatingPoint::resonant_point(), band, 42);

    // compare band-integrated above-floor power
    double p1 = 0.0, p4 = 0.0;
    for (std::size_t i = 0; i < r1.values.size(); ++i) {
        p1 += std::pow(10.0, r1.values[i] / 10.0) - 1.0;
        p4 += std::pow(10.0, r4.values[i] / 10.0) - 1.0;
    }
    CHECK(p4 / p1 == doctest::Approx(16.0).epsilon(0.35));
}

TEST_CASE("fig3 comparison table has six curves and needs all three configs") {
    const auto m = eit_model();
    SpectrumSeries flat;
    flat.kind = SpectrumKind::psd;
    for (double f = 1e3; f <= 5e5; f *= 1.2) {
        flat.frequencies.push_back(f);
        flat.values.push_back(1e4);
    }
    std::map<std::string, SpectrumSeries> residuals{
        {"sas_only", flat}, {"cascade", flat}, {"ule_reference", flat}};
    const auto curves = run_fig3_comparison(residuals, m, ReadoutBand{10e3, 100e3, 11});
    CHECK(curves.size() == 6);
    CHECK(curves.count("sas_only_resonant") == 1);
    CHECK(curves.count("cascade_detuned") == 1);

    residuals.erase("cascade");
    CHECK_THROWS_AS(run_fig3_comparison(residuals, m, ReadoutBand{10e3, 100e3, 11}),
                    std::invalid_argument);
}
