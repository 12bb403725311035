#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <future>
#include <vector>

#include "lockloop/psd.hpp"
#include "lockloop/spectral.hpp"

using namespace lockloop;

namespace {
PsdModel one_over_f_model(double amp_at_ref, double f_ref, double f_lo, double f_hi) {
    PsdModel m;
    m.segments.push_back({f_lo, f_hi, -1.0, amp_at_ref, f_ref});
    return m;
}
}  // namespace

TEST_CASE("power-law segment evaluation") {
    const auto m = one_over_f_model(1e4, 1.0, 0.5, 1e6);
    CHECK(m(100.0) == doctest::Approx(1e2).epsilon(1e-12));
    CHECK(m(1.0) == doctest::Approx(1e4).epsilon(1e-12));

    const auto flat = PsdModel::white(100.0);
    CHECK(flat(0.1) == doctest::Approx(100.0));
    CHECK(flat(1e7) == doctest::Approx(100.0));
}

TEST_CASE("psd_eval domain and coverage flags") {
    const auto m = one_over_f_model(1e4, 1.0, 1.0, 1e3);
    CHECK_THROWS_AS(m(0.0), std::domain_error);
    CHECK_THROWS_AS(m(-5.0), std::domain_error);

    const auto gap = m.eval_at(1e5);  // outside the only segment, no floor
    CHECK(gap.density == 0.0);
    CHECK_FALSE(gap.defined);
    CHECK(m.eval_at(500.0).defined);
}

TEST_CASE("segment and model validation") {
    PsdSegment bad{10.0, 5.0, -1.0, 1.0, 7.0};
    CHECK_THROWS(bad.validate());
    PsdSegment ref_out{1.0, 10.0, -1.0, 1.0, 100.0};  // f_ref outside range
    CHECK_THROWS(ref_out.validate());

    PsdModel overlapping;
    overlapping.segments = {{1.0, 100.0, 0.0, 1.0, 10.0}, {50.0, 200.0, 0.0, 1.0, 60.0}};
    CHECK_THROWS(overlapping.validate());
    CHECK_NOTHROW(overlapping.validate(false));
}

TEST_CASE("compose sums densities") {
    const auto a = one_over_f_model(1e4, 1.0, 0.5, 1e6);
    const auto b = PsdModel::white(100.0);

    const auto single = compose({a});
    for (double f : {1.0, 10.0, 1234.5}) CHECK(single(f) == doctest::Approx(a(f)));

    const auto both = compose({PsdModel::white(50.0), PsdModel::white(50.0)});
    CHECK(both(3.0) == doctest::Approx(100.0));

    // 1/f crosses a floor of 100 at f = 1e4/100 = 100 Hz: sum is twice the floor
    const auto mix = compose({a, b});
    CHECK(mix(100.0) == doctest::Approx(200.0).epsilon(1e-12));

    CHECK_THROWS_AS(compose(std::span<const PsdModel>{}), std::invalid_argument);
}

TEST_CASE("synthesize basics and determinism") {
    const PsdModel zero;
    const auto silent = synthesize(zero, 1e6, 4096, 7);
    for (double v : silent.samples) CHECK(v == 0.0);

    CHECK_THROWS_AS(synthesize(zero, 1e6, 1, 7), std::invalid_argument);

    const auto m = PsdModel::white(100.0);
    const auto a = synthesize(m, 1e6, 65536, 42);
    const auto b = synthesize(m, 1e6, 65536, 42);
    CHECK(a.samples == b.samples);

    const auto c = synthesize(m, 1e6, 65536, 43);
    double dot = 0.0, na = 0.0, nc = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        dot += a.samples[i] * c.samples[i];
        na += a.samples[i] * a.samples[i];
        nc += c.samples[i] * c.samples[i];
    }
    CHECK(std::abs(dot / std::sqrt(na * nc)) < 0.01);
}

TEST_CASE("white-noise variance matches h0 * fs / 2") {
    // Parseval: one-sided density h0 integrated to Nyquist
    const double h0 = 100.0, fs = 1e6;
    const auto x = synthesize(PsdModel::white(h0), fs, std::size_t{1} << 20, 11);
    CHECK(x.variance() == doctest::Approx(h0 * fs / 2.0).epsilon(0.05));
}

TEST_CASE("welch round trip within 1 dB mid-band") {
    PsdModel m = one_over_f_model(1e6, 10.0, 1.0, 4e5);
    m.floor = 10.0;
    const double fs = 1e6;
    const auto x = synthesize(m, fs, std::size_t{1} << 21, 5);
    const auto spec = welch_psd(x, 1 << 13);
    const auto smooth = band_average(spec, 10.0 * fs / (1 << 13), fs / 4.0, 12);
    for (std::size_t i = 0; i < smooth.frequencies.size(); ++i) {
        const double model_avg = m(smooth.frequencies[i]);
        const double err_db = 10.0 * std::log10(smooth.values[i] / model_avg);
        CAPTURE(smooth.frequencies[i]);
        CHECK(std::abs(err_db) < 1.0);
    }
}

TEST_CASE("overlap-add long-series path keeps density and variance") {
    const double h0 = 40.0, fs = 1e5;
    SynthOptions opt;
    opt.block_len = 1 << 14;
    const auto x = synthesize(PsdModel::white(h0), fs, std::size_t{1} << 18, 3, opt);
    CHECK(x.variance() == doctest::Approx(h0 * fs / 2.0).epsilon(0.05));

    const auto spec = welch_psd(x, 1 << 11);
    const auto smooth = band_average(spec, 10.0 * fs / (1 << 11), fs / 4.0, 6);
    for (std::size_t i = 0; i < smooth.frequencies.size(); ++i)
        CHECK(std::abs(10.0 * std::log10(smooth.values[i] / h0)) < 1.0);
}

TEST_CASE("linearity: composed synthesis has the summed target spectrum") {
    const auto a = one_over_f_model(1e5, 10.0, 1.0, 4e4);
    const auto b = PsdModel::white(30.0);
    const auto sum = compose({a, b});
    const double fs = 1e5;
    const auto x = synthesize(sum, fs, std::size_t{1} << 20, 9);
    const auto spec = welch_psd(x, 1 << 12);
    const auto smooth = band_average(spec, 10.0 * fs / (1 << 12), fs / 4.0, 6);
    for (std::size_t i = 0; i < smooth.frequencies.size(); ++i) {
        const double target = a.eval_at(smooth.frequencies[i]).density + b(smooth.frequencies[i]);
        CHECK(std::abs(10.0 * std::log10(smooth.values[i] / target)) < 1.0);
    }
}

TEST_CASE("parallel synthesis does not change any realization's bytes") {
    const auto m = compose({one_over_f_model(1e5, 10.0, 1.0, 4e4), PsdModel::white(5.0)});
    const auto serial = synthesize(m, 1e5, 1 << 15, 77);
    auto f1 = std::async(std::launch::async, [&] { return synthesize(m, 1e5, 1 << 15, 77); });
    auto f2 = std::async(std::launch::async, [&] { return synthesize(m, 1e5, 1 << 15, 78); });
    CHECK(f1.get().samples == serial.samples);
    CHECK(f2.get().samples != serial.samples);
}

TEST_CASE("tabulated synthesis follows the interpolated table") {
    std::vector<double> freq{1.0, 10.0, 100.0, 1e3, 1e4, 1e5};
    std::vector<double> psd{1e4, 1e3, 1e2, 10.0, 10.0, 10.0};  // 1/f then flat
    const double fs = 1e5;
    const auto x = synthesize_tabulated(freq, psd, fs, std::size_t{1} << 20, 21);
    const auto spec = welch_psd(x, 1 << 12);
    const auto smooth = band_average(spec, 10.0 * fs / (1 << 12), fs / 4.0, 6);
    for (std::size_t i = 0; i < smooth.frequencies.size(); ++i) {
        const double f = smooth.frequencies[i];
        const double target = f <= 1e3 ? 1e4 / f : 10.0;
        CHECK(std::abs(10.0 * std::log10(smooth.values[i] / target)) < 1.0);
    }
}
