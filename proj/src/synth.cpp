#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "lockloop/fft.hpp"
#include "lockloop/psd.hpp"

namespace lockloop {

namespace {

constexpr double kPi = 3.14159265358979323846;

using PsdFn = std::function<double(double)>;

// One shaped block: X[k] ~ CN(0, S(f_k) fs n / 2), Hermitian, x = irfft(X).
std::vector<double> shaped_block(const PsdFn& psd, double fs, std::size_t n,
                                 std::uint64_t seed) {
    detail::GaussianDraw gauss(seed);
    const double df = fs / static_cast<double>(n);
    std::vector<std::complex<double>> spec(n / 2 + 1, {0.0, 0.0});
    const double half = 0.5 * fs * static_cast<double>(n);
    for (std::size_t k = 1; k < (n + 1) / 2; ++k) {
        const double target = psd(static_cast<double>(k) * df) * half;
        const double g1 = gauss();
        const double g2 = gauss();
        const double amp = std::sqrt(0.5 * target);
        spec[k] = {amp * g1, amp * g2};
    }
    if (n % 2 == 0) {
        const double target = psd(0.5 * fs) * half;
        spec[n / 2] = {std::sqrt(target) * gauss(), 0.0};
    }
    return fft::irfft(spec, n);
}

TimeSeries synthesize_impl(const PsdFn& psd, bool zero_model, double sample_rate,
                           std::size_t n, std::uint64_t seed, const SynthOptions& opt) {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("synthesize: sample_rate must be > 0");
    if (n < 2) throw std::invalid_argument("synthesize: n must be >= 2");
    if (zero_model) return TimeSeries(sample_rate, Unit::hz_deviation, std::vector<double>(n, 0.0));

    const std::size_t block = std::max<std::size_t>(16, opt.block_len) & ~std::size_t{1};
    if (n <= block) {
        std::uint64_t s = seed;
        return TimeSeries(sample_rate, Unit::hz_deviation,
                          shaped_block(psd, sample_rate, n, detail::splitmix64(s)));
    }

    // sqrt-Hann overlap-add at 50% hop: w^2 sums to 1 exactly, so independent
    // blocks keep the target density. One leading block covers the ramp-in.
    const std::size_t hop = block / 2;
    std::vector<double> window(block);
    for (std::size_t i = 0; i < block; ++i)
        window[i] = std::sin(kPi * static_cast<double>(i) / static_cast<double>(block));

    std::vector<double> out(n, 0.0);
    const std::size_t n_blocks = (n + hop - 1) / hop + 1;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        std::uint64_t s = seed + 0x9E3779B97F4A7C15ULL * (b + 1);
        const auto piece = shaped_block(psd, sample_rate, block, detail::splitmix64(s));
        const std::ptrdiff_t start =
            static_cast<std::ptrdiff_t>(b * hop) - static_cast<std::ptrdiff_t>(hop);
        const std::size_t i0 = start < 0 ? static_cast<std::size_t>(-start) : 0;
        for (std::size_t i = i0; i < block; ++i) {
            const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
            if (idx >= static_cast<std::ptrdiff_t>(n)) break;
            out[static_cast<std::size_t>(idx)] += window[i] * piece[i];
        }
    }
    return TimeSeries(sample_rate, Unit::hz_deviation, std::move(out));
}

}  // namespace

TimeSeries synthesize(const PsdModel& model, double sample_rate, std::size_t n,
                      std::uint64_t seed, const SynthOptions& opt) {
    // Gaps evaluate to floor only; the "undefined" flag is not an error here.
    auto psd = [&model](double f) { return model.eval_at(f).density; };
    return synthesize_impl(psd, model.is_zero(), sample_rate, n, seed, opt);
}

TimeSeries synthesize_tabulated(std::span<const double> freq_hz, std::span<const double> psd,
                                double sample_rate, std::size_t n, std::uint64_t seed,
                                const SynthOptions& opt) {
    if (freq_hz.size() != psd.size() || freq_hz.size() < 2)
        throw std::invalid_argument("synthesize_tabulated: need matching grids, >= 2 points");
    auto eval = [freq_hz, psd](double f) {
        if (f <= freq_hz.front()) return psd.front();
        if (f >= freq_hz.back()) return psd.back();
        auto it = std::upper_bound(freq_hz.begin(), freq_hz.end(), f);
        const std::size_t hi = static_cast<std::size_t>(it - freq_hz.begin());
        const std::size_t lo = hi - 1;
        const double pl = psd[lo] > 0 ? psd[lo] : 1e-300;
        const double ph = psd[hi] > 0 ? psd[hi] : 1e-300;
        const double t = std::log(f / freq_hz[lo]) / std::log(freq_hz[hi] / freq_hz[lo]);
        return std::exp(std::log(pl) + t * (std::log(ph) - std::log(pl)));
    };
    return synthesize_impl(eval, false, sample_rate, n, seed, opt);
}

}  // namespace lockloop
