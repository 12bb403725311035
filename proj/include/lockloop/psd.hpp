#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lockloop/timeseries.hpp"

namespace lockloop {

// One power-law piece of a one-sided PSD, S(f) = amplitude_ref * (f/f_ref)^exponent
// on [f_lo, f_hi). Units: Hz^2/Hz vs Fourier frequency in Hz.
struct PsdSegment {
    double f_lo = 0.0;
    double f_hi = 0.0;
    double exponent = 0.0;
    double amplitude_ref = 0.0;
    double f_ref = 1.0;

    bool covers(double f) const { return f >= f_lo && f < f_hi; }
    double eval(double f) const;
    void validate() const;
};

// Piecewise power-law one-sided PSD plus an optional white floor applied everywhere.
// Evaluation sums every segment covering f; gaps evaluate to the floor alone.
struct PsdModel {
    std::vector<PsdSegment> segments;
    double floor = 0.0;  // Hz^2/Hz, 0 means "no floor"

    struct Eval {
        double density = 0.0;
        bool defined = true;  // false when f falls in a gap and there is no floor
    };

    Eval eval_at(double f) const;          // throws std::domain_error for f <= 0
    double operator()(double f) const { return eval_at(f).density; }

    bool defined_at(double f) const { return eval_at(f).defined; }
    bool is_zero() const;

    // overlap check is skipped for composed models, see compose()
    void validate(bool require_disjoint_segments = true) const;

    bool operator==(const PsdModel&) const = default;

    static PsdModel white(double density);
};

bool operator==(const PsdSegment&, const PsdSegment&);

// Sum of models: psd_eval(compose(ms), f) == sum of psd_eval(m, f).
PsdModel compose(std::span<const PsdModel> models);
PsdModel compose(std::initializer_list<PsdModel> models);

struct SynthOptions {
    // Series longer than block_len are produced by sqrt-Hann overlap-add of
    // independently shaped blocks so FFT working memory stays bounded.
    std::size_t block_len = std::size_t{1} << 22;
};

// Frequency-domain shaping synthesis: complex Gaussian spectrum weighted by
// sqrt(S(f) * fs * n / 2), Hermitian-symmetrized, inverse transformed.
// Deterministic: identical (model, sample_rate, n, seed, options) gives
// byte-identical output, also under concurrent calls.
TimeSeries synthesize(const PsdModel& model, double sample_rate, std::size_t n,
                      std::uint64_t seed, const SynthOptions& opt = {});

// Same shaping driven by a tabulated spectrum (log-log interpolated, clamped
// to the table's edge values outside its range).
TimeSeries synthesize_tabulated(std::span<const double> freq_hz,
                                std::span<const double> psd, double sample_rate,
                                std::size_t n, std::uint64_t seed,
                                const SynthOptions& opt = {});

namespace detail {
std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic normal draws (explicit Box-Muller over mt19937_64) so output
// does not depend on the standard library's distribution implementation.
class GaussianDraw {
  public:
    explicit GaussianDraw(std::uint64_t seed);
    double operator()();

  private:
    std::uint64_t s_[4];
    double cached_ = 0.0;
    bool has_cached_ = false;
    double uniform();
};
}  // namespace detail

}  // namespace lockloop
