#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace lockloop {

enum class Unit { hz_deviation, volts, transmission, radians };

std::string to_string(Unit u);

// Uniformly sampled real signal. sample_rate in Hz, unit tag carried along.
struct TimeSeries {
    double sample_rate = 0.0;
    Unit unit = Unit::hz_deviation;
    std::vector<double> samples;

    TimeSeries() = default;
    TimeSeries(double fs, Unit u, std::vector<double> data)
        : sample_rate(fs), unit(u), samples(std::move(data)) {
        if (sample_rate <= 0.0) throw std::invalid_argument("TimeSeries: sample_rate must be > 0");
        if (samples.empty()) throw std::invalid_argument("TimeSeries: need at least one sample");
    }

    std::size_t size() const { return samples.size(); }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }

    double mean() const;
    double variance() const;  // about the mean
    double rms() const;       // about zero

    // Samples from t >= t_start (used to drop servo settle transients).
    TimeSeries tail_from(double t_start) const;
};

// Boxcar-average decimation by an integer factor. Trailing partial block is dropped.
TimeSeries decimate(const TimeSeries& x, std::size_t factor);

}  // namespace lockloop
