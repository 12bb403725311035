#include "lockloop/timeseries.hpp"

#include <cmath>

namespace lockloop {

std::string to_string(Unit u) {
    switch (u) {
        case Unit::hz_deviation: return "hz_deviation";
        case Unit::volts: return "volts";
        case Unit::transmission: return "transmission";
        case Unit::radians: return "radians";
    }
    return "unknown";
}

double TimeSeries::mean() const {
    double s = 0.0;
    for (double v : samples) s += v;
    return s / static_cast<double>(samples.size());
}

double TimeSeries::variance() const {
    const double m = mean();
    double s = 0.0;
    for (double v : samples) s += (v - m) * (v - m);
    return s / static_cast<double>(samples.size());
}

double TimeSeries::rms() const {
    double s = 0.0;
    for (double v : samples) s += v * v;
    return std::sqrt(s / static_cast<double>(samples.size()));
}

TimeSeries TimeSeries::tail_from(double t_start) const {
    auto first = static_cast<std::size_t>(std::llround(t_start * sample_rate));
    if (first >= samples.size())
        throw std::invalid_argument("tail_from: start beyond series end");
    return TimeSeries(sample_rate, unit,
                      std::vector<double>(samples.begin() + static_cast<std::ptrdiff_t>(first),
                                          samples.end()));
}

TimeSeries decimate(const TimeSeries& x, std::size_t factor) {
    if (factor == 0) throw std::invalid_argument("decimate: factor must be >= 1");
    if (factor == 1) return x;
    const std::size_t n_out = x.samples.size() / factor;
    if (n_out == 0) throw std::invalid_argument("decimate: series shorter than one block");
    std::vector<double> out(n_out);
    for (std::size_t i = 0; i < n_out; ++i) {
        double acc = 0.0;
        const std::size_t base = i * factor;
        for (std::size_t k = 0; k < factor; ++k) acc += x.samples[base + k];
        out[i] = acc / static_cast<double>(factor);
    }
    return TimeSeries(x.sample_rate / static_cast<double>(factor), x.unit, std::move(out));
}

}  // namespace lockloop
