#include "lockloop/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include "lockloop/errors.hpp"
#include "lockloop/fft.hpp"

namespace lockloop {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLn2 = 0.6931471805599453;

std::vector<double> hann(std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
    return w;
}

double median_of(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
}
}  // namespace

double SpectrumSeries::value_at(double f) const {
    if (frequencies.empty()) throw std::invalid_argument("value_at: empty spectrum");
    if (f <= frequencies.front()) return values.front();
    if (f >= frequencies.back()) return values.back();
    auto it = std::upper_bound(frequencies.begin(), frequencies.end(), f);
    const std::size_t hi = static_cast<std::size_t>(it - frequencies.begin());
    const std::size_t lo = hi - 1;
    const double vl = std::max(values[lo], 1e-300);
    const double vh = std::max(values[hi], 1e-300);
    if (frequencies[lo] <= 0.0)  // linear fallback around DC bins
        return values[lo] + (values[hi] - values[lo]) * (f - frequencies[lo]) /
                                (frequencies[hi] - frequencies[lo]);
    const double t = std::log(f / frequencies[lo]) / std::log(frequencies[hi] / frequencies[lo]);
    return std::exp(std::log(vl) + t * (std::log(vh) - std::log(vl)));
}

double SpectrumSeries::total_power() const {
    return std::accumulate(values.begin(), values.end(), 0.0);
}

SpectrumSeries welch_psd(const TimeSeries& x, std::size_t segment_len, double overlap,
                         Detrend detrend) {
    if (segment_len < 8) throw std::invalid_argument("welch_psd: segment_len must be >= 8");
    if (segment_len > x.samples.size())
        throw std::invalid_argument("welch_psd: segment longer than series");
    if (overlap < 0.0 || overlap >= 1.0)
        throw std::invalid_argument("welch_psd: overlap must be in [0, 1)");

    const auto window = hann(segment_len);
    double window_power = 0.0;
    for (double w : window) window_power += w * w;

    const std::size_t hop = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround((1.0 - overlap) * static_cast<double>(segment_len))));
    const std::size_t n_bins = segment_len / 2 + 1;
    std::vector<double> acc(n_bins, 0.0);
    std::vector<double> seg(segment_len);
    std::size_t count = 0;
    const double center = 0.5 * static_cast<double>(segment_len - 1);
    double sxx = 0.0;
    for (std::size_t i = 0; i < segment_len; ++i) {
        const double d = static_cast<double>(i) - center;
        sxx += d * d;
    }
    for (std::size_t start = 0; start + segment_len <= x.samples.size(); start += hop) {
        double m = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < segment_len; ++i) {
            m += x.samples[start + i];
            sxy += (static_cast<double>(i) - center) * x.samples[start + i];
        }
        m /= static_cast<double>(segment_len);
        const double slope = detrend == Detrend::linear ? sxy / sxx : 0.0;
        for (std::size_t i = 0; i < segment_len; ++i)
            seg[i] = (x.samples[start + i] - m - slope * (static_cast<double>(i) - center)) *
                     window[i];
        const auto spec = fft::rfft(seg);
        for (std::size_t k = 0; k < n_bins; ++k) acc[k] += std::norm(spec[k]);
        ++count;
    }

    const double scale = 1.0 / (x.sample_rate * window_power * static_cast<double>(count));
    SpectrumSeries out;
    out.kind = SpectrumKind::psd;
    out.averaging = count;
    out.frequencies.resize(n_bins);
    out.values.resize(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        out.frequencies[k] = static_cast<double>(k) * x.sample_rate / static_cast<double>(segment_len);
        const bool interior = k != 0 && (k != n_bins - 1 || segment_len % 2 != 0);
        out.values[k] = acc[k] * scale * (interior ? 2.0 : 1.0);
    }
    return out;
}

SpectrumSeries beat_spectrum(const TimeSeries& freq_noise, const TimeSeries* reference_noise,
                             double rbw) {
    if (freq_noise.unit != Unit::hz_deviation)
        throw std::invalid_argument("beat_spectrum: input must be hz_deviation");
    const double duration = freq_noise.duration();
    if (!(rbw >= 2.0 / duration))
        throw std::invalid_argument("beat_spectrum: rbw below 2/duration");
    if (reference_noise &&
        (reference_noise->sample_rate != freq_noise.sample_rate ||
         reference_noise->samples.size() != freq_noise.samples.size()))
        throw std::invalid_argument("beat_spectrum: reference grid mismatch");

    const double fs = freq_noise.sample_rate;
    // Hann ENBW = 1.5 / T_seg realizes the requested rbw.
    std::size_t seg_len = static_cast<std::size_t>(std::lround(1.5 * fs / rbw));
    seg_len = std::min(seg_len, freq_noise.samples.size());
    seg_len = std::max<std::size_t>(seg_len, 16) & ~std::size_t{1};

    // Difference phase; the spectrum of exp(i phi) is the beat lineshape.
    const double dt = 1.0 / fs;
    std::vector<double> phase(freq_noise.samples.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < phase.size(); ++i) {
        double nu = freq_noise.samples[i];
        if (reference_noise) nu -= reference_noise->samples[i];
        acc += 2.0 * kPi * nu * dt;
        phase[i] = acc;
    }

    const auto window = hann(seg_len);
    double window_power = 0.0;
    for (double w : window) window_power += w * w;

    std::vector<double> power(seg_len, 0.0);
    std::vector<std::complex<double>> seg(seg_len);
    std::size_t count = 0;
    for (std::size_t start = 0; start + seg_len <= phase.size(); start += seg_len / 2) {
        for (std::size_t i = 0; i < seg_len; ++i)
            seg[i] = window[i] * std::complex<double>(std::cos(phase[start + i]),
                                                      std::sin(phase[start + i]));
        fft::cfft(seg, false);
        for (std::size_t k = 0; k < seg_len; ++k) power[k] += std::norm(seg[k]);
        ++count;
    }

    // |z| = 1, so P[k] = |Z|^2 / (L U) sums to exactly 1 per segment.
    const double scale =
        1.0 / (static_cast<double>(seg_len) * window_power * static_cast<double>(count));
    SpectrumSeries out;
    out.kind = SpectrumKind::beat_power;
    out.averaging = count;
    out.rbw_hz = 1.5 * fs / static_cast<double>(seg_len);
    out.frequencies.resize(seg_len);
    out.values.resize(seg_len);
    const std::size_t half = seg_len / 2;
    for (std::size_t i = 0; i < seg_len; ++i) {
        const std::size_t k = (i + half) % seg_len;  // fftshift
        const double f = (static_cast<double>(i) - static_cast<double>(half)) * fs /
                         static_cast<double>(seg_len);
        out.frequencies[i] = f;
        out.values[i] = power[k] * scale;
    }
    return out;
}

namespace {

struct FitWork {
    std::vector<double> f, logp;
};

double model_log10(LineModel model, double f, double center, double width, double log_amp) {
    if (model == LineModel::gaussian) {
        const double sigma = width / (2.0 * std::sqrt(2.0 * kLn2));
        const double u = (f - center) / sigma;
        return log_amp - 0.5 * u * u / std::log(10.0);
    }
    const double gamma = width / 2.0;
    const double u = (f - center) / gamma;
    return log_amp - std::log10(1.0 + u * u);
}

// Gauss-Newton on log10 power; parameters (log_amp, center, width).
bool refine(LineModel model, const FitWork& w, double& log_amp, double& center,
            double& width) {
    const double eps = 1e-7;
    for (int iter = 0; iter < 100; ++iter) {
        double jtj[3][3] = {};
        double jtr[3] = {};
        for (std::size_t i = 0; i < w.f.size(); ++i) {
            const double r = w.logp[i] - model_log10(model, w.f[i], center, width, log_amp);
            const double d_amp = 1.0;
            const double dc = center + eps * std::max(1.0, std::abs(center) + width);
            const double dw = width * (1.0 + eps);
            const double d_center =
                (model_log10(model, w.f[i], dc, width, log_amp) -
                 model_log10(model, w.f[i], center, width, log_amp)) /
                (dc - center);
            const double d_width =
                (model_log10(model, w.f[i], center, dw, log_amp) -
                 model_log10(model, w.f[i], center, width, log_amp)) /
                (dw - width);
            const double jrow[3] = {d_amp, d_center, d_width};
            for (int a = 0; a < 3; ++a) {
                jtr[a] += jrow[a] * r;
                for (int b = 0; b < 3; ++b) jtj[a][b] += jrow[a] * jrow[b];
            }
        }
        // Solve the 3x3 normal equations by Gaussian elimination.
        double m[3][4];
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) m[a][b] = jtj[a][b];
            m[a][3] = jtr[a];
            m[a][a] += 1e-12;
        }
        for (int col = 0; col < 3; ++col) {
            int piv = col;
            for (int rI = col + 1; rI < 3; ++rI)
                if (std::abs(m[rI][col]) > std::abs(m[piv][col])) piv = rI;
            std::swap(m[piv], m[col]);
            if (std::abs(m[col][col]) < 1e-30) return false;
            for (int rI = 0; rI < 3; ++rI) {
                if (rI == col) continue;
                const double k = m[rI][col] / m[col][col];
                for (int c = col; c < 4; ++c) m[rI][c] -= k * m[col][c];
            }
        }
        const double da = m[0][3] / m[0][0];
        const double dc = m[1][3] / m[1][1];
        const double dw = m[2][3] / m[2][2];
        log_amp += da;
        center += dc;
        width += dw;
        if (!(width > 0.0) || !std::isfinite(width) || !std::isfinite(center)) return false;
        if (std::abs(da) < 1e-10 && std::abs(dc) < 1e-6 * width && std::abs(dw) < 1e-6 * width)
            return true;
    }
    return false;
}

}  // namespace

LineshapeFit fit_lineshape(const SpectrumSeries& spectrum, LineModel model, double window_hz) {
    if (spectrum.kind != SpectrumKind::beat_power)
        throw std::invalid_argument("fit_lineshape: expects a beat_power spectrum");
    if (spectrum.values.empty()) throw std::invalid_argument("fit_lineshape: empty spectrum");

    const auto peak_it = std::max_element(spectrum.values.begin(), spectrum.values.end());
    const double peak = *peak_it;
    const double floor = median_of(spectrum.values);
    if (!(peak > 3.0 * floor)) throw AnalysisError("fit_lineshape: no peak above 3x median floor");
    const double f_peak =
        spectrum.frequencies[static_cast<std::size_t>(peak_it - spectrum.values.begin())];

    FitWork w;
    for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
        const double f = spectrum.frequencies[i];
        if (std::abs(f - f_peak) <= window_hz / 2.0 && spectrum.values[i] > 0.0) {
            w.f.push_back(f);
            w.logp.push_back(std::log10(spectrum.values[i]));
        }
    }
    if (w.f.size() < 8) throw AnalysisError("fit_lineshape: window holds fewer than 8 bins");

    // Half-maximum crossing width as the starting point.
    double fwhm0 = window_hz / 4.0;
    {
        double lo = f_peak, hi = f_peak;
        for (std::size_t i = 0; i < spectrum.frequencies.size(); ++i) {
            if (spectrum.values[i] >= 0.5 * peak) {
                lo = std::min(lo, spectrum.frequencies[i]);
                hi = std::max(hi, spectrum.frequencies[i]);
            }
        }
        if (hi > lo) fwhm0 = hi - lo;
    }

    LineshapeFit fit;
    fit.model = model;
    double log_amp = std::log10(peak);
    double center = f_peak;
    double width = fwhm0;
    fit.converged = refine(model, w, log_amp, center, width);
    fit.center_hz = center;
    fit.fwhm_hz = std::abs(width);
    fit.amplitude = std::pow(10.0, log_amp);
    double ss = 0.0;
    for (std::size_t i = 0; i < w.f.size(); ++i) {
        const double r = w.logp[i] - model_log10(model, w.f[i], center, width, log_amp);
        ss += r * r;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(w.f.size()));
    return fit;
}

BetaLineResult beta_line_linewidth(const SpectrumSeries& psd, double obs_time) {
    if (psd.kind != SpectrumKind::psd)
        throw std::invalid_argument("beta_line_linewidth: expects a psd spectrum");
    if (!(obs_time > 0.0)) throw std::invalid_argument("beta_line_linewidth: obs_time must be > 0");
    const double f_min = 1.0 / obs_time;
    const double line_coeff = 8.0 * kLn2 / (kPi * kPi);

    double area = 0.0;
    bool exceeded = false;
    std::vector<double> band_values;
    for (std::size_t i = 0; i + 1 < psd.frequencies.size(); ++i) {
        const double f0 = psd.frequencies[i];
        const double f1 = psd.frequencies[i + 1];
        if (f1 < f_min || f0 <= 0.0) continue;
        const double s0 = psd.values[i];
        const double s1 = psd.values[i + 1];
        band_values.push_back(s0);
        const bool above0 = s0 > line_coeff * f0;
        const bool above1 = s1 > line_coeff * f1;
        if (above0 || above1) exceeded = true;
        // trapezoid over the above-line part of the interval
        const double w0 = above0 ? s0 : 0.0;
        const double w1 = above1 ? s1 : 0.0;
        area += 0.5 * (w0 + w1) * (std::max(f0, f_min) < f1 ? f1 - std::max(f0, f_min) : 0.0);
    }
    if (!exceeded) {
        const double s_med = band_values.empty() ? 0.0 : median_of(band_values);
        return {kPi * s_med, false};
    }
    return {std::sqrt(8.0 * kLn2 * area), true};
}

SpectrumSeries band_average(const SpectrumSeries& s, double f_lo, double f_hi,
                            int bands_per_decade) {
    if (!(f_lo > 0.0) || !(f_hi > f_lo) || bands_per_decade < 1)
        throw std::invalid_argument("band_average: bad band spec");
    SpectrumSeries out;
    out.kind = s.kind;
    out.averaging = s.averaging;
    const double step = std::pow(10.0, 1.0 / bands_per_decade);
    for (double lo = f_lo; lo < f_hi; lo *= step) {
        const double hi = std::min(lo * step, f_hi);
        double sum = 0.0;
        double fsum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < s.frequencies.size(); ++i) {
            if (s.frequencies[i] >= lo && s.frequencies[i] < hi) {
                sum += s.values[i];
                fsum += std::log(s.frequencies[i]);
                ++n;
            }
        }
        if (n == 0) continue;
        out.frequencies.push_back(std::exp(fsum / static_cast<double>(n)));
        out.values.push_back(sum / static_cast<double>(n));
    }
    return out;
}

}  // namespace lockloop
