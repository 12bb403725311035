#include "lockloop/lti.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lockloop/errors.hpp"

namespace lockloop {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

std::complex<double> TransferFunction::eval(double f_hz) const {
    if (!(f_hz > 0.0)) throw std::domain_error("TransferFunction::eval: f must be > 0");
    const std::complex<double> s(0.0, kTwoPi * f_hz);
    std::complex<double> h(gain, 0.0);
    for (const auto& z : zeros) h *= (s - z);
    for (const auto& p : poles) h /= (s - p);
    const double phi = -kTwoPi * f_hz * delay;
    return h * std::complex<double>(std::cos(phi), std::sin(phi));
}

bool TransferFunction::stable() const {
    for (const auto& p : poles)
        if (p.real() > 1e-12 * std::max(1.0, std::abs(p))) return false;
    return true;
}

TransferFunction TransferFunction::operator*(const TransferFunction& rhs) const {
    TransferFunction out;
    out.gain = gain * rhs.gain;
    out.zeros = zeros;
    out.zeros.insert(out.zeros.end(), rhs.zeros.begin(), rhs.zeros.end());
    out.poles = poles;
    out.poles.insert(out.poles.end(), rhs.poles.begin(), rhs.poles.end());
    out.delay = delay + rhs.delay;
    return out;
}

TransferFunction TransferFunction::unity(double gain) {
    TransferFunction tf;
    tf.gain = gain;
    return tf;
}

TransferFunction TransferFunction::low_pass(double corner_hz, double dc_gain) {
    if (!(corner_hz > 0.0)) throw std::invalid_argument("low_pass: corner must be > 0");
    TransferFunction tf;
    const double wc = kTwoPi * corner_hz;
    tf.gain = dc_gain * wc;
    tf.poles = {{-wc, 0.0}};
    return tf;
}

TransferFunction TransferFunction::integrator(double ki) {
    TransferFunction tf;
    tf.gain = ki;
    tf.poles = {{0.0, 0.0}};
    return tf;
}

TransferFunction TransferFunction::pure_delay(double seconds) {
    if (seconds < 0.0) throw std::invalid_argument("pure_delay: delay must be >= 0");
    TransferFunction tf;
    tf.delay = seconds;
    return tf;
}

TransferFunction TransferFunction::from_rational(std::span<const double> num,
                                                 std::span<const double> den) {
    if (num.empty() || den.empty() || num.size() > 3 || den.size() > 3)
        throw std::invalid_argument("from_rational: degree must be <= 2");
    auto roots = [](std::span<const double> c) {
        std::vector<std::complex<double>> r;
        // strip leading zeros
        std::size_t i0 = 0;
        while (i0 + 1 < c.size() && c[i0] == 0.0) ++i0;
        const std::size_t deg = c.size() - 1 - i0;
        if (deg == 1) {
            r.push_back({-c[i0 + 1] / c[i0], 0.0});
        } else if (deg == 2) {
            const double a = c[i0], b = c[i0 + 1], cc = c[i0 + 2];
            const std::complex<double> disc = std::sqrt(std::complex<double>(b * b - 4 * a * cc, 0.0));
            r.push_back((-b + disc) / (2 * a));
            r.push_back((-b - disc) / (2 * a));
        }
        return std::pair{r, c[i0]};
    };
    auto [zs, gn] = roots(num);
    auto [ps, gd] = roots(den);
    TransferFunction tf;
    tf.zeros = std::move(zs);
    tf.poles = std::move(ps);
    tf.gain = gn / gd;
    return tf;
}

BodePoint bode(const TransferFunction& tf, double f_hz) {
    if (!(f_hz > 0.0)) throw std::domain_error("bode: f must be > 0");
    const std::complex<double> s(0.0, kTwoPi * f_hz);
    double mag = std::abs(tf.gain);
    double phase = tf.gain < 0.0 ? kPi : 0.0;
    // factor-wise phase sum so cascades add exactly
    for (const auto& z : tf.zeros) {
        const auto v = s - z;
        mag *= std::abs(v);
        phase += std::arg(v);
    }
    for (const auto& p : tf.poles) {
        const auto v = s - p;
        mag /= std::abs(v);
        phase -= std::arg(v);
    }
    phase -= kTwoPi * f_hz * tf.delay;
    return {mag, phase};
}

double closed_loop_suppression(const TransferFunction& open_loop, double f_hz) {
    const auto g = open_loop.eval(f_hz);
    const auto d = 1.0 + g;
    if (std::abs(d) == 0.0)
        throw SingularPointError("closed_loop_suppression: 1 + G vanished");
    return 1.0 / std::abs(d);
}

double unity_gain_frequency(const TransferFunction& open_loop, double f_lo, double f_hi) {
    const int n = 2400;
    double prev_f = f_lo;
    double prev_mag = std::abs(open_loop.eval(f_lo));
    for (int i = 1; i <= n; ++i) {
        const double f = f_lo * std::pow(f_hi / f_lo, static_cast<double>(i) / n);
        const double mag = std::abs(open_loop.eval(f));
        if ((prev_mag - 1.0) * (mag - 1.0) <= 0.0 && prev_mag != mag) {
            // log-log interpolation of the crossing
            const double t = std::log(1.0 / prev_mag) / std::log(mag / prev_mag);
            return prev_f * std::pow(f / prev_f, t);
        }
        prev_f = f;
        prev_mag = mag;
    }
    return std::numeric_limits<double>::quiet_NaN();
}

void PidConfig::validate() const {
    if (kp == 0.0 && ki == 0.0 && kd == 0.0)
        throw std::invalid_argument("PidConfig: all gains zero");
    if (!(output_low_pass_hz > 0.0))
        throw std::invalid_argument("PidConfig: output_low_pass must be > 0");
    if (!(derivative_rolloff_hz > 0.0))
        throw std::invalid_argument("PidConfig: derivative path needs a finite rolloff");
    if (!(saturation > 0.0)) throw std::invalid_argument("PidConfig: saturation must be > 0");
}

TransferFunction make_pid(const PidConfig& cfg) {
    cfg.validate();
    const double wd = kTwoPi * cfg.derivative_rolloff_hz;
    // kp + ki/s + kd s/(1+s/wd) over the common denominator s (1 + s/wd)
    const double a2 = cfg.kp / wd + cfg.kd;
    const double a1 = cfg.kp + cfg.ki / wd;
    const double a0 = cfg.ki;
    const double num[3] = {a2, a1, a0};
    const double den[3] = {1.0 / wd, 1.0, 0.0};
    auto pid = TransferFunction::from_rational(num, den);
    return pid * TransferFunction::low_pass(cfg.output_low_pass_hz);
}

std::complex<double> Biquad::response(double f_hz, double sample_rate) const {
    const double w = kTwoPi * f_hz / sample_rate;
    const std::complex<double> z1(std::cos(-w), std::sin(-w));
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
}

double DigitalFilter::step(double x) {
    if (delay_samples > 0) {
        if (delay_line_.size() != delay_samples) {
            delay_line_.assign(delay_samples, 0.0);
            delay_pos_ = 0;
        }
        const double delayed = delay_line_[delay_pos_];
        delay_line_[delay_pos_] = x;
        delay_pos_ = (delay_pos_ + 1) % delay_samples;
        x = delayed;
    }
    for (auto& s : sections) x = s.step(x);
    return x;
}

void DigitalFilter::process(std::span<const double> in, std::span<double> out) {
    if (in.size() != out.size()) throw std::invalid_argument("process: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = step(in[i]);
}

void DigitalFilter::reset() {
    for (auto& s : sections) s.reset();
    std::fill(delay_line_.begin(), delay_line_.end(), 0.0);
    delay_pos_ = 0;
}

std::complex<double> DigitalFilter::response(double f_hz) const {
    std::complex<double> h(1.0, 0.0);
    for (const auto& s : sections) h *= s.response(f_hz, sample_rate);
    if (delay_samples > 0) {
        const double w = kTwoPi * f_hz * static_cast<double>(delay_samples) / sample_rate;
        h *= std::complex<double>(std::cos(-w), std::sin(-w));
    }
    return h;
}

namespace {

struct Section {
    // continuous (b2 s^2 + b1 s + b0) / (a2 s^2 + a1 s + a0)
    double b2 = 0, b1 = 0, b0 = 1;
    double a2 = 0, a1 = 0, a0 = 1;
    double corner = 0.0;  // rad/s, for prewarping
};

Biquad bilinear(const Section& sec, double fs, bool* warn) {
    return bilinear_biquad(sec.b2, sec.b1, sec.b0, sec.a2, sec.a1, sec.a0, sec.corner,
                           fs, warn);
}

}  // namespace

Biquad bilinear_biquad(double b2, double b1, double b0, double a2, double a1, double a0,
                       double corner_rad_s, double sample_rate, bool* rate_warning) {
    double K = 2.0 * sample_rate;
    if (corner_rad_s > 0.0) {
        if (corner_rad_s < 0.9 * kPi * sample_rate) {
            K = corner_rad_s / std::tan(corner_rad_s / (2.0 * sample_rate));
        } else if (rate_warning) {
            *rate_warning = true;  // corner at/near Nyquist, cannot prewarp
        }
    }
    const double K2 = K * K;
    const double B0 = b2 * K2 + b1 * K + b0;
    const double B1 = 2.0 * (b0 - b2 * K2);
    const double B2 = b2 * K2 - b1 * K + b0;
    const double A0 = a2 * K2 + a1 * K + a0;
    const double A1 = 2.0 * (a0 - a2 * K2);
    const double A2 = a2 * K2 - a1 * K + a0;
    if (A0 == 0.0) throw std::invalid_argument("bilinear: degenerate section");
    Biquad q;
    q.b0 = B0 / A0;
    q.b1 = B1 / A0;
    q.b2 = B2 / A0;
    q.a1 = A1 / A0;
    q.a2 = A2 / A0;
    return q;
}

DigitalFilter discretize(const TransferFunction& tf, double sample_rate) {
    if (!(sample_rate > 0.0)) throw std::invalid_argument("discretize: sample_rate must be > 0");
    if (!tf.proper()) throw std::invalid_argument("discretize: transfer function must be proper");
    if (!tf.stable())
        throw std::invalid_argument("discretize: refusing an unstable prototype (pole in RHP)");

    // Split poles and zeros into conjugate pairs and reals.
    using Cplx = std::complex<double>;
    auto split = [](std::vector<Cplx> roots, std::vector<std::pair<Cplx, Cplx>>& pairs,
                    std::vector<double>& reals) {
        std::sort(roots.begin(), roots.end(), [](const Cplx& a, const Cplx& b) {
            if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
            return a.imag() > b.imag();
        });
        for (std::size_t i = 0; i < roots.size();) {
            if (std::abs(roots[i].imag()) > 1e-9 * std::abs(roots[i])) {
                if (i + 1 >= roots.size())
                    throw std::invalid_argument("discretize: unpaired complex root");
                pairs.emplace_back(roots[i], roots[i + 1]);
                i += 2;
            } else {
                reals.push_back(roots[i].real());
                i += 1;
            }
        }
    };
    std::vector<std::pair<Cplx, Cplx>> pole_pairs, zero_pairs;
    std::vector<double> real_poles, real_zeros;
    split(tf.poles, pole_pairs, real_poles);
    split(tf.zeros, zero_pairs, real_zeros);

    auto log_corner = [fsr = sample_rate](double mag) {
        return std::log(std::max(mag, 1e-9 * fsr));
    };
    // pull the real pole whose corner is nearest to `target`
    auto take_nearest_real_pole = [&](double target) {
        std::size_t best = 0;
        double best_d = 1e300;
        for (std::size_t i = 0; i < real_poles.size(); ++i) {
            const double d = std::abs(log_corner(std::abs(real_poles[i])) - log_corner(target));
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        const double p = real_poles[best];
        real_poles.erase(real_poles.begin() + static_cast<std::ptrdiff_t>(best));
        return p;
    };

    std::vector<Section> sections;
    auto quad_num = [](Section& sec, const Cplx& z0, const Cplx& z1) {
        sec.b2 = 1.0;
        sec.b1 = -(z0 + z1).real();
        sec.b0 = (z0 * z1).real();
    };

    // Complex zero pairs need second-order hosts: a complex pole pair when
    // available, otherwise the two nearest real poles merged.
    for (const auto& [z0, z1] : zero_pairs) {
        Section sec;
        quad_num(sec, z0, z1);
        if (!pole_pairs.empty()) {
            const auto [p0, p1] = pole_pairs.back();
            pole_pairs.pop_back();
            sec.a2 = 1.0;
            sec.a1 = -2.0 * p0.real();
            sec.a0 = std::norm(p0);
            sec.corner = std::abs(p0);
        } else {
            if (real_poles.size() < 2)
                throw std::invalid_argument("discretize: not enough poles for a zero pair");
            const double p0 = take_nearest_real_pole(std::abs(z0));
            const double p1 = take_nearest_real_pole(std::abs(z0));
            sec.a2 = 1.0;
            sec.a1 = -(p0 + p1);
            sec.a0 = p0 * p1;
            sec.corner = std::max(std::abs(p0), std::abs(p1));
        }
        sections.push_back(sec);
    }
    // remaining complex pole pairs (real zeros attach if any are left)
    for (const auto& [p0, p1] : pole_pairs) {
        Section sec;
        sec.a2 = 1.0;
        sec.a1 = -2.0 * p0.real();
        sec.a0 = std::norm(p0);
        sec.corner = std::abs(p0);
        sections.push_back(sec);
    }
    // remaining real poles, largest corner first
    std::sort(real_poles.begin(), real_poles.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (double p : real_poles) {
        Section sec;
        sec.a1 = 1.0;
        sec.a0 = -p;
        sec.corner = std::abs(p);
        sections.push_back(sec);
    }
    if (sections.empty()) sections.push_back({});

    // real zeros go to the section with the nearest corner and free capacity
    std::sort(real_zeros.begin(), real_zeros.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (double z : real_zeros) {
        Section* best = nullptr;
        double best_d = 1e300;
        for (auto& sec : sections) {
            const int cap = sec.a2 != 0.0 ? 2 : 1;
            const int used = sec.b2 != 0.0 ? 2 : (sec.b1 != 0.0 ? 1 : 0);
            if (used >= cap) continue;
            const double d = std::abs(log_corner(sec.corner) - log_corner(std::abs(z)));
            if (d < best_d) {
                best_d = d;
                best = &sec;
            }
        }
        if (!best) throw std::invalid_argument("discretize: could not place all zeros");
        if (best->b1 == 0.0 && best->b2 == 0.0) {
            best->b1 = 1.0;
            best->b0 = -z;  // (s - z) with z = -corner gives s + corner
        } else {
            // combine with the zero already there: (s + c0)(s + c1)
            const double c0 = best->b0;
            best->b2 = 1.0;
            best->b1 = c0 - z;
            best->b0 = -z * c0;
        }
    }
    // sections without zeros keep a unity numerator
    for (auto& sec : sections)
        if (sec.b1 == 0.0 && sec.b2 == 0.0 && sec.b0 == 0.0) sec.b0 = 1.0;

    DigitalFilter filt;
    filt.sample_rate = sample_rate;
    filt.delay_samples = static_cast<std::size_t>(std::max<long>(0, std::lround(tf.delay * sample_rate)));
    bool warn = false;
    for (const auto& sec : sections) filt.sections.push_back(bilinear(sec, sample_rate, &warn));
    filt.rate_warning = warn;
    // Fold the zpk gain into the first section.
    if (!filt.sections.empty()) {
        filt.sections.front().b0 *= tf.gain;
        filt.sections.front().b1 *= tf.gain;
        filt.sections.front().b2 *= tf.gain;
    }
    return filt;
}

TimeSeries filter_apply(DigitalFilter& filter, const TimeSeries& x) {
    if (filter.sample_rate != x.sample_rate)
        throw std::invalid_argument("filter_apply: sample-rate mismatch");
    TimeSeries out = x;
    filter.process(x.samples, out.samples);
    return out;
}

}  // namespace lockloop
