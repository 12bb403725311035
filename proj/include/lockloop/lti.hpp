#pragma once

#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "lockloop/timeseries.hpp"

namespace lockloop {

// Continuous-time rational LTI description in zpk form plus a pure delay:
// H(s) = gain * prod(s - z_i) / prod(s - p_i) * exp(-s * delay).
// Poles/zeros are in rad/s and complex ones come in conjugate pairs.
struct TransferFunction {
    double gain = 1.0;
    std::vector<std::complex<double>> zeros;
    std::vector<std::complex<double>> poles;
    double delay = 0.0;  // seconds

    std::complex<double> eval(double f_hz) const;  // H(j 2 pi f)
    bool proper() const { return poles.size() >= zeros.size(); }
    // Re(p) <= 0 for every pole (imaginary-axis integrator poles allowed).
    bool stable() const;

    TransferFunction operator*(const TransferFunction& rhs) const;  // cascade

    static TransferFunction unity(double gain = 1.0);
    static TransferFunction low_pass(double corner_hz, double dc_gain = 1.0);
    static TransferFunction integrator(double ki);  // ki/s
    static TransferFunction pure_delay(double seconds);
    // num and den are polynomial coefficients in s, highest order first,
    // degree <= 2 (that covers every block in this artifact).
    static TransferFunction from_rational(std::span<const double> num,
                                          std::span<const double> den);
};

struct BodePoint {
    double magnitude = 0.0;
    double phase_rad = 0.0;
};

// Exact rational evaluation at s = j 2 pi f. Phase is the sum of the factor
// phases plus -2 pi f delay, so cascades add phases to machine precision.
BodePoint bode(const TransferFunction& tf, double f_hz);

// |1 / (1 + G(j 2 pi f))| for an open-loop G; throws SingularPointError when
// 1 + G vanishes.
double closed_loop_suppression(const TransferFunction& open_loop, double f_hz);

// First unity-gain crossing of |G| scanned on a log grid (nan if none).
double unity_gain_frequency(const TransferFunction& open_loop, double f_lo = 1.0,
                            double f_hi = 50e6);

struct PidConfig {
    double kp = 0.0;
    double ki = 0.0;  // 1/s
    double kd = 0.0;  // s
    double derivative_rolloff_hz = 1e6;
    double output_low_pass_hz = 1e6;
    double saturation = std::numeric_limits<double>::infinity();  // symmetric limit

    void validate() const;
};

// kp + ki/s + kd s/(1 + s/wd), cascaded with the output low-pass. Linear
// part only; saturation lives in the time-domain PidSim.
TransferFunction make_pid(const PidConfig& cfg);

struct Biquad {
    double b0 = 1.0, b1 = 0.0, b2 = 0.0;
    double a1 = 0.0, a2 = 0.0;  // y[n] = b x - a1 y[n-1] - a2 y[n-2]
    double s1 = 0.0, s2 = 0.0;  // DF2-transposed state

    double step(double x) {
        const double y = b0 * x + s1;
        s1 = b1 * x - a1 * y + s2;
        s2 = b2 * x - a2 * y;
        return y;
    }
    void reset() { s1 = s2 = 0.0; }
    std::complex<double> response(double f_hz, double sample_rate) const;
};

// Biquad cascade plus an integer-sample delay line; streaming application is
// state-continuous across chunks.
struct DigitalFilter {
    std::vector<Biquad> sections;
    double sample_rate = 0.0;
    std::size_t delay_samples = 0;
    bool rate_warning = false;  // a corner sat too close to Nyquist to prewarp

    double step(double x);
    void process(std::span<const double> in, std::span<double> out);
    void reset();
    std::complex<double> response(double f_hz) const;

  private:
    std::vector<double> delay_line_;
    std::size_t delay_pos_ = 0;
};

// Bilinear transform with per-section prewarping at the section's pole corner.
// Refuses Re(p) > 0 prototypes; integrator poles map to z = 1 and are kept.
// Corners at or beyond ~0.9 Nyquist fall back to plain bilinear and set
// rate_warning.
DigitalFilter discretize(const TransferFunction& tf, double sample_rate);

// One continuous section (b2 s^2 + b1 s + b0)/(a2 s^2 + a1 s + a0) through
// the bilinear transform, prewarped at corner_rad_s when representable.
Biquad bilinear_biquad(double b2, double b1, double b0, double a2, double a1,
                       double a0, double corner_rad_s, double sample_rate,
                       bool* rate_warning = nullptr);

// Applies the filter to a copy of x (sample rates must match).
TimeSeries filter_apply(DigitalFilter& filter, const TimeSeries& x);

}  // namespace lockloop
