#include "lockloop/pid_sim.hpp"

#include <cmath>

namespace lockloop {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
}

PidSim::PidSim(const PidConfig& cfg, double sample_rate) : cfg_(cfg), fs_(sample_rate) {
    cfg.validate();
    if (!(sample_rate > 0.0)) throw std::invalid_argument("PidSim: sample_rate must be > 0");
    const double wd = kTwoPi * cfg.derivative_rolloff_hz;
    if (cfg.kd != 0.0) {
        // kd s / (1 + s/wd)
        deriv_ = bilinear_biquad(0.0, cfg.kd, 0.0, 0.0, 1.0 / wd, 1.0, wd, sample_rate);
        has_deriv_ = true;
    }
    const double wlp = kTwoPi * cfg.output_low_pass_hz;
    out_lp_ = bilinear_biquad(0.0, 0.0, wlp, 0.0, 1.0, wlp, wlp, sample_rate);
}

double PidSim::step(double error) {
    const double dt = 1.0 / fs_;
    const double delta_i = cfg_.ki * dt * 0.5 * (error + prev_error_);
    integ_ += delta_i;
    double u = cfg_.kp * error + integ_;
    if (has_deriv_) u += deriv_.step(error);
    prev_error_ = error;
    u = out_lp_.step(u);
    if (std::abs(u) > cfg_.saturation) {
        const double clipped = u > 0.0 ? cfg_.saturation : -cfg_.saturation;
        // clamp the integrator while the error keeps pushing into the rail
        if (delta_i * u > 0.0) integ_ -= delta_i;
        ++saturation_events_;
        u = clipped;
    }
    return u;
}

void PidSim::reset() {
    integ_ = 0.0;
    prev_error_ = 0.0;
    deriv_.reset();
    out_lp_.reset();
    saturation_events_ = 0;
}

std::complex<double> PidSim::response(double f_hz) const {
    // trapezoidal integrator: ki (1 + z^-1) / (2 fs (1 - z^-1))
    const double w = kTwoPi * f_hz / fs_;
    const std::complex<double> z1(std::cos(-w), std::sin(-w));
    std::complex<double> h(cfg_.kp, 0.0);
    if (cfg_.ki != 0.0) h += cfg_.ki * (1.0 + z1) / (2.0 * fs_ * (1.0 - z1));
    if (has_deriv_) h += deriv_.response(f_hz, fs_);
    return h * out_lp_.response(f_hz, fs_);
}

}  // namespace lockloop
