#pragma once

#include <complex>
#include <cstddef>

#include "lockloop/lti.hpp"

namespace lockloop {

// Streaming PID with parallel P / trapezoidal I / filtered-D paths, an output
// low-pass and symmetric saturation with integrator clamping. Unsaturated it
// is the bilinear discretization of make_pid(cfg); response() reports that
// exact discrete response so analytic loop algebra can mirror the simulator.
class PidSim {
  public:
    PidSim(const PidConfig& cfg, double sample_rate);

    double step(double error);
    void reset();

    std::size_t saturation_events() const { return saturation_events_; }
    std::complex<double> response(double f_hz) const;
    double sample_rate() const { return fs_; }

  private:
    PidConfig cfg_;
    double fs_;
    double integ_ = 0.0;
    double prev_error_ = 0.0;
    Biquad deriv_;       // kd s / (1 + s/wd)
    Biquad out_lp_;      // output low-pass
    bool has_deriv_ = false;
    std::size_t saturation_events_ = 0;
};

}  // namespace lockloop
