#include "lockloop/sweeps.hpp"

#include <cmath>
#include <stdexcept>

#include "lockloop/csvio.hpp"

namespace lockloop {

namespace {
constexpr double kRadToDeg = 57.29577951308232;

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2)
        throw std::invalid_argument("sweep: bad frequency grid");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
    return g;
}

std::vector<double> lin_grid(double lo, double hi, std::size_t points) {
    if (!(hi > lo) || points < 2) throw std::invalid_argument("sweep: bad detuning grid");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}
}  // namespace

void write_bode_csv(const TransferFunction& tf, const std::string& path, double f_lo,
                    double f_hi, std::size_t points) {
    const auto grid = log_grid(f_lo, f_hi, points);
    std::vector<double> mag(points), phase(points);
    for (std::size_t i = 0; i < points; ++i) {
        const auto bp = bode(tf, grid[i]);
        mag[i] = 20.0 * std::log10(bp.magnitude);
        phase[i] = bp.phase_rad * kRadToDeg;
    }
    write_csv(path, {{"f_hz", grid}, {"mag_db", mag}, {"phase_deg", phase}});
}

void write_pdh_error_csv(const PdhConfig& cfg, const CavityModel& cavity,
                         const std::string& path, double span_hz, std::size_t points) {
    const auto grid = lin_grid(-span_hz / 2.0, span_hz / 2.0, points);
    std::vector<double> err(points);
    for (std::size_t i = 0; i < points; ++i) err[i] = pdh_error_curve(cfg, cavity, grid[i]);
    write_csv(path, {{"detuning_hz", grid}, {"error_v", err}});
}

void write_sas_transmission_csv(const SasConfig& cfg, const std::string& path, double lo_hz,
                                double hi_hz, std::size_t points) {
    const auto grid = lin_grid(lo_hz, hi_hz, points);
    std::vector<double> t(points);
    for (std::size_t i = 0; i < points; ++i) t[i] = sas_transmission(cfg, grid[i]);
    write_csv(path, {{"detuning_hz", grid}, {"transmission", t}});
}

void write_sas_error_csv(const SasConfig& cfg, const std::string& path, double lo_hz,
                         double hi_hz, std::size_t points) {
    const auto grid = lin_grid(lo_hz, hi_hz, points);
    std::vector<double> err(points);
    for (std::size_t i = 0; i < points; ++i) err[i] = sas_error(cfg, grid[i]);
    write_csv(path, {{"detuning_hz", grid}, {"error_v", err}});
}

void write_psd_model_csv(const PsdModel& model, const std::string& path, double f_lo,
                         double f_hi, std::size_t points) {
    const auto grid = log_grid(f_lo, f_hi, points);
    std::vector<double> psd(points);
    for (std::size_t i = 0; i < points; ++i) psd[i] = model.eval_at(grid[i]).density;
    write_csv(path, {{"f_hz", grid}, {"psd_hz2_per_hz", psd}});
}

}  // namespace lockloop
