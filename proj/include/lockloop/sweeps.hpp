#pragma once

#include <string>

#include "lockloop/lti.hpp"
#include "lockloop/pdh.hpp"
#include "lockloop/psd.hpp"
#include "lockloop/sas.hpp"

namespace lockloop {

// CSV exports for the named sweep formats: frequency responses as
// `f_hz,mag_db,phase_deg`, discriminator curves as `detuning_hz,error_v` /
// `detuning_hz,transmission`, spectra as `f_hz,psd_hz2_per_hz`.

void write_bode_csv(const TransferFunction& tf, const std::string& path, double f_lo,
                    double f_hi, std::size_t points = 400);

void write_pdh_error_csv(const PdhConfig& cfg, const CavityModel& cavity,
                         const std::string& path, double span_hz, std::size_t points = 801);

void write_sas_transmission_csv(const SasConfig& cfg, const std::string& path,
                                double lo_hz, double hi_hz, std::size_t points = 1201);

void write_sas_error_csv(const SasConfig& cfg, const std::string& path, double lo_hz,
                         double hi_hz, std::size_t points = 801);

void write_psd_model_csv(const PsdModel& model, const std::string& path, double f_lo,
                         double f_hi, std::size_t points = 400);

}  // namespace lockloop
