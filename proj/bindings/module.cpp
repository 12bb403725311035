#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lockloop/calibrate.hpp"
#include "lockloop/cascade.hpp"
#include "lockloop/config.hpp"
#include "lockloop/eit.hpp"
#include "lockloop/errors.hpp"
#include "lockloop/sweeps.hpp"

namespace py = pybind11;
using namespace lockloop;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<double> from_array(const py::array_t<double, py::array::c_style>& a) {
    return {a.data(), a.data() + a.size()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Cascade-locked laser frequency-noise simulator (C++ core)";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<LoopInstabilityError>(m, "LoopInstabilityError");
    py::register_exception<AnalysisError>(m, "AnalysisError");

    py::enum_<Unit>(m, "Unit")
        .value("hz_deviation", Unit::hz_deviation)
        .value("volts", Unit::volts)
        .value("transmission", Unit::transmission)
        .value("radians", Unit::radians);

    py::class_<TimeSeries>(m, "TimeSeries")
        .def(py::init([](double fs, Unit unit, py::array_t<double, py::array::c_style> data) {
                 return TimeSeries(fs, unit, from_array(data));
             }),
             py::arg("sample_rate"), py::arg("unit"), py::arg("samples"))
        .def_readonly("sample_rate", &TimeSeries::sample_rate)
        .def_readonly("unit", &TimeSeries::unit)
        .def_property_readonly("samples",
                               [](const TimeSeries& t) { return to_array(t.samples); })
        .def("variance", &TimeSeries::variance)
        .def("rms", &TimeSeries::rms)
        .def("duration", &TimeSeries::duration)
        .def("tail_from", &TimeSeries::tail_from)
        .def("__len__", [](const TimeSeries& t) { return t.samples.size(); });
    m.def("decimate", &decimate, py::arg("series"), py::arg("factor"));

    py::class_<PsdSegment>(m, "PsdSegment")
        .def(py::init([](double f_lo, double f_hi, double exponent, double amplitude_ref,
                         double f_ref) {
                 return PsdSegment{f_lo, f_hi, exponent, amplitude_ref, f_ref};
             }),
             py::arg("f_lo"), py::arg("f_hi"), py::arg("exponent"), py::arg("amplitude_ref"),
             py::arg("f_ref"))
        .def_readwrite("f_lo", &PsdSegment::f_lo)
        .def_readwrite("f_hi", &PsdSegment::f_hi)
        .def_readwrite("exponent", &PsdSegment::exponent)
        .def_readwrite("amplitude_ref", &PsdSegment::amplitude_ref)
        .def_readwrite("f_ref", &PsdSegment::f_ref);

    py::class_<PsdModel>(m, "PsdModel")
        .def(py::init<>())
        .def_static("white", &PsdModel::white, py::arg("density"))
        .def_readwrite("segments", &PsdModel::segments)
        .def_readwrite("floor", &PsdModel::floor)
        .def("eval", [](const PsdModel& mdl, double f) { return mdl.eval_at(f).density; },
             py::arg("f"))
        .def("defined_at", &PsdModel::defined_at)
        .def("validate", [](const PsdModel& mdl) { mdl.validate(); });
    m.def("compose", [](const std::vector<PsdModel>& models) {
        return compose(std::span<const PsdModel>(models.data(), models.size()));
    });
    m.def("synthesize",
          [](const PsdModel& model, double fs, std::size_t n, std::uint64_t seed) {
              return synthesize(model, fs, n, seed);
          },
          py::arg("model"), py::arg("sample_rate"), py::arg("n"), py::arg("seed"));

    py::enum_<SpectrumKind>(m, "SpectrumKind")
        .value("psd", SpectrumKind::psd)
        .value("beat_power", SpectrumKind::beat_power);

    py::class_<SpectrumSeries>(m, "SpectrumSeries")
        .def(py::init<>())
        .def_property_readonly("frequencies",
                               [](const SpectrumSeries& s) { return to_array(s.frequencies); })
        .def_property_readonly("values",
                               [](const SpectrumSeries& s) { return to_array(s.values); })
        .def_readonly("kind", &SpectrumSeries::kind)
        .def_readonly("averaging", &SpectrumSeries::averaging)
        .def_readonly("rbw_hz", &SpectrumSeries::rbw_hz)
        .def("value_at", &SpectrumSeries::value_at)
        .def("total_power", &SpectrumSeries::total_power);

    py::enum_<Detrend>(m, "Detrend")
        .value("mean", Detrend::mean)
        .value("linear", Detrend::linear);
    m.def("welch_psd", &welch_psd, py::arg("series"), py::arg("segment_len"),
          py::arg("overlap") = 0.5, py::arg("detrend") = Detrend::mean);
    m.def("beat_spectrum",
          [](const TimeSeries& nu, py::object reference, double rbw) {
              const TimeSeries* ref = nullptr;
              TimeSeries ref_storage;
              if (!reference.is_none()) {
                  ref_storage = reference.cast<TimeSeries>();
                  ref = &ref_storage;
              }
              return beat_spectrum(nu, ref, rbw);
          },
          py::arg("freq_noise"), py::arg("reference") = py::none(), py::arg("rbw"));

    py::enum_<LineModel>(m, "LineModel")
        .value("gaussian", LineModel::gaussian)
        .value("lorentzian", LineModel::lorentzian);
    py::class_<LineshapeFit>(m, "LineshapeFit")
        .def_readonly("model", &LineshapeFit::model)
        .def_readonly("center_hz", &LineshapeFit::center_hz)
        .def_readonly("fwhm_hz", &LineshapeFit::fwhm_hz)
        .def_readonly("amplitude", &LineshapeFit::amplitude)
        .def_readonly("residual_rms", &LineshapeFit::residual_rms)
        .def_readonly("converged", &LineshapeFit::converged);
    m.def("fit_lineshape", &fit_lineshape, py::arg("spectrum"), py::arg("model"),
          py::arg("window_hz"));

    py::class_<BetaLineResult>(m, "BetaLineResult")
        .def_readonly("fwhm_hz", &BetaLineResult::fwhm_hz)
        .def_readonly("separation_line_exceeded", &BetaLineResult::separation_line_exceeded);
    m.def("beta_line_linewidth", &beta_line_linewidth, py::arg("psd"), py::arg("obs_time"));
    m.def("band_average", &band_average, py::arg("spectrum"), py::arg("f_lo"), py::arg("f_hi"),
          py::arg("bands_per_decade"));

    py::class_<TransferFunction>(m, "TransferFunction")
        .def(py::init<>())
        .def_static("low_pass", &TransferFunction::low_pass, py::arg("corner_hz"),
                    py::arg("dc_gain") = 1.0)
        .def_static("integrator", &TransferFunction::integrator, py::arg("ki"))
        .def_static("pure_delay", &TransferFunction::pure_delay, py::arg("seconds"))
        .def_static("unity", &TransferFunction::unity, py::arg("gain") = 1.0)
        .def("__mul__", &TransferFunction::operator*)
        .def("eval", [](const TransferFunction& tf, double f) {
            const auto h = tf.eval(f);
            return std::make_pair(std::abs(h), std::arg(h));
        });
    m.def("bode", [](const TransferFunction& tf, double f) {
        const auto bp = bode(tf, f);
        return std::make_pair(bp.magnitude, bp.phase_rad);
    });
    m.def("closed_loop_suppression", &closed_loop_suppression, py::arg("open_loop"),
          py::arg("f_hz"));
    m.def("unity_gain_frequency", &unity_gain_frequency, py::arg("open_loop"),
          py::arg("f_lo") = 1.0, py::arg("f_hi") = 50e6);

    py::class_<PidConfig>(m, "PidConfig")
        .def(py::init<>())
        .def_readwrite("kp", &PidConfig::kp)
        .def_readwrite("ki", &PidConfig::ki)
        .def_readwrite("kd", &PidConfig::kd)
        .def_readwrite("derivative_rolloff_hz", &PidConfig::derivative_rolloff_hz)
        .def_readwrite("output_low_pass_hz", &PidConfig::output_low_pass_hz)
        .def_readwrite("saturation", &PidConfig::saturation);
    m.def("make_pid", &make_pid);

    py::class_<CavityModel>(m, "CavityModel")
        .def(py::init<>())
        .def_readwrite("linewidth_hz", &CavityModel::linewidth_hz)
        .def_readwrite("finesse", &CavityModel::finesse)
        .def_readwrite("fsr_hz", &CavityModel::fsr_hz)
        .def_readwrite("pzt_gain_hz_per_v", &CavityModel::pzt_gain_hz_per_v)
        .def_readwrite("pzt_bandwidth_hz", &CavityModel::pzt_bandwidth_hz)
        .def_readwrite("noise", &CavityModel::noise);

    py::class_<PdhConfig>(m, "PdhConfig")
        .def(py::init<>())
        .def_readwrite("mod_freq_hz", &PdhConfig::mod_freq_hz)
        .def_readwrite("mod_depth_rad", &PdhConfig::mod_depth_rad)
        .def_readwrite("demod_phase_rad", &PdhConfig::demod_phase_rad)
        .def_readwrite("carrier_power", &PdhConfig::carrier_power)
        .def_readwrite("sideband_power", &PdhConfig::sideband_power)
        .def_readwrite("detector_noise", &PdhConfig::detector_noise)
        .def_readwrite("intensity_noise", &PdhConfig::intensity_noise);
    m.def("pdh_error_curve", &pdh_error_curve, py::arg("config"), py::arg("cavity"),
          py::arg("detuning_hz"));
    m.def("discriminator_slope", &discriminator_slope, py::arg("config"), py::arg("cavity"));
    m.def("inner_loop_open_tf", &inner_loop_open_tf, py::arg("config"), py::arg("cavity"),
          py::arg("pid"), py::arg("fast_path"), py::arg("loop_delay_s") = 50e-9);

    py::class_<SasLine>(m, "SasLine")
        .def(py::init<>())
        .def_readwrite("center_hz", &SasLine::center_hz)
        .def_readwrite("fwhm_hz", &SasLine::fwhm_hz)
        .def_readwrite("depth", &SasLine::depth);
    py::class_<SasConfig>(m, "SasConfig")
        .def(py::init<>())
        .def_readwrite("doppler_sigma_hz", &SasConfig::doppler_sigma_hz)
        .def_readwrite("background_depth", &SasConfig::background_depth)
        .def_readwrite("lines", &SasConfig::lines)
        .def_readwrite("mod_freq_hz", &SasConfig::mod_freq_hz)
        .def_readwrite("mod_depth_hz", &SasConfig::mod_depth_hz)
        .def_readwrite("demod_phase_rad", &SasConfig::demod_phase_rad)
        .def_readwrite("lockin_bandwidth_hz", &SasConfig::lockin_bandwidth_hz)
        .def_readwrite("lock_line_index", &SasConfig::lock_line_index)
        .def_static("cs_d2_f4_lines", &SasConfig::cs_d2_f4_lines);
    m.def("sas_transmission", &sas_transmission, py::arg("config"), py::arg("detuning_hz"));
    m.def("sas_error", &sas_error, py::arg("config"), py::arg("detuning_hz"));
    m.def("sas_slope", &sas_slope, py::arg("config"));
    m.def("outer_loop_open_tf", &outer_loop_open_tf, py::arg("config"), py::arg("cavity"),
          py::arg("pid2"), py::arg("inner_unity_hint_hz") = 1.5e6);

    py::class_<EitModel>(m, "EitModel")
        .def(py::init<>())
        .def_readwrite("probe_rabi_hz", &EitModel::probe_rabi_hz)
        .def_readwrite("coupling_rabi_hz", &EitModel::coupling_rabi_hz)
        .def_readwrite("gamma_e_hz", &EitModel::gamma_e_hz)
        .def_readwrite("gamma_r_hz", &EitModel::gamma_r_hz)
        .def_readwrite("optical_depth", &EitModel::optical_depth)
        .def_readwrite("doppler_sigma_hz", &EitModel::doppler_sigma_hz)
        .def_readwrite("intensity_noise_floor", &EitModel::intensity_noise_floor);
    py::class_<OperatingPoint>(m, "OperatingPoint")
        .def(py::init<>())
        .def_readwrite("probe_detuning_hz", &OperatingPoint::probe_detuning_hz)
        .def_readwrite("coupling_detuning_hz", &OperatingPoint::coupling_detuning_hz)
        .def_static("resonant_point", &OperatingPoint::resonant_point)
        .def_static("detuned_point", &OperatingPoint::detuned_point,
                    py::arg("coupling_hz") = 2.4e6);
    m.def("eit_transmission", &eit_transmission, py::arg("model"), py::arg("probe_detuning_hz"),
          py::arg("coupling_detuning_hz"));
    m.def("transmission_slope", &transmission_slope, py::arg("model"), py::arg("op"),
          py::arg("step_hz") = 0.0);
    py::class_<ReadoutSeries>(m, "ReadoutSeries")
        .def_readonly("transmission", &ReadoutSeries::transmission)
        .def_readonly("clipped_samples", &ReadoutSeries::clipped_samples);
    m.def("simulate_readout", &simulate_readout, py::arg("freq_noise"), py::arg("model"),
          py::arg("op"));
    py::class_<ReadoutBand>(m, "ReadoutBand")
        .def(py::init<>())
        .def_readwrite("f_lo_hz", &ReadoutBand::f_lo_hz)
        .def_readwrite("f_hi_hz", &ReadoutBand::f_hi_hz)
        .def_readwrite("points", &ReadoutBand::points);
    m.def("readout_noise_psd",
          [](const PsdModel& psd, const EitModel& model, const OperatingPoint& op,
             const ReadoutBand& band, std::uint64_t seed) {
              return readout_noise_psd(psd, model, op, band, seed);
          },
          py::arg("laser_psd"), py::arg("model"), py::arg("op"),
          py::arg("band") = ReadoutBand{}, py::arg("seed") = 0x5eed);
    m.def("run_fig3_comparison", &run_fig3_comparison, py::arg("residual_psds"),
          py::arg("model"), py::arg("band") = ReadoutBand{},
          py::arg("coupling_detuning_hz") = 2.4e6, py::arg("seed") = 0x5eed);

    py::enum_<LockConfig>(m, "LockConfig")
        .value("free_run", LockConfig::free_run)
        .value("sas_only", LockConfig::sas_only)
        .value("lc_only", LockConfig::lc_only)
        .value("cascade", LockConfig::cascade)
        .value("ule_reference", LockConfig::ule_reference);

    py::class_<Rates>(m, "Rates")
        .def(py::init<>())
        .def_readwrite("fast_hz", &Rates::fast_hz)
        .def_readwrite("slow_hz", &Rates::slow_hz);

    py::class_<Scenario>(m, "Scenario")
        .def(py::init<>())
        .def_readwrite("laser_noise", &Scenario::laser_noise)
        .def_readwrite("ule_noise", &Scenario::ule_noise)
        .def_readwrite("cavity", &Scenario::cavity)
        .def_readwrite("pdh", &Scenario::pdh)
        .def_readwrite("sas", &Scenario::sas)
        .def_readwrite("pid1", &Scenario::pid1)
        .def_readwrite("pid2", &Scenario::pid2)
        .def_readwrite("pid_loose", &Scenario::pid_loose)
        .def_readwrite("fast_actuator", &Scenario::fast_actuator)
        .def_readwrite("slow_actuator", &Scenario::slow_actuator)
        .def_readwrite("rates", &Scenario::rates)
        .def_readwrite("duration_s", &Scenario::duration_s)
        .def_readwrite("seed", &Scenario::seed)
        .def_readwrite("lock_config", &Scenario::lock_config)
        .def_readwrite("loop_delay_s", &Scenario::loop_delay_s)
        .def_readwrite("outer_enable_delay_s", &Scenario::outer_enable_delay_s)
        .def_readwrite("settle_s", &Scenario::settle_s)
        .def_readwrite("loose_inner", &Scenario::loose_inner)
        .def("validate", &Scenario::validate)
        .def("inner_open_loop", &Scenario::inner_open_loop)
        .def("outer_open_loop", &Scenario::outer_open_loop)
        .def("inner_unity_gain_hz", &Scenario::inner_unity_gain_hz);

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("absolute_freq_noise", &SimResult::absolute_freq_noise)
        .def_readonly("relative_freq_noise", &SimResult::relative_freq_noise)
        .def_readonly("cavity_mode_noise", &SimResult::cavity_mode_noise)
        .def_readonly("fast_actuator_drive", &SimResult::fast_actuator_drive)
        .def_readonly("slow_actuator_drive", &SimResult::slow_actuator_drive)
        .def_readonly("saturation_events", &SimResult::saturation_events)
        .def_readonly("settle_s", &SimResult::settle_s);

    m.def("simulate", &simulate, py::arg("scenario"),
          py::call_guard<py::gil_scoped_release>());
    m.def("analytic_residual_psd", &analytic_residual_psd, py::arg("scenario"), py::arg("f_hz"));
    m.def("residual_psd", &residual_psd, py::arg("series"), py::arg("settle_s"),
          py::arg("segment_len"));

    py::class_<BeatOptions>(m, "BeatOptions")
        .def(py::init<>())
        .def_readwrite("rbw_hz", &BeatOptions::rbw_hz)
        .def_readwrite("rate_hz", &BeatOptions::rate_hz)
        .def_readwrite("fit_window_hz", &BeatOptions::fit_window_hz);
    py::class_<BeatAnalysis>(m, "BeatAnalysis")
        .def_readonly("spectrum", &BeatAnalysis::spectrum)
        .def_readonly("gaussian", &BeatAnalysis::gaussian)
        .def_readonly("lorentzian", &BeatAnalysis::lorentzian)
        .def_property_readonly("preferred",
                               [](const BeatAnalysis& b) { return b.preferred(); });
    m.def("analyze_beat", &analyze_beat, py::arg("result"), py::arg("options") = BeatOptions{},
          py::call_guard<py::gil_scoped_release>());

    py::class_<RunConfig>(m, "RunConfig")
        .def(py::init<>())
        .def_readwrite("name", &RunConfig::name)
        .def_readwrite("scenario", &RunConfig::scenario)
        .def_readwrite("eit", &RunConfig::eit)
        .def_readwrite("coupling_detuning_hz", &RunConfig::coupling_detuning_hz)
        .def_readwrite("readout_band", &RunConfig::readout_band)
        .def_readwrite("beat", &RunConfig::beat);
    m.def("write_bode_csv", &write_bode_csv, py::arg("tf"), py::arg("path"), py::arg("f_lo"),
          py::arg("f_hi"), py::arg("points") = 400);
    m.def("write_pdh_error_csv", &write_pdh_error_csv, py::arg("config"), py::arg("cavity"),
          py::arg("path"), py::arg("span_hz"), py::arg("points") = 801);
    m.def("write_sas_transmission_csv", &write_sas_transmission_csv, py::arg("config"),
          py::arg("path"), py::arg("lo_hz"), py::arg("hi_hz"), py::arg("points") = 1201);
    m.def("write_sas_error_csv", &write_sas_error_csv, py::arg("config"), py::arg("path"),
          py::arg("lo_hz"), py::arg("hi_hz"), py::arg("points") = 801);
    m.def("write_psd_model_csv", &write_psd_model_csv, py::arg("model"), py::arg("path"),
          py::arg("f_lo"), py::arg("f_hi"), py::arg("points") = 400);
    m.def("load_config", &load_config, py::arg("path"));
    m.def("parse_config", &parse_config, py::arg("json_text"), py::arg("origin") = "string");
    m.def("dump_config", &dump_config, py::arg("config"));
    m.def("default_config_template", &default_config_template);
}
