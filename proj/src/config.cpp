#include "lockloop/config.hpp"

#include <json.hpp>

#include "lockloop/csvio.hpp"
#include "lockloop/errors.hpp"

namespace lockloop {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ": " + what);
}

double get_num(const ordered_json& j, const std::string& key, const std::string& origin) {
    if (!j.contains(key)) fail(origin, "missing key '" + key + "'");
    if (!j.at(key).is_number()) fail(origin, "key '" + key + "' must be a number");
    return j.at(key).get<double>();
}

double get_num_or(const ordered_json& j, const std::string& key, double fallback) {
    return j.contains(key) ? j.at(key).get<double>() : fallback;
}

PsdModel parse_psd(const ordered_json& j, const std::string& origin) {
    PsdModel m;
    m.floor = get_num_or(j, "floor_hz2_per_hz", 0.0);
    if (j.contains("segments")) {
        for (const auto& s : j.at("segments")) {
            PsdSegment seg;
            seg.f_lo = get_num(s, "f_lo_hz", origin);
            seg.f_hi = get_num(s, "f_hi_hz", origin);
            seg.exponent = get_num(s, "exponent", origin);
            seg.amplitude_ref = get_num(s, "amplitude_ref_hz2_per_hz", origin);
            seg.f_ref = get_num(s, "f_ref_hz", origin);
            m.segments.push_back(seg);
        }
    }
    try {
        m.validate();
    } catch (const std::exception& e) {
        fail(origin, e.what());
    }
    return m;
}

ordered_json dump_psd(const PsdModel& m) {
    ordered_json j;
    auto segs = ordered_json::array();
    for (const auto& s : m.segments)
        segs.push_back({{"f_lo_hz", s.f_lo},
                        {"f_hi_hz", s.f_hi},
                        {"exponent", s.exponent},
                        {"amplitude_ref_hz2_per_hz", s.amplitude_ref},
                        {"f_ref_hz", s.f_ref}});
    j["segments"] = segs;
    j["floor_hz2_per_hz"] = m.floor;
    return j;
}

PidConfig parse_pid(const ordered_json& j, const std::string& origin) {
    PidConfig p;
    p.kp = get_num_or(j, "kp", 0.0);
    p.ki = get_num_or(j, "ki_per_s", 0.0);
    p.kd = get_num_or(j, "kd_s", 0.0);
    p.derivative_rolloff_hz = get_num(j, "derivative_rolloff_hz", origin);
    p.output_low_pass_hz = get_num(j, "output_low_pass_hz", origin);
    p.saturation = get_num_or(j, "saturation_v", std::numeric_limits<double>::infinity());
    return p;
}

ordered_json dump_pid(const PidConfig& p) {
    ordered_json j;
    j["kp"] = p.kp;
    j["ki_per_s"] = p.ki;
    j["kd_s"] = p.kd;
    j["derivative_rolloff_hz"] = p.derivative_rolloff_hz;
    j["output_low_pass_hz"] = p.output_low_pass_hz;
    if (std::isfinite(p.saturation)) j["saturation_v"] = p.saturation;
    return j;
}

TransferFunction parse_actuator(const ordered_json& j, const std::string& origin) {
    return TransferFunction::low_pass(get_num(j, "bandwidth_hz", origin),
                                      get_num(j, "gain_hz_per_v", origin));
}

ordered_json dump_actuator(const TransferFunction& tf) {
    // actuators are one-pole low-passes by construction
    const double wc = -tf.poles.at(0).real();
    ordered_json j;
    j["gain_hz_per_v"] = tf.gain / wc;
    j["bandwidth_hz"] = wc / (2.0 * 3.14159265358979323846);
    return j;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& origin) {
    ordered_json root;
    try {
        root = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line number for the diagnostic
        std::size_t line = 1;
        for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
    }

    RunConfig cfg;
    try {
        if (root.contains("meta") && root["meta"].contains("name"))
            cfg.name = root["meta"]["name"].get<std::string>();

        auto need = [&](const char* key) -> const ordered_json& {
            if (!root.contains(key)) fail(origin, std::string("missing section '") + key + "'");
            return root.at(key);
        };

        Scenario& sc = cfg.scenario;
        sc.laser_noise = parse_psd(need("laser").at("noise"), origin + "/laser");
        sc.ule_noise = parse_psd(need("ule").at("noise"), origin + "/ule");

        const auto& cav = need("cavity");
        sc.cavity.linewidth_hz = get_num(cav, "linewidth_hz", origin);
        sc.cavity.finesse = get_num(cav, "finesse", origin);
        sc.cavity.fsr_hz = get_num(cav, "fsr_hz", origin);
        sc.cavity.pzt_gain_hz_per_v = get_num(cav, "pzt_gain_hz_per_v", origin);
        sc.cavity.pzt_bandwidth_hz = get_num(cav, "pzt_bandwidth_hz", origin);
        sc.cavity.noise = parse_psd(cav.at("noise"), origin + "/cavity");

        const auto& pdh = need("pdh");
        sc.pdh.mod_freq_hz = get_num(pdh, "mod_freq_hz", origin);
        sc.pdh.mod_depth_rad = get_num(pdh, "mod_depth_rad", origin);
        sc.pdh.demod_phase_rad = get_num(pdh, "demod_phase_rad", origin);
        sc.pdh.carrier_power = get_num(pdh, "carrier_power", origin);
        sc.pdh.sideband_power = get_num(pdh, "sideband_power", origin);
        if (pdh.contains("slope_override_v_per_hz"))
            sc.pdh.slope_override_v_per_hz = pdh.at("slope_override_v_per_hz").get<double>();
        sc.pdh.detector_noise = parse_psd(pdh.at("detector_noise"), origin + "/pdh");
        sc.pdh.intensity_noise = parse_psd(pdh.at("intensity_noise"), origin + "/pdh");

        const auto& sas = need("sas");
        sc.sas.doppler_sigma_hz = get_num(sas, "doppler_sigma_hz", origin);
        sc.sas.background_depth = get_num(sas, "background_depth", origin);
        sc.sas.lines.clear();
        for (const auto& l : sas.at("lines"))
            sc.sas.lines.push_back({get_num(l, "center_hz", origin), get_num(l, "fwhm_hz", origin),
                                    get_num(l, "depth", origin)});
        sc.sas.mod_freq_hz = get_num(sas, "mod_freq_hz", origin);
        sc.sas.mod_depth_hz = get_num(sas, "mod_depth_hz", origin);
        sc.sas.demod_phase_rad = get_num(sas, "demod_phase_rad", origin);
        sc.sas.lockin_bandwidth_hz = get_num(sas, "lockin_bandwidth_hz", origin);
        sc.sas.lock_line_index = static_cast<std::size_t>(get_num(sas, "lock_line_index", origin));

        sc.pid1 = parse_pid(need("pid1"), origin + "/pid1");
        sc.pid2 = parse_pid(need("pid2"), origin + "/pid2");
        sc.pid_loose = parse_pid(need("pid_loose"), origin + "/pid_loose");
        sc.fast_actuator = parse_actuator(need("fast_actuator"), origin + "/fast_actuator");
        sc.slow_actuator = parse_actuator(need("slow_actuator"), origin + "/slow_actuator");
        if (root.contains("aux")) {
            AuxPath aux;
            aux.pid = parse_pid(root["aux"].at("pid"), origin + "/aux");
            aux.actuator = parse_actuator(root["aux"].at("actuator"), origin + "/aux");
            sc.aux = aux;
        }

        const auto& rates = need("rates");
        sc.rates.fast_hz = get_num(rates, "fast_hz", origin);
        sc.rates.slow_hz = get_num(rates, "slow_hz", origin);

        const auto& sim = need("sim");
        sc.duration_s = get_num(sim, "duration_s", origin);
        sc.seed = static_cast<std::uint64_t>(get_num(sim, "seed", origin));
        sc.lock_config = lock_config_from_string(sim.at("lock_config").get<std::string>());
        sc.loop_delay_s = get_num(sim, "loop_delay_s", origin);
        sc.outer_enable_delay_s = get_num(sim, "outer_enable_delay_s", origin);
        sc.settle_s = get_num(sim, "settle_s", origin);

        const auto& eit = need("eit");
        cfg.eit.probe_rabi_hz = get_num(eit, "probe_rabi_hz", origin);
        cfg.eit.coupling_rabi_hz = get_num(eit, "coupling_rabi_hz", origin);
        cfg.eit.gamma_e_hz = get_num(eit, "gamma_e_hz", origin);
        cfg.eit.gamma_r_hz = get_num(eit, "gamma_r_hz", origin);
        cfg.eit.optical_depth = get_num(eit, "optical_depth", origin);
        cfg.eit.doppler_sigma_hz = get_num_or(eit, "doppler_sigma_hz", 0.0);
        cfg.eit.intensity_noise_floor =
            parse_psd(eit.at("intensity_noise_floor"), origin + "/eit");
        cfg.coupling_detuning_hz = get_num_or(eit, "coupling_detuning_hz", 2.4e6);
        if (eit.contains("band")) {
            cfg.readout_band.f_lo_hz = get_num(eit["band"], "f_lo_hz", origin);
            cfg.readout_band.f_hi_hz = get_num(eit["band"], "f_hi_hz", origin);
            cfg.readout_band.points =
                static_cast<std::size_t>(get_num_or(eit["band"], "points", 61));
        }

        if (root.contains("beat")) {
            const auto& b = root["beat"];
            cfg.beat.rbw_hz = get_num_or(b, "rbw_hz", 15.0);
            cfg.beat.rate_hz = get_num_or(b, "rate_hz", 10e6);
            cfg.beat.fit_window_hz = get_num_or(b, "fit_window_hz", 0.0);
        }

        cfg.eit.validate();
        cfg.scenario.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()).starts_with(origin)
                              ? std::string(e.what())
                              : origin + ": " + e.what());
    } catch (const std::exception& e) {
        fail(origin, e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    return parse_config(text, path);
}

std::string dump_config(const RunConfig& cfg) {
    const Scenario& sc = cfg.scenario;
    ordered_json j;
    j["meta"] = {{"name", cfg.name}, {"format", "lockloop-scenario-v1"}};
    j["laser"] = {{"noise", dump_psd(sc.laser_noise)}};
    j["ule"] = {{"noise", dump_psd(sc.ule_noise)}};
    j["cavity"] = {{"linewidth_hz", sc.cavity.linewidth_hz},
                   {"finesse", sc.cavity.finesse},
                   {"fsr_hz", sc.cavity.fsr_hz},
                   {"pzt_gain_hz_per_v", sc.cavity.pzt_gain_hz_per_v},
                   {"pzt_bandwidth_hz", sc.cavity.pzt_bandwidth_hz},
                   {"noise", dump_psd(sc.cavity.noise)}};
    ordered_json pdh = {{"mod_freq_hz", sc.pdh.mod_freq_hz},
                        {"mod_depth_rad", sc.pdh.mod_depth_rad},
                        {"demod_phase_rad", sc.pdh.demod_phase_rad},
                        {"carrier_power", sc.pdh.carrier_power},
                        {"sideband_power", sc.pdh.sideband_power},
                        {"detector_noise", dump_psd(sc.pdh.detector_noise)},
                        {"intensity_noise", dump_psd(sc.pdh.intensity_noise)}};
    if (sc.pdh.slope_override_v_per_hz)
        pdh["slope_override_v_per_hz"] = *sc.pdh.slope_override_v_per_hz;
    j["pdh"] = pdh;
    auto lines = ordered_json::array();
    for (const auto& l : sc.sas.lines)
        lines.push_back({{"center_hz", l.center_hz}, {"fwhm_hz", l.fwhm_hz}, {"depth", l.depth}});
    j["sas"] = {{"doppler_sigma_hz", sc.sas.doppler_sigma_hz},
                {"background_depth", sc.sas.background_depth},
                {"lines", lines},
                {"mod_freq_hz", sc.sas.mod_freq_hz},
                {"mod_depth_hz", sc.sas.mod_depth_hz},
                {"demod_phase_rad", sc.sas.demod_phase_rad},
                {"lockin_bandwidth_hz", sc.sas.lockin_bandwidth_hz},
                {"lock_line_index", sc.sas.lock_line_index}};
    j["pid1"] = dump_pid(sc.pid1);
    j["pid2"] = dump_pid(sc.pid2);
    j["pid_loose"] = dump_pid(sc.pid_loose);
    j["fast_actuator"] = dump_actuator(sc.fast_actuator);
    j["slow_actuator"] = dump_actuator(sc.slow_actuator);
    if (sc.aux)
        j["aux"] = {{"pid", dump_pid(sc.aux->pid)}, {"actuator", dump_actuator(sc.aux->actuator)}};
    j["rates"] = {{"fast_hz", sc.rates.fast_hz}, {"slow_hz", sc.rates.slow_hz}};
    j["sim"] = {{"duration_s", sc.duration_s},
                {"seed", sc.seed},
                {"lock_config", to_string(sc.lock_config)},
                {"loop_delay_s", sc.loop_delay_s},
                {"outer_enable_delay_s", sc.outer_enable_delay_s},
                {"settle_s", sc.settle_s}};
    j["eit"] = {{"probe_rabi_hz", cfg.eit.probe_rabi_hz},
                {"coupling_rabi_hz", cfg.eit.coupling_rabi_hz},
                {"gamma_e_hz", cfg.eit.gamma_e_hz},
                {"gamma_r_hz", cfg.eit.gamma_r_hz},
                {"optical_depth", cfg.eit.optical_depth},
                {"doppler_sigma_hz", cfg.eit.doppler_sigma_hz},
                {"intensity_noise_floor", dump_psd(cfg.eit.intensity_noise_floor)},
                {"coupling_detuning_hz", cfg.coupling_detuning_hz},
                {"band",
                 {{"f_lo_hz", cfg.readout_band.f_lo_hz},
                  {"f_hi_hz", cfg.readout_band.f_hi_hz},
                  {"points", cfg.readout_band.points}}}};
    j["beat"] = {{"rbw_hz", cfg.beat.rbw_hz},
                 {"rate_hz", cfg.beat.rate_hz},
                 {"fit_window_hz", cfg.beat.fit_window_hz}};
    return j.dump(2) + "\n";
}

}  // namespace lockloop
