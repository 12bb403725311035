#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lockloop/calibrate.hpp"
#include "lockloop/cascade.hpp"
#include "lockloop/config.hpp"
#include "lockloop/csvio.hpp"
#include "lockloop/errors.hpp"

namespace {

constexpr const char* kVersion = "lockloop 0.1.0";
namespace fs = std::filesystem;
using namespace lockloop;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
};

RunConfig load(const CommonArgs& args) {
    if (args.config_path.empty())
        throw ConfigError("no config given (use --config or LOCKLOOP_CONFIG)");
    RunConfig cfg = load_config(args.config_path);
    if (args.seed_override >= 0)
        cfg.scenario.seed = static_cast<std::uint64_t>(args.seed_override);
    return cfg;
}

Manifest start_manifest(const std::string& command, const CommonArgs& args,
                        const RunConfig& cfg) {
    Manifest m;
    m.command = command;
    m.config_path = args.config_path;
    m.output_dir = args.out_dir;
    m.config_sha256 = sha256_hex(read_text_file(args.config_path));
    m.seed = cfg.scenario.seed;
    m.tool_version = kVersion;
    return m;
}

void emit_csv(Manifest& manifest, const std::string& out_dir, const std::string& name,
              const std::vector<CsvColumn>& cols, const std::vector<std::string>& comments = {}) {
    const auto path = (fs::path(out_dir) / name).string();
    write_csv(path, cols, comments);
    manifest.emitted_files.push_back({name, sha256_hex(read_text_file(path))});
}

void emit_text(Manifest& manifest, const std::string& out_dir, const std::string& name,
               const std::string& content) {
    const auto path = (fs::path(out_dir) / name).string();
    write_text_file(path, content);
    manifest.emitted_files.push_back({name, sha256_hex(content)});
}

std::size_t auto_segment(std::size_t n) {
    std::size_t seg = 1024;
    while (seg * 8 <= n && seg < (std::size_t{1} << 19)) seg <<= 1;
    return seg;
}

int cmd_psd(const CommonArgs& args, const std::string& lock_name) {
    RunConfig cfg = load(args);
    Scenario sc = cfg.scenario;
    if (!lock_name.empty()) sc.lock_config = lock_config_from_string(lock_name);
    auto manifest = start_manifest("psd", args, cfg);

    const auto result = simulate(sc);
    const auto tail = result.absolute_freq_noise.tail_from(result.settle_s);
    const auto spec = welch_psd(tail, auto_segment(tail.size()));

    std::vector<CsvColumn> cols(2);
    cols[0].name = "f_hz";
    cols[1].name = "psd_hz2_per_hz";
    for (std::size_t i = 1; i < spec.frequencies.size(); ++i) {
        cols[0].values.push_back(spec.frequencies[i]);
        cols[1].values.push_back(spec.values[i]);
    }
    emit_csv(manifest, args.out_dir, "psd_" + to_string(sc.lock_config) + ".csv", cols,
             {"lock_config=" + to_string(sc.lock_config),
              "welch_averages=" + std::to_string(spec.averaging)});
    write_manifest(args.out_dir, manifest);
    return 0;
}

int cmd_beat(const CommonArgs& args, const std::string& locks_csv, double rbw_override) {
    RunConfig cfg = load(args);
    auto manifest = start_manifest("beat", args, cfg);
    BeatOptions beat = cfg.beat;
    if (rbw_override > 0.0) beat.rbw_hz = rbw_override;

    std::vector<std::string> names;
    {
        std::stringstream ss(locks_csv);
        std::string item;
        while (std::getline(ss, item, ',')) names.push_back(item);
    }
    std::vector<Scenario> scenarios;
    for (const auto& nm : names) {
        Scenario sc = cfg.scenario;
        sc.lock_config = lock_config_from_string(nm);
        scenarios.push_back(sc);
    }
    const auto results = run_comparison(scenarios);

    std::ostringstream report;
    bool fit_trouble = false;
    for (const auto& [lock, result] : results) {
        const auto analysis = analyze_beat(result, beat);
        std::vector<CsvColumn> cols(2);
        cols[0].name = "offset_hz";
        cols[1].name = "power_db";
        const double peak =
            *std::max_element(analysis.spectrum.values.begin(), analysis.spectrum.values.end());
        for (std::size_t i = 0; i < analysis.spectrum.frequencies.size(); ++i) {
            cols[0].values.push_back(analysis.spectrum.frequencies[i]);
            cols[1].values.push_back(
                10.0 * std::log10(std::max(analysis.spectrum.values[i] / peak, 1e-300)));
        }
        emit_csv(manifest, args.out_dir, "beat_" + to_string(lock) + ".csv", cols,
                 {"rbw_hz=" + std::to_string(analysis.spectrum.rbw_hz),
                  "averages=" + std::to_string(analysis.spectrum.averaging)});

        const auto& best = analysis.preferred();
        report << "[" << to_string(lock) << "]\n"
               << "model = " << (best.model == LineModel::gaussian ? "gaussian" : "lorentzian")
               << "\ncenter_hz = " << best.center_hz << "\nfwhm_hz = " << best.fwhm_hz
               << "\nresidual_rms = " << best.residual_rms
               << "\ngaussian_residual_rms = " << analysis.gaussian.residual_rms
               << "\nlorentzian_residual_rms = " << analysis.lorentzian.residual_rms
               << "\nconverged = " << (best.converged ? "yes" : "no") << "\n\n";
        if (!best.converged) fit_trouble = true;
    }
    emit_text(manifest, args.out_dir, "fits.txt", report.str());
    write_manifest(args.out_dir, manifest);
    if (fit_trouble) {
        std::cerr << "beat: a lineshape fit did not converge (outputs retained)\n";
        return 4;
    }
    return 0;
}

int cmd_readout(const CommonArgs& args, const std::string& band_spec) {
    RunConfig cfg = load(args);
    auto manifest = start_manifest("readout", args, cfg);
    ReadoutBand band = cfg.readout_band;
    if (!band_spec.empty()) {
        const auto colon = band_spec.find(':');
        if (colon == std::string::npos)
            throw ConfigError("--band expects LO:HI in Hz, got '" + band_spec + "'");
        band.f_lo_hz = std::stod(band_spec.substr(0, colon));
        band.f_hi_hz = std::stod(band_spec.substr(colon + 1));
        if (!(band.f_lo_hz > 0.0) || !(band.f_hi_hz > band.f_lo_hz))
            throw ConfigError("--band expects 0 < LO < HI");
    }

    // residual laser PSDs on a wide grid from the closed-loop analytics
    std::map<std::string, SpectrumSeries> residuals;
    for (const auto lock :
         {LockConfig::sas_only, LockConfig::cascade, LockConfig::ule_reference}) {
        Scenario sc = cfg.scenario;
        sc.lock_config = lock;
        SpectrumSeries psd;
        psd.kind = SpectrumKind::psd;
        const double lo = band.f_lo_hz / 10.0;
        const double hi = std::min(band.f_hi_hz * 10.0, sc.rates.fast_hz / 4.0);
        const std::size_t pts = 241;
        for (std::size_t i = 0; i < pts; ++i) {
            const double f = lo * std::pow(hi / lo, static_cast<double>(i) / (pts - 1));
            psd.frequencies.push_back(f);
            psd.values.push_back(analytic_residual_psd(sc, f));
        }
        residuals[to_string(lock)] = psd;
    }

    const auto curves = run_fig3_comparison(residuals, cfg.eit, band, cfg.coupling_detuning_hz,
                                            cfg.scenario.seed);

    std::vector<CsvColumn> table;
    table.push_back({"f_hz", curves.begin()->second.frequencies});
    for (const auto& [key, curve] : curves) {
        emit_csv(manifest, args.out_dir, "readout_" + key + ".csv",
                 {{"f_hz", curve.frequencies}, {"readout_db_re_floor", curve.values}});
        table.push_back({key + "_db", curve.values});
    }
    emit_csv(manifest, args.out_dir, "readout_table.csv", table);

    // the three paper deltas over the band
    auto max_gap = [&](const std::string& a, const std::string& b) {
        const auto& ca = curves.at(a);
        const auto& cb = curves.at(b);
        double gap = -1e300;
        for (std::size_t i = 0; i < ca.values.size(); ++i)
            gap = std::max(gap, ca.values[i] - cb.values[i]);
        return gap;
    };
    auto max_abs_gap = [&](const std::string& a, const std::string& b) {
        const auto& ca = curves.at(a);
        const auto& cb = curves.at(b);
        double gap = 0.0;
        for (std::size_t i = 0; i < ca.values.size(); ++i)
            gap = std::max(gap, std::abs(ca.values[i] - cb.values[i]));
        return gap;
    };
    std::ostringstream summary;
    summary << "band_hz = " << band.f_lo_hz << ":" << band.f_hi_hz << "\n"
            << "cascade_vs_ule_max_abs_gap_resonant_db = "
            << max_abs_gap("cascade_resonant", "ule_reference_resonant") << "\n"
            << "cascade_vs_ule_max_abs_gap_detuned_db = "
            << max_abs_gap("cascade_detuned", "ule_reference_detuned") << "\n"
            << "sas_minus_cascade_max_gap_resonant_db = "
            << max_gap("sas_only_resonant", "cascade_resonant") << "\n"
            << "sas_minus_cascade_max_gap_detuned_db = "
            << max_gap("sas_only_detuned", "cascade_detuned") << "\n";
    emit_text(manifest, args.out_dir, "summary.txt", summary.str());
    write_manifest(args.out_dir, manifest);
    return 0;
}

int cmd_calibrate(const CommonArgs& args, double target_fwhm, bool fast) {
    CalibrationReport rep = calibrate_default(target_fwhm, fast);
    Manifest manifest;
    manifest.command = "calibrate";
    manifest.config_path = "(template)";
    manifest.output_dir = args.out_dir;
    manifest.seed = rep.config.scenario.seed;
    manifest.tool_version = kVersion;
    emit_text(manifest, args.out_dir, "default.json", dump_config(rep.config));
    emit_text(manifest, args.out_dir, "calibration_report.txt", rep.summary());
    write_manifest(args.out_dir, manifest);
    std::cout << rep.summary();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascade-locked laser noise simulator and analysis toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonArgs args;
    std::string lock_name;
    std::string locks_csv = "free_run,sas_only,lc_only,cascade";
    std::string band_spec;
    double rbw_override = 0.0;
    double target_fwhm = 53e3;
    bool fast_calibration = false;

    auto add_common = [&](CLI::App* sub, bool need_config) {
        auto* copt = sub->add_option("--config", args.config_path, "scenario config file");
        copt->envname("LOCKLOOP_CONFIG");
        if (need_config) copt->check(CLI::ExistingFile);
        sub->add_option("--out", args.out_dir, "output directory");
        sub->add_option("--seed", args.seed_override, "override the scenario seed");
    };

    auto* psd = app.add_subcommand("psd", "residual frequency-noise PSD for one lock config");
    add_common(psd, true);
    psd->add_option("--lock", lock_name,
                    "lock config (free_run, sas_only, lc_only, cascade, ule_reference)");

    auto* beat = app.add_subcommand("beat", "beat spectra and lineshape fits per lock config");
    add_common(beat, true);
    beat->add_option("--locks", locks_csv, "comma-separated lock configs to compare");
    beat->add_option("--rbw", rbw_override, "analysis resolution bandwidth in Hz");

    auto* readout = app.add_subcommand("readout", "atomic-superhet readout-noise comparison");
    add_common(readout, true);
    readout->add_option("--band", band_spec, "readout band LO:HI in Hz (default 10e3:100e3)");

    auto* calibrate = app.add_subcommand("calibrate", "regenerate the default calibration");
    add_common(calibrate, false);
    calibrate->add_option("--target-fwhm", target_fwhm, "cascade linewidth target in Hz");
    calibrate->add_flag("--fast", fast_calibration, "coarse bisection (for tests)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 2;
    }

    try {
        if (psd->parsed()) return cmd_psd(args, lock_name);
        if (beat->parsed()) return cmd_beat(args, locks_csv, rbw_override);
        if (readout->parsed()) return cmd_readout(args, band_spec);
        if (calibrate->parsed()) return cmd_calibrate(args, target_fwhm, fast_calibration);
    } catch (const LoopInstabilityError& e) {
        std::cerr << "instability in the " << e.loop_name << " loop: " << e.what() << "\n";
        return 3;
    } catch (const AnalysisError& e) {
        std::cerr << "analysis failed: " << e.what() << "\n";
        return 4;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "argument error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
