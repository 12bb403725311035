#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lockloop/config.hpp"
#include "lockloop/csvio.hpp"
#include "lockloop/errors.hpp"
#include "lockloop/sweeps.hpp"

#include <filesystem>
#include "test_support.hpp"

using namespace lockloop;

TEST_CASE("dump/parse stabilizes after one round trip") {
    const auto cfg = testing::small_config();
    const std::string d1 = dump_config(cfg);
    const auto c2 = parse_config(d1, "mem");
    const std::string d2 = dump_config(c2);
    const auto c3 = parse_config(d2, "mem");
    CHECK(d2 == dump_config(c3));

    CHECK(c2.scenario.seed == cfg.scenario.seed);
    CHECK(c2.scenario.lock_config == cfg.scenario.lock_config);
    CHECK(c2.scenario.laser_noise == cfg.scenario.laser_noise);
    CHECK(c2.scenario.cavity.noise == cfg.scenario.cavity.noise);
    CHECK(c2.scenario.pid1.kp == cfg.scenario.pid1.kp);
    CHECK(c2.scenario.sas.lines.size() == cfg.scenario.sas.lines.size());
    CHECK(c2.eit.coupling_rabi_hz == cfg.eit.coupling_rabi_hz);
    CHECK(c2.beat.rbw_hz == cfg.beat.rbw_hz);
}

TEST_CASE("parse errors carry a line number") {
    const std::string broken = "{\n  \"meta\": {},\n  \"oops\"\n}\n";
    try {
        parse_config(broken, "broken.json");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("broken.json:") != std::string::npos);
        // the dangling key is on line 3/4; the parser must say so
        CHECK((msg.find(":3:") != std::string::npos || msg.find(":4:") != std::string::npos));
    }
}

TEST_CASE("missing sections are named") {
    try {
        parse_config("{\"meta\": {\"name\": \"x\"}}", "mem");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("laser") != std::string::npos);
    }
}

TEST_CASE("unknown lock_config lists the valid names") {
    auto cfg = testing::small_config();
    std::string text = dump_config(cfg);
    const auto pos = text.find("\"cascade\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 9, "\"sideways\"");
    try {
        parse_config(text, "mem");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("ule_reference") != std::string::npos);
    }
}

TEST_CASE("semantic validation failures become ConfigError") {
    auto cfg = testing::small_config();
    cfg.scenario.cavity.fsr_hz *= 1.01;  // breaks fsr = finesse * linewidth
    const std::string text = dump_config(cfg);
    CHECK_THROWS_AS(parse_config(text, "mem"), ConfigError);
}

TEST_CASE("load_config reports unreadable files as ConfigError") {
    CHECK_THROWS_AS(load_config("/nonexistent/nowhere.json"), ConfigError);
}

TEST_CASE("sweep CSV exports carry the documented headers") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "lockloop_sweeps";
    fs::create_directories(dir);
    const auto cfg = testing::small_config();
    const auto& sc = cfg.scenario;

    const auto bode_path = (dir / "bode.csv").string();
    write_bode_csv(sc.inner_open_loop(), bode_path, 10.0, 1e6, 50);
    CHECK(read_text_file(bode_path).find("f_hz,mag_db,phase_deg\n") != std::string::npos);

    const auto pdh_path = (dir / "pdh.csv").string();
    write_pdh_error_csv(sc.pdh, sc.cavity, pdh_path, 2e7, 101);
    CHECK(read_text_file(pdh_path).find("detuning_hz,error_v\n") != std::string::npos);

    const auto sas_t = (dir / "sas_t.csv").string();
    write_sas_transmission_csv(sc.sas, sas_t, -6e8, 2e8, 101);
    CHECK(read_text_file(sas_t).find("detuning_hz,transmission\n") != std::string::npos);

    const auto sas_e = (dir / "sas_e.csv").string();
    write_sas_error_csv(sc.sas, sas_e, -3e7, 3e7, 101);
    CHECK(read_text_file(sas_e).find("detuning_hz,error_v\n") != std::string::npos);

    const auto psd_path = (dir / "psd.csv").string();
    write_psd_model_csv(sc.laser_noise, psd_path, 1.0, 1e5, 60);
    CHECK(read_text_file(psd_path).find("f_hz,psd_hz2_per_hz\n") != std::string::npos);
    fs::remove_all(dir);
}
