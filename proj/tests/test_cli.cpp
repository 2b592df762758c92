#include <doctest.h>

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "bench_config.hpp"
#include "commands.hpp"
#include "ip3lab/io.hpp"

using namespace ip3lab;
using namespace ip3lab::cli;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string output;  // stdout and stderr interleaved
};

Run run_cli(const std::string& args) {
    const std::string cmd = std::string("'") + IP3LAB_CLI_PATH + "' " + args + " 2>&1";
    Run r;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

/// Fresh scratch directory per call, removed with the object.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("ip3lab_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return "'" + path.string() + "'"; }
};

void check_same(const BenchConfig& a, const BenchConfig& b) {
    CHECK(a.tones == b.tones);
    CHECK(a.sweep_start_dbm == b.sweep_start_dbm);
    CHECK(a.sweep_stop_dbm == b.sweep_stop_dbm);
    CHECK(a.sweep_step_db == b.sweep_step_db);
    CHECK(a.model.b1 == doctest::Approx(b.model.b1).epsilon(1e-15));
    CHECK(a.model.b3 == doctest::Approx(b.model.b3).epsilon(1e-15));
    CHECK(a.model.b5 == b.model.b5);
    CHECK(a.model.noise_density_dbm_hz == b.model.noise_density_dbm_hz);
    CHECK(a.model.clip_amplitude == b.model.clip_amplitude);
    REQUIRE(a.chain.size() == b.chain.size());
    for (std::size_t i = 0; i < a.chain.size(); ++i) CHECK(a.chain[i].index() == b.chain[i].index());
    CHECK(a.threads == b.threads);
    CHECK(a.cal_gains_db == b.cal_gains_db);
    CHECK(a.cal_bench.path_loss_db == b.cal_bench.path_loss_db);
    CHECK(a.cal_bench.tx_power_at_0db_dbm == b.cal_bench.tx_power_at_0db_dbm);
    CHECK(a.cal_bench.rx_full_scale_dbm == b.cal_bench.rx_full_scale_dbm);
    CHECK(a.cal_bench.rx_noise_density_dbm_hz == b.cal_bench.rx_noise_density_dbm_hz);
    CHECK(a.cal_bench.tone_offset_hz == b.cal_bench.tone_offset_hz);
    CHECK(a.estimate.mode == b.estimate.mode);
    CHECK(a.estimate.region.noise_margin_db == b.estimate.region.noise_margin_db);
    CHECK(a.estimate.region.compression_margin_db == b.estimate.region.compression_margin_db);
    CHECK(a.out_dir == b.out_dir);
}

std::string config_error(const std::string& yaml) {
    try {
        parse_bench_config(yaml);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "no error";
}

}  // namespace

TEST_CASE("shipped default config equals the built-in defaults") {
    const auto file = load_bench_config(IP3LAB_DEFAULT_CONFIG);
    check_same(file, default_bench_config());
    check_same(parse_bench_config(""), default_bench_config());
    const auto d = default_bench_config();
    CHECK(d.sweep_step_db == 2.0);
    CHECK(sweep_point_count(d.sweep_start_dbm, d.sweep_stop_dbm, d.sweep_step_db) >= kMinSweepPoints);
    CHECK(std::abs(analytic_iip3(d.model).iip3_dbm) < 1e-12);
    CHECK(std::abs(d.model.gain_db() - 20.0) < 1e-12);
}

TEST_CASE("config parsing") {
    SUBCASE("overrides") {
        const auto c = parse_bench_config(
            "bench: {seed: 9}\n"
            "model:\n  b1_linear: 4\n  b3: -2\n  clip_amplitude: 0.7\n"
            "chain: [{attenuator: {loss_db: 3}}, dut, {gain: {gain_db: 70}}]\n"
            "estimate: {mode: free}\n");
        CHECK(c.tones.rng_seed == 9);
        CHECK(c.model.b1 == 4.0);
        CHECK(c.model.b3 == -2.0);
        CHECK(c.model.clip_amplitude == 0.7);
        REQUIRE(c.chain.size() == 3);
        CHECK(std::get<stage::Attenuator>(c.chain[0]).loss_db == 3.0);
        CHECK(std::get<stage::Dut>(c.chain[1]).model == c.model);
        CHECK(std::get<stage::Gain>(c.chain[2]).gain_db == 70.0);
        CHECK(c.estimate.mode == FitMode::free);
    }
    SUBCASE("unknown keys name the key and line") {
        const auto msg = config_error("bench:\n  seed: 1\n  sede: 2\n");
        CHECK(msg.find("sede") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(config_error("nonsense: 1\n").find("nonsense") != std::string::npos);
    }
    SUBCASE("conflicting and invalid values") {
        CHECK(config_error("model: {b3: -1, iip3_dbm: 3}\n").find("iip3_dbm") != std::string::npos);
        CHECK(config_error("model: {b1_db: 3, b1_linear: 2}\n").find("b1") != std::string::npos);
        CHECK(config_error("spectrum: {window: blackman}\n").find("window") != std::string::npos);
        CHECK(config_error("sweep: {step_db: -2}\n").find("step") != std::string::npos);
        CHECK(config_error("spectrum: {fft_size: 1000}\n").find("fft_size") != std::string::npos);
        CHECK(config_error("chain: [{attenuator: {loss_db: -1}}]\n").find("chain") != std::string::npos);
        CHECK(config_error("tones: {f1_offset_hz: 1e6, f2_offset_hz: 1e6}\n").find("tones") != std::string::npos);
        CHECK(config_error("bench: {seed: abc}\n").find("seed") != std::string::npos);
        CHECK_THROWS_AS(parse_bench_config("bench: [unclosed\n"), ConfigError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_bench_config("/nonexistent/bench.yaml"), IoError);
    }
}

TEST_CASE("simulate-sweep writes a deterministic 10-point CSV") {
    TempDir dir("sweep");
    const auto first = run_cli("simulate-sweep --out-dir " + dir.str());
    REQUIRE(first.code == 0);
    const auto csv = load_text(dir.path / kSweepFile);
    std::istringstream is(csv);
    const auto data = read_sweep_csv(is);
    CHECK(data.points.size() == 10);
    std::size_t rows = 0;
    std::istringstream lines(csv);
    std::string line;
    while (std::getline(lines, line))
        if (!line.empty() && line[0] != '#' && line != kSweepCsvHeader) {
            CHECK(std::count(line.begin(), line.end(), ',') == 5);
            ++rows;
        }
    CHECK(rows == 10);

    REQUIRE(run_cli("simulate-sweep --out-dir " + dir.str()).code == 0);
    CHECK(load_text(dir.path / kSweepFile) == csv);

    REQUIRE(run_cli("simulate-sweep --seed 2 --out-dir " + dir.str()).code == 0);
    CHECK(load_text(dir.path / kSweepFile) != csv);
}

TEST_CASE("exit codes") {
    TempDir dir("codes");
    const auto missing = run_cli("simulate-sweep --config /nonexistent/bench.yaml --out-dir " + dir.str());
    CHECK(missing.code == kExitIo);
    CHECK(missing.output.find("file not found") != std::string::npos);

    CHECK(run_cli("").code == kExitUsage);
    CHECK(run_cli("frobnicate").code == kExitUsage);
    CHECK(run_cli("estimate").code == kExitUsage);
    CHECK(run_cli("full-run --mode sideways").code == kExitUsage);
    CHECK(run_cli("estimate " + dir.str() + "/nothing.csv").code == kExitIo);

    save_text(dir.path / "bad.yaml", "sweep:\n  step: 2\n");
    const auto bad = run_cli("simulate-sweep --config " + dir.str() + "/bad.yaml");
    CHECK(bad.code == kExitUsage);
    CHECK(bad.output.find("step") != std::string::npos);
    CHECK(bad.output.find("line 2") != std::string::npos);
}

TEST_CASE("calibrate") {
    TempDir dir("cal");
    SUBCASE("two points") {
        save_text(dir.path / "pts.csv", "gain_db,ref_dbm,raw_dbfs\n10,-30,-20\n20,-20,-10\n");
        const auto r = run_cli("calibrate --points " + dir.str() + "/pts.csv --out-dir " + dir.str());
        REQUIRE(r.code == 0);
        std::istringstream is(load_text(dir.path / kCalTableFile));
        const auto t = read_cal_table_csv(is);
        CHECK(t.points().size() == 2);
        CHECK(t.offsets() == std::vector<double>{-10.0, -10.0});
        CHECK(r.output.find("knot") != std::string::npos);
    }
    SUBCASE("identical columns give zero offsets") {
        save_text(dir.path / "pts.csv", "gain_db,ref_dbm,raw_dbfs\n0,-40,-40\n5,-35,-35\n10,-30,-30\n");
        REQUIRE(run_cli("calibrate --points " + dir.str() + "/pts.csv --out-dir " + dir.str()).code == 0);
        std::istringstream is(load_text(dir.path / kCalTableFile));
        for (double o : read_cal_table_csv(is).offsets()) CHECK(o == 0.0);
    }
    SUBCASE("duplicate gains fail") {
        save_text(dir.path / "pts.csv", "gain_db,ref_dbm,raw_dbfs\n10,-30,-20\n10,-20,-10\n");
        const auto r = run_cli("calibrate --points " + dir.str() + "/pts.csv --out-dir " + dir.str());
        CHECK(r.code != 0);
        CHECK(!fs::exists(dir.path / kCalTableFile));
    }
    SUBCASE("simulated bench reproduces the path loss") {
        REQUIRE(run_cli("calibrate --out-dir " + dir.str()).code == 0);
        std::istringstream is(load_text(dir.path / kCalTableFile));
        const auto t = read_cal_table_csv(is);
        const auto cfg = default_bench_config();
        CHECK(t.points().size() == cfg.cal_gains_db.size());
        CHECK(t.center_freq_hz() == cfg.tones.center_freq_hz);
        for (double o : t.offsets()) CHECK(std::abs(o - (cfg.cal_bench.path_loss_db + cfg.cal_bench.rx_full_scale_dbm)) < 0.1);
    }
}

TEST_CASE("estimate on the default simulated DUT") {
    TempDir dir("estimate");
    REQUIRE(run_cli("simulate-sweep --out-dir " + dir.str()).code == 0);
    const auto r = run_cli("estimate " + dir.str() + "/sweep.csv --out-dir " + dir.str());
    REQUIRE(r.code == 0);
    std::istringstream is(load_text(dir.path / kReportFile));
    const auto rep = read_report(is);
    REQUIRE(rep.ok());
    const auto truth = analytic_iip3(default_bench_config().model);
    CHECK(std::abs(rep.iip3_dbm() - truth.iip3_dbm) < 0.5);
    CHECK(std::abs(rep.oip3_dbm() - truth.oip3_dbm) < 0.5);
    CHECK(r.output.find("analytic") != std::string::npos);
    for (const char* f : {kSummaryFile, kFundLineFile, kIm3LineFile}) CHECK(fs::exists(dir.path / f));

    // The printed value carries two decimals.
    std::ostringstream expect;
    expect.setf(std::ios::fixed);
    expect.precision(2);
    expect << rep.iip3_dbm();
    CHECK(r.output.find(expect.str()) != std::string::npos);

    // Plot lines reach the intersection.
    std::istringstream fl(load_text(dir.path / kFundLineFile));
    std::string line, last;
    while (std::getline(fl, line)) last = line;
    CHECK(parse_double(last.substr(0, last.find(',')), 0) >= rep.iip3_dbm() - 1e-9);

    const auto free_fit = run_cli("estimate " + dir.str() + "/sweep.csv --mode free --out-dir " + dir.str());
    REQUIRE(free_fit.code == 0);
    std::istringstream is2(load_text(dir.path / kReportFile));
    CHECK(read_report(is2).result.mode == FitMode::free);
}

TEST_CASE("estimate: linear DUT is not measurable") {
    TempDir dir("linear");
    save_text(dir.path / "linear.yaml", "model: {b1_db: 20, b3: 0}\n");
    const auto r = run_cli("full-run --config " + dir.str() + "/linear.yaml --out-dir " + dir.str());
    CHECK(r.code == kExitNotMeasurable);
    CHECK(r.output.find("not measurable") != std::string::npos);
    CHECK(r.output.find("im3_below_noise") != std::string::npos);
    std::istringstream is(load_text(dir.path / kReportFile));
    CHECK(read_report(is).status == ReportStatus::not_measurable);
}

TEST_CASE("estimate: malformed CSV names the line") {
    TempDir dir("malformed");
    save_text(dir.path / "bad.csv", std::string(kSweepCsvHeader) +
                                        "\n-40,-20,-20,-100,-100,-120\n-38,-18,x,-94,-94,-120\n");
    const auto r = run_cli("estimate " + dir.str() + "/bad.csv --out-dir " + dir.str());
    CHECK(r.code == kExitUsage);
    CHECK(r.output.find("line 3") != std::string::npos);
}

TEST_CASE("estimate with a calibration table") {
    TempDir dir("withcal");
    REQUIRE(run_cli("simulate-sweep --out-dir " + dir.str()).code == 0);
    REQUIRE(run_cli("estimate " + dir.str() + "/sweep.csv --out-dir " + dir.str()).code == 0);
    std::istringstream raw_is(load_text(dir.path / kReportFile));
    const auto raw = read_report(raw_is);
    save_text(dir.path / "cal.csv", "# center_hz=900750000\ngain_db,ref_dbm,raw_dbfs\n-60,3,0\n0,3,0\n");
    REQUIRE(run_cli("estimate " + dir.str() + "/sweep.csv --cal-table " + dir.str() + "/cal.csv --out-dir " +
                    dir.str()).code == 0);
    std::istringstream cal_is(load_text(dir.path / kReportFile));
    CHECK(std::abs(read_report(cal_is).iip3_dbm() - raw.iip3_dbm() - 3.0) < 1e-6);

    save_text(dir.path / "far.csv", "# center_hz=2.4e9\ngain_db,ref_dbm,raw_dbfs\n-60,3,0\n0,3,0\n");
    CHECK(run_cli("estimate " + dir.str() + "/sweep.csv --cal-table " + dir.str() + "/far.csv --out-dir " +
                  dir.str()).code == kExitUsage);
}

TEST_CASE("commands in process are idempotent") {
    TempDir dir("inproc");
    CommandOptions o;
    o.out_dir = dir.path;
    o.mode = FitMode::free;
    std::ostringstream out1, err1, out2, err2;
    REQUIRE(cmd_full_run(o, out1, err1) == kExitOk);
    const auto report = load_text(dir.path / kReportFile);
    REQUIRE(cmd_full_run(o, out2, err2) == kExitOk);
    CHECK(load_text(dir.path / kReportFile) == report);
    CHECK(out1.str() == out2.str());
    CHECK(report.find("mode=free") != std::string::npos);
}
