#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ip3lab/io.hpp"

namespace ip3lab::cli {

namespace fs = std::filesystem;

namespace {

std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

/// Runs `body`, mapping exceptions onto exit codes.
int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const NotMeasurable& e) {
        err << "error: " << e.what() << '\n';
        return kExitNotMeasurable;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    }
}

fs::path prepare_out_dir(const BenchConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + cfg.out_dir.string() + "': " + ec.message());
    return cfg.out_dir;
}

SweepData simulate(const BenchConfig& cfg) {
    return run_sweep(cfg.chain, cfg.tones, cfg.sweep_start_dbm, cfg.sweep_stop_dbm,
                     cfg.sweep_step_db, SweepOptions{cfg.threads});
}

void print_sweep_summary(const SweepData& data, const fs::path& path, std::ostream& out) {
    out << "sweep: " << data.points.size() << " points, pin " << fixed2(data.points.front().pin_dbm)
        << " .. " << fixed2(data.points.back().pin_dbm) << " dBm per tone, step "
        << fixed2(data.step_db) << " dB\n";
    out << "tones: " << data.config.f1_offset_hz / 1e6 << " / " << data.config.f2_offset_hz / 1e6
        << " MHz about " << data.config.center_freq_hz / 1e6 << " MHz\n";
    for (const auto& w : data.warnings) out << "warning: " << w << '\n';
    out << "wrote " << path.string() << '\n';
}

/// Writes report, summary and plot lines; prints the result. Returns the exit code.
int finish_estimate(const SweepData& data, const Ip3Report& rep, const fs::path& dir,
                    std::ostream& out, std::ostream& err) {
    std::ostringstream report_text, summary_text;
    write_report(report_text, rep);
    write_report_summary_csv(summary_text, rep);
    save_text(dir / kReportFile, report_text.str());
    save_text(dir / kSummaryFile, summary_text.str());

    if (!rep.ok()) {
        if (rep.message.rfind("not measurable", 0) != 0) err << "not measurable: ";
        err << rep.message << '\n';
        for (const auto& e : rep.excluded)
            err << "  excluded point " << e.index << " (pin " << fixed2(e.pin_dbm)
                << " dBm): " << to_string(e.reason) << '\n';
        out << "wrote " << (dir / kReportFile).string() << '\n';
        return kExitNotMeasurable;
    }

    double lo = data.points.front().pin_dbm;
    double hi = std::max(rep.iip3_dbm(), data.points.back().pin_dbm);
    std::ostringstream fund_text, im3_text;
    write_plot_line_csv(fund_text, rep.result.fund_line, lo, hi);
    write_plot_line_csv(im3_text, rep.result.im3_line, lo, hi);
    save_text(dir / kFundLineFile, fund_text.str());
    save_text(dir / kIm3LineFile, im3_text.str());

    out << "mode: " << to_string(rep.result.mode) << ", region points " << rep.region_first
        << ".." << rep.region_last << " (" << rep.excluded.size() << " excluded)\n";
    out << "slopes: fundamental " << fixed2(rep.result.fund_line.slope) << ", IM3 "
        << fixed2(rep.result.im3_line.slope) << '\n';
    out << "IIP3 = " << fixed2(rep.iip3_dbm()) << " dBm, OIP3 = " << fixed2(rep.oip3_dbm())
        << " dBm, gain = " << fixed2(rep.gain_db()) << " dB\n";
    if (rep.alternate)
        out << "  (" << to_string(rep.alternate->mode) << " fit: IIP3 = "
            << fixed2(rep.alternate->iip3_dbm) << " dBm, OIP3 = " << fixed2(rep.alternate->oip3_dbm)
            << " dBm)\n";
    if (data.model && data.model->b3 != 0.0) {
        const auto ip = analytic_iip3(*data.model);
        out << "analytic: IIP3 = " << fixed2(ip.iip3_dbm) << " dBm, OIP3 = " << fixed2(ip.oip3_dbm)
            << " dBm (error " << fixed2(rep.iip3_dbm() - ip.iip3_dbm) << " / "
            << fixed2(rep.oip3_dbm() - ip.oip3_dbm) << " dB)\n";
    }
    for (const auto& w : rep.warnings) out << "warning: " << w << '\n';
    out << "wrote " << (dir / kReportFile).string() << '\n';
    return kExitOk;
}

}  // namespace

BenchConfig resolve_config(const CommandOptions& opts) {
    BenchConfig cfg = opts.config ? load_bench_config(*opts.config) : default_bench_config();
    if (opts.seed) cfg.tones.rng_seed = *opts.seed;
    if (opts.mode) cfg.estimate.mode = *opts.mode;
    if (opts.noise_margin_db) cfg.estimate.region.noise_margin_db = *opts.noise_margin_db;
    if (opts.compression_margin_db)
        cfg.estimate.region.compression_margin_db = *opts.compression_margin_db;
    if (opts.out_dir) cfg.out_dir = *opts.out_dir;
    return cfg;
}

CalBench cal_bench_for(const BenchConfig& cfg) {
    CalBench b = cfg.cal_bench;
    b.center_freq_hz = cfg.tones.center_freq_hz;
    b.sample_rate_hz = cfg.tones.sample_rate_hz;
    b.fft_size = cfg.tones.fft_size;
    b.window = cfg.tones.window;
    b.n_averages = cfg.tones.n_averages;
    b.rng_seed = cfg.tones.rng_seed;
    return b;
}

int cmd_simulate_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const BenchConfig cfg = resolve_config(opts);
        const SweepData data = simulate(cfg);
        const fs::path dir = prepare_out_dir(cfg);
        std::ostringstream csv;
        write_sweep_csv(csv, data);
        save_text(dir / kSweepFile, csv.str());
        if (data.model && data.model->b3 != 0.0) {
            const auto ip = analytic_iip3(*data.model);
            out << "model: gain " << fixed2(data.model->gain_db()) << " dB, analytic IIP3 "
                << fixed2(ip.iip3_dbm) << " dBm\n";
        }
        print_sweep_summary(data, dir / kSweepFile, out);
        return static_cast<int>(kExitOk);
    });
}

int cmd_calibrate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const BenchConfig cfg = resolve_config(opts);
        std::optional<CalTable> table;
        if (opts.cal_points) {
            std::istringstream in(load_text(*opts.cal_points));
            table = read_cal_table_csv(in, cfg.tones.center_freq_hz);
            out << "calibration points: " << opts.cal_points->string() << '\n';
        } else {
            const CalBench bench = cal_bench_for(cfg);
            table = build_cal_table(simulate_cal_points(bench, cfg.cal_gains_db), bench.center_freq_hz);
            out << "calibration points: simulated bench (path loss " << fixed2(bench.path_loss_db)
                << " dB, receiver full scale " << fixed2(bench.rx_full_scale_dbm) << " dBm)\n";
        }

        out << "center " << table->center_freq_hz() / 1e6 << " MHz\n";
        out << "  gain_db   ref_dbm   raw_dbfs   offset_db\n";
        double worst = 0.0;
        for (const auto& p : table->points()) {
            out << "  " << std::setw(7) << fixed2(p.gain_setting_db) << std::setw(10)
                << fixed2(p.ref_power_dbm) << std::setw(11) << fixed2(p.raw_reading_dbfs)
                << std::setw(12) << fixed2(p.offset_db()) << '\n';
            worst = std::max(worst, std::abs(apply_cal(p.raw_reading_dbfs, p.gain_setting_db, *table) -
                                             p.ref_power_dbm));
        }
        const bool knots_ok = worst <= 1e-9;
        out << "knot check: max |calibrated - reference| = " << worst << " dB ("
            << (knots_ok ? "pass" : "FAIL") << ")\n";

        const fs::path dir = prepare_out_dir(cfg);
        std::ostringstream csv;
        write_cal_table_csv(csv, *table);
        save_text(dir / kCalTableFile, csv.str());
        out << "wrote " << (dir / kCalTableFile).string() << '\n';
        return static_cast<int>(knots_ok ? kExitOk : kExitUsage);
    });
}

int cmd_estimate(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (!opts.sweep_csv) throw InvalidArgument("estimate needs a sweep CSV");
        const BenchConfig cfg = resolve_config(opts);
        std::istringstream in(load_text(*opts.sweep_csv));
        SweepData data = read_sweep_csv(in);
        if (opts.cal_table) {
            std::istringstream cal_in(load_text(*opts.cal_table));
            data = calibrate_sweep(data, read_cal_table_csv(cal_in));
            out << "applied calibration table " << opts.cal_table->string() << '\n';
        }
        const Ip3Report rep = estimate_ip3(data, cfg.estimate);
        return finish_estimate(data, rep, prepare_out_dir(cfg), out, err);
    });
}

int cmd_full_run(const CommandOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const BenchConfig cfg = resolve_config(opts);
        const SweepData data = simulate(cfg);
        const fs::path dir = prepare_out_dir(cfg);
        std::ostringstream csv;
        write_sweep_csv(csv, data);
        save_text(dir / kSweepFile, csv.str());
        print_sweep_summary(data, dir / kSweepFile, out);
        const Ip3Report rep = estimate_ip3(data, cfg.estimate);
        return finish_estimate(data, rep, dir, out, err);
    });
}

}  // namespace ip3lab::cli
