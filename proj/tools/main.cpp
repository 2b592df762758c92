// ip3lab: virtual two-tone bench. Simulates power calibration and IIP3 sweeps
// of a polynomial front-end model and estimates the intercept point.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace ip3lab::cli;
    CLI::App app{"Two-tone IIP3 bench simulator"};
    app.require_subcommand(1);

    CommandOptions opts;
    std::string config, out_dir, mode, sweep_csv, cal_table, cal_points;
    std::uint64_t seed = 0;
    double noise_margin = 0, compression_margin = 0;

    const std::map<std::string, ip3lab::FitMode> modes{{"constrained", ip3lab::FitMode::constrained},
                                                       {"free", ip3lab::FitMode::free}};

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "bench configuration (YAML)");
        sub->add_option("--seed", seed, "master random seed");
        sub->add_option("--out-dir", out_dir, "output directory");
    };
    auto fitting = [&](CLI::App* sub) {
        sub->add_option("--mode", mode, "fit mode")->check(CLI::IsMember({"constrained", "free"}));
        sub->add_option("--noise-margin-db", noise_margin, "IM3 margin above the noise floor");
        sub->add_option("--compression-margin-db", compression_margin,
                        "allowed fundamental deviation from slope 1");
    };

    auto* sweep = app.add_subcommand("simulate-sweep", "run the two-tone power sweep, write sweep.csv");
    common(sweep);
    auto* calibrate = app.add_subcommand("calibrate", "build a calibration table, write cal_table.csv");
    common(calibrate);
    calibrate->add_option("--points", cal_points, "CSV of gain_db,ref_dbm,raw_dbfs (simulated if omitted)");
    auto* estimate = app.add_subcommand("estimate", "estimate IIP3/OIP3 from a sweep CSV");
    common(estimate);
    fitting(estimate);
    estimate->add_option("sweep_csv", sweep_csv, "sweep CSV")->required();
    estimate->add_option("--cal-table", cal_table, "calibration table applied before fitting");
    auto* full = app.add_subcommand("full-run", "simulate-sweep followed by estimate");
    common(full);
    fitting(full);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    auto given = [](CLI::App* sub, const char* name) { return sub->count(name) > 0; };
    CLI::App* used = app.get_subcommands().front();
    if (given(used, "--config")) opts.config = config;
    if (given(used, "--seed")) opts.seed = seed;
    if (given(used, "--out-dir")) opts.out_dir = out_dir;
    if (used == estimate || used == full) {
        if (given(used, "--mode")) opts.mode = modes.at(mode);
        if (given(used, "--noise-margin-db")) opts.noise_margin_db = noise_margin;
        if (given(used, "--compression-margin-db")) opts.compression_margin_db = compression_margin;
    }
    if (used == estimate) {
        opts.sweep_csv = sweep_csv;
        if (given(used, "--cal-table")) opts.cal_table = cal_table;
    }
    if (used == calibrate && given(used, "--points")) opts.cal_points = cal_points;

    if (used == sweep) return cmd_simulate_sweep(opts, std::cout, std::cerr);
    if (used == calibrate) return cmd_calibrate(opts, std::cout, std::cerr);
    if (used == estimate) return cmd_estimate(opts, std::cout, std::cerr);
    return cmd_full_run(opts, std::cout, std::cerr);
}
