// Subcommands of the ip3lab CLI, as functions so tests can drive them
// without spawning a process.

#ifndef IP3LAB_TOOLS_COMMANDS_HPP
#define IP3LAB_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "bench_config.hpp"

namespace ip3lab::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,          ///< bad arguments, config or input format
    kExitNotMeasurable = 2,  ///< e.g. a linear DUT
    kExitIo = 3,
};

struct CommandOptions {
    std::optional<std::filesystem::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<FitMode> mode;
    std::optional<double> noise_margin_db;
    std::optional<double> compression_margin_db;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::filesystem::path> sweep_csv;   ///< estimate input
    std::optional<std::filesystem::path> cal_table;   ///< estimate: optional calibration
    std::optional<std::filesystem::path> cal_points;  ///< calibrate input; simulated when absent
};

/// Config file (or defaults) with command-line overrides applied.
BenchConfig resolve_config(const CommandOptions& opts);

/// Calibration bench derived from the config's tone and spectrum settings.
CalBench cal_bench_for(const BenchConfig& cfg);

// Output file names inside the output directory.
inline constexpr const char* kSweepFile = "sweep.csv";
inline constexpr const char* kCalTableFile = "cal_table.csv";
inline constexpr const char* kReportFile = "report.txt";
inline constexpr const char* kSummaryFile = "report_summary.csv";
inline constexpr const char* kFundLineFile = "fund_line.csv";
inline constexpr const char* kIm3LineFile = "im3_line.csv";

int cmd_simulate_sweep(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_estimate(const CommandOptions& opts, std::ostream& out, std::ostream& err);
int cmd_full_run(const CommandOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace ip3lab::cli

#endif  // IP3LAB_TOOLS_COMMANDS_HPP
