// Virtual bench configuration: a YAML file with nested sections. Every key
// is optional and defaults to the values documented in configs/default.yaml.

#ifndef IP3LAB_TOOLS_BENCH_CONFIG_HPP
#define IP3LAB_TOOLS_BENCH_CONFIG_HPP

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ip3lab/calibration.hpp"
#include "ip3lab/errors.hpp"
#include "ip3lab/ip3fit.hpp"
#include "ip3lab/rf_components.hpp"
#include "ip3lab/twotone.hpp"

namespace ip3lab::cli {

/// Config violation; the message names the key and, when known, the line.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& msg, std::size_t line = 0)
        : Error("config" + (line ? ": line " + std::to_string(line) : std::string()) + ": '" +
                key + "': " + msg),
          key_(key),
          detail_(msg),
          line_(line) {}
    const std::string& key() const { return key_; }
    const std::string& detail() const { return detail_; }
    std::size_t line() const { return line_; }

private:
    std::string key_;
    std::string detail_;
    std::size_t line_;
};

struct BenchConfig {
    TwoToneConfig tones;  ///< tone plan, spectrum settings and master seed
    double sweep_start_dbm = -40.0;
    double sweep_stop_dbm = -22.0;
    double sweep_step_db = 2.0;
    FrontEndModel model;
    std::vector<ChainStage> chain;  ///< `dut` entries carry `model`
    unsigned threads = 0;
    CalBench cal_bench;
    std::vector<double> cal_gains_db;
    EstimateOptions estimate;
    std::filesystem::path out_dir = "out";
};

BenchConfig default_bench_config();

/// Parses YAML text; `source` is used in messages only.
BenchConfig parse_bench_config(std::string_view yaml_text);

/// Throws IoError when the file is missing or unreadable, ConfigError otherwise.
BenchConfig load_bench_config(const std::filesystem::path& path);

/// Re-checks all cross-field invariants (run after command-line overrides).
void validate_bench_config(const BenchConfig& cfg);

}  // namespace ip3lab::cli

#endif  // IP3LAB_TOOLS_BENCH_CONFIG_HPP
