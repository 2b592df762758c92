// Two-tone test: drive a chain with equal tones at f1 and f2 and read the
// fundamentals, the IM3 products at 2f1 - f2 and 2f2 - f1, and the noise floor.
//
// Input power is per tone and referred to the input of the first DUT stage;
// losses and gains in front of the DUT are compensated at the sources.

#ifndef IP3LAB_TWOTONE_HPP
#define IP3LAB_TWOTONE_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ip3lab/rf_components.hpp"
#include "ip3lab/spectrum.hpp"

namespace ip3lab {

/// Minimum procedure length for an IP3 sweep.
inline constexpr std::size_t kMinSweepPoints = 10;

struct TwoToneConfig {
    double center_freq_hz = 900.75e6;
    double f1_offset_hz = -0.75e6;
    double f2_offset_hz = 0.55e6;
    double per_tone_input_power_dbm = -40.0;
    double sample_rate_hz = 10e6;
    Eigen::Index fft_size = 8192;
    Window window = Window::flattop;
    int n_averages = 4;
    std::uint64_t rng_seed = 1;

    double bin_width_hz() const { return sample_rate_hz / static_cast<double>(fft_size); }
    double lo_tone_hz() const { return std::min(f1_offset_hz, f2_offset_hz); }
    double hi_tone_hz() const { return std::max(f1_offset_hz, f2_offset_hz); }

    /// Throws on aliasing or when measurement frequencies are < 3 bins apart.
    void validate() const;

    friend bool operator==(const TwoToneConfig&, const TwoToneConfig&) = default;
};

/// (2 f1 - f2, 2 f2 - f1)
std::pair<double, double> im3_freqs(double f1_hz, double f2_hz);

/// Where the noise floor is read: midway between the lower IM3 and -fs/2.
double noise_guard_center_hz(const TwoToneConfig& cfg);

struct SweepPoint {
    double pin_dbm = 0.0;  ///< per tone, at the DUT input
    double p_fund_lo = kPowerFloorDbm;
    double p_fund_hi = kPowerFloorDbm;
    double p_im3_lo = kPowerFloorDbm;  ///< at 2 f_lo - f_hi
    double p_im3_hi = kPowerFloorDbm;  ///< at 2 f_hi - f_lo
    double noise_floor_dbm = kPowerFloorDbm;

    double fund_avg() const { return 0.5 * (p_fund_lo + p_fund_hi); }
    double im3_avg() const { return 0.5 * (p_im3_lo + p_im3_hi); }

    friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct SweepData {
    std::vector<SweepPoint> points;  ///< strictly increasing pin, uniform step
    TwoToneConfig config;
    double step_db = 0.0;
    std::optional<FrontEndModel> model;  ///< DUT the data came from, when known
    std::vector<std::string> warnings;

    friend bool operator==(const SweepData&, const SweepData&) = default;
};

SweepPoint run_point(std::span<const ChainStage> chain, const TwoToneConfig& cfg);

struct SweepOptions {
    /// 0 picks the hardware concurrency; results are identical for any value.
    unsigned threads = 0;
};

/// One point per pin in start, start + step, ... <= stop. Point i uses
/// sub-seed derive_seed(cfg.rng_seed, i).
SweepData run_sweep(std::span<const ChainStage> chain, const TwoToneConfig& cfg,
                    double pin_start_dbm, double pin_stop_dbm, double step_db,
                    const SweepOptions& options = {});

/// Number of points a sweep over [start, stop] with `step` produces.
std::size_t sweep_point_count(double pin_start_dbm, double pin_stop_dbm, double step_db);

}  // namespace ip3lab

#endif  // IP3LAB_TWOTONE_HPP
