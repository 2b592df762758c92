// Power calibration against a reference instrument.
//
// Each point pairs a transmitter gain setting with the reference analyzer's
// absolute reading and the receiver's uncalibrated reading. The offset
// (ref - raw) is interpolated linearly in gain between table points.

#ifndef IP3LAB_CALIBRATION_HPP
#define IP3LAB_CALIBRATION_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ip3lab/spectrum.hpp"

namespace ip3lab {

struct CalPoint {
    double gain_setting_db = 0.0;
    double ref_power_dbm = 0.0;
    double raw_reading_dbfs = 0.0;

    double offset_db() const { return ref_power_dbm - raw_reading_dbfs; }
    friend bool operator==(const CalPoint&, const CalPoint&) = default;
};

class CalTable {
public:
    /// Sorts by gain. Needs >= 2 points with unique, finite settings.
    static CalTable build(std::vector<CalPoint> points, double center_freq_hz);

    const std::vector<CalPoint>& points() const { return points_; }
    double center_freq_hz() const { return center_freq_hz_; }
    std::vector<double> offsets() const;
    double min_gain_db() const { return points_.front().gain_setting_db; }
    double max_gain_db() const { return points_.back().gain_setting_db; }

    /// Offset at `gain_db`; outside the table it throws unless extrapolation is allowed.
    double offset_at(double gain_db, bool allow_extrapolation = false) const;

    friend bool operator==(const CalTable&, const CalTable&) = default;

private:
    CalTable() = default;
    std::vector<CalPoint> points_;
    double center_freq_hz_ = 0.0;
};

inline CalTable build_cal_table(std::vector<CalPoint> points, double center_freq_hz) {
    return CalTable::build(std::move(points), center_freq_hz);
}

struct ApplyCalOptions {
    bool allow_extrapolation = false;
    /// When set, must equal the table's center frequency.
    std::optional<double> center_freq_hz;
};

/// raw + offset(gain), in dBm.
double apply_cal(double raw_dbfs, double gain_setting_db, const CalTable& table,
                 const ApplyCalOptions& options = {});

/// Lab bench for generating calibration points in simulation.
///
/// The source emits tx_power_at_0db_dbm + gain at the reference plane, where
/// the analyzer reads it. The receiver sits behind `path_loss_db` and reports
/// dBFS relative to `rx_full_scale_dbm`. The recovered offsets then equal
/// path_loss_db + rx_full_scale_dbm.
struct CalBench {
    double center_freq_hz = 900.75e6;
    double sample_rate_hz = 10e6;
    double tone_offset_hz = 0.55e6;
    double tx_power_at_0db_dbm = -60.0;
    double path_loss_db = 30.0;
    double rx_full_scale_dbm = 0.0;
    std::optional<double> rx_noise_density_dbm_hz;
    Eigen::Index fft_size = 8192;
    Window window = Window::flattop;
    int n_averages = 4;
    std::uint64_t rng_seed = 1;
};

std::vector<CalPoint> simulate_cal_points(const CalBench& bench, std::span<const double> gains_db);

}  // namespace ip3lab

#endif  // IP3LAB_CALIBRATION_HPP
