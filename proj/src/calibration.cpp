#include "ip3lab/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ip3lab/rf_components.hpp"

namespace ip3lab {

CalTable CalTable::build(std::vector<CalPoint> points, double center_freq_hz) {
    if (points.size() < 2)
        throw InvalidArgument("calibration needs at least 2 points, got " +
                              std::to_string(points.size()));
    if (!(center_freq_hz > 0.0) || !std::isfinite(center_freq_hz))
        throw InvalidArgument("calibration center frequency must be positive");
    for (const auto& p : points) {
        if (!std::isfinite(p.gain_setting_db) || !std::isfinite(p.ref_power_dbm) ||
            !std::isfinite(p.raw_reading_dbfs))
            throw InvalidArgument("calibration point values must be finite");
    }
    std::sort(points.begin(), points.end(), [](const CalPoint& a, const CalPoint& b) {
        return a.gain_setting_db < b.gain_setting_db;
    });
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].gain_setting_db == points[i - 1].gain_setting_db)
            throw InvalidArgument("duplicate calibration gain setting " +
                                  std::to_string(points[i].gain_setting_db) + " dB");
    }
    CalTable t;
    t.points_ = std::move(points);
    t.center_freq_hz_ = center_freq_hz;
    return t;
}

std::vector<double> CalTable::offsets() const {
    std::vector<double> out;
    out.reserve(points_.size());
    for (const auto& p : points_) out.push_back(p.offset_db());
    return out;
}

double CalTable::offset_at(double gain_db, bool allow_extrapolation) const {
    if (!allow_extrapolation && (gain_db < min_gain_db() || gain_db > max_gain_db())) {
        throw InvalidArgument("gain setting " + std::to_string(gain_db) +
                              " dB is outside the calibrated range [" +
                              std::to_string(min_gain_db()) + ", " + std::to_string(max_gain_db()) +
                              "] dB; extrapolation refused");
    }
    // Segment whose right knot is the first gain >= gain_db, clamped to the end segments.
    auto it = std::lower_bound(points_.begin(), points_.end(), gain_db,
                               [](const CalPoint& p, double g) { return p.gain_setting_db < g; });
    if (it != points_.end() && it->gain_setting_db == gain_db) return it->offset_db();
    std::size_t hi = static_cast<std::size_t>(it - points_.begin());
    hi = std::clamp<std::size_t>(hi, 1, points_.size() - 1);
    const CalPoint& a = points_[hi - 1];
    const CalPoint& b = points_[hi];
    const double t = (gain_db - a.gain_setting_db) / (b.gain_setting_db - a.gain_setting_db);
    return a.offset_db() + t * (b.offset_db() - a.offset_db());
}

double apply_cal(double raw_dbfs, double gain_setting_db, const CalTable& table,
                 const ApplyCalOptions& options) {
    if (options.center_freq_hz && *options.center_freq_hz != table.center_freq_hz()) {
        throw InvalidArgument("calibration table is for " + std::to_string(table.center_freq_hz()) +
                              " Hz, reading is at " + std::to_string(*options.center_freq_hz) +
                              " Hz");
    }
    return raw_dbfs + table.offset_at(gain_setting_db, options.allow_extrapolation);
}

std::vector<CalPoint> simulate_cal_points(const CalBench& bench, std::span<const double> gains_db) {
    const Eigen::Index n = bench.fft_size * bench.n_averages;
    const double halfwidth = 2.0 * bench.sample_rate_hz / static_cast<double>(bench.fft_size);
    std::vector<CalPoint> out;
    out.reserve(gains_db.size());
    for (std::size_t i = 0; i < gains_db.size(); ++i) {
        const double tx_dbm = bench.tx_power_at_0db_dbm + gains_db[i];
        const auto tone = gen_tone<double>(
            {bench.tone_offset_hz, dbm_to_amplitude(tx_dbm), 0.0}, bench.sample_rate_hz, n);

        const auto ref_spec = estimate_spectrum(tone, bench.fft_size, bench.window, bench.n_averages);
        const double ref = peak_power_at(ref_spec, bench.tone_offset_hz, halfwidth).power_dbm;

        auto rx = attenuate(tone, bench.path_loss_db);
        if (bench.rx_noise_density_dbm_hz)
            rx = add_noise(rx, *bench.rx_noise_density_dbm_hz, derive_seed(bench.rng_seed, i));
        const auto rx_spec = estimate_spectrum(rx, bench.fft_size, bench.window, bench.n_averages);
        const double raw =
            peak_power_at(rx_spec, bench.tone_offset_hz, halfwidth).power_dbm - bench.rx_full_scale_dbm;

        out.push_back({gains_db[i], ref, raw});
    }
    return out;
}

}  // namespace ip3lab
