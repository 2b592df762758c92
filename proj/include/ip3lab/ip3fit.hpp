// Intercept-point estimation from two-tone sweep data.
//
// Pick the weak-nonlinearity region, fit the fundamental and IM3 lines in
// dB-vs-dB space, and intersect them. Constrained mode fixes the slopes at 1
// and 3 and fits only intercepts; free mode fits slope and intercept.

#ifndef IP3LAB_IP3FIT_HPP
#define IP3LAB_IP3FIT_HPP

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ip3lab/calibration.hpp"
#include "ip3lab/errors.hpp"
#include "ip3lab/rf_components.hpp"
#include "ip3lab/twotone.hpp"

namespace ip3lab {

enum class FitMode { constrained, free };

std::string_view to_string(FitMode mode);
std::optional<FitMode> parse_fit_mode(std::string_view name);

struct FitLine {
    double slope = 1.0;          ///< dB/dB
    double intercept_dbm = 0.0;  ///< output at pin = 0 dBm
    double residual_rms_db = 0.0;
    std::size_t n_points = 0;

    double at(double pin_dbm) const { return slope * pin_dbm + intercept_dbm; }
    friend bool operator==(const FitLine&, const FitLine&) = default;
};

enum class ExclusionReason { im3_below_noise, compression, outside_contiguous_run };

std::string_view to_string(ExclusionReason reason);
std::optional<ExclusionReason> parse_exclusion_reason(std::string_view name);

struct Exclusion {
    std::size_t index = 0;
    double pin_dbm = 0.0;
    ExclusionReason reason = ExclusionReason::im3_below_noise;
    friend bool operator==(const Exclusion&, const Exclusion&) = default;
};

/// Inclusive index range [first, last] of the points used for fitting.
struct Region {
    std::size_t first = 0;
    std::size_t last = 0;
    std::vector<Exclusion> excluded;

    std::size_t size() const { return last - first + 1; }
};

struct RegionOptions {
    double noise_margin_db = 10.0;
    double compression_margin_db = 1.0;
};

/// Fewer than three usable points. `excluded` says why each point was dropped.
class InsufficientRegion : public NotMeasurable {
public:
    InsufficientRegion(const std::string& msg, std::vector<Exclusion> excluded)
        : NotMeasurable(msg), excluded_(std::move(excluded)) {}
    const std::vector<Exclusion>& excluded() const { return excluded_; }

private:
    std::vector<Exclusion> excluded_;
};

/// Keeps points whose mean IM3 clears the noise floor by noise_margin_db and
/// whose fundamental stays within compression_margin_db of the slope-1 line
/// anchored on the three lowest such points. The largest contiguous run wins.
Region select_region(const SweepData& data, const RegionOptions& options = {});

struct LinePair {
    FitLine fund;
    FitLine im3;
};

/// The two IM3 readings are averaged in dB per point before fitting.
LinePair fit_lines(const SweepData& data, const Region& region, FitMode mode);

InterceptPoint intercept_point(const FitLine& fund, const FitLine& im3);

enum class ReportStatus { ok, not_measurable };

std::string_view to_string(ReportStatus status);

struct ModeResult {
    FitMode mode = FitMode::constrained;
    double iip3_dbm = 0.0;
    double oip3_dbm = 0.0;
    double gain_db = 0.0;
    FitLine fund_line;
    FitLine im3_line;
    friend bool operator==(const ModeResult&, const ModeResult&) = default;
};

struct Ip3Report {
    ReportStatus status = ReportStatus::ok;
    std::string message;
    ModeResult result;  ///< meaningful only when status == ok
    std::size_t region_first = 0;
    std::size_t region_last = 0;
    std::vector<Exclusion> excluded;
    std::optional<ModeResult> alternate;  ///< the other fit mode, as a diagnostic
    std::vector<std::string> warnings;

    double iip3_dbm() const { return result.iip3_dbm; }
    double oip3_dbm() const { return result.oip3_dbm; }
    double gain_db() const { return result.gain_db; }
    bool ok() const { return status == ReportStatus::ok; }

    friend bool operator==(const Ip3Report&, const Ip3Report&) = default;
};

/// In constrained mode gain_db is the fundamental intercept; in free mode it
/// is oip3 - iip3. Either way oip3 == iip3 + gain_db.
ModeResult make_mode_result(const LinePair& lines, const InterceptPoint& ip, FitMode mode);

Ip3Report make_report(const SweepData& data, const Region& region, const LinePair& lines,
                      const InterceptPoint& ip, FitMode mode,
                      std::optional<ModeResult> alternate = std::nullopt);

Ip3Report make_not_measurable_report(const std::string& message,
                                     std::vector<Exclusion> excluded);

struct EstimateOptions {
    FitMode mode = FitMode::constrained;
    RegionOptions region;
    bool include_alternate = true;
};

/// Full pipeline. A device without a usable linear region yields a
/// not-measurable report instead of throwing.
Ip3Report estimate_ip3(const SweepData& data, const EstimateOptions& options = {});

/// Applies table offsets per point to pin and every output reading. The
/// offset is looked up at the point's uncalibrated pin.
SweepData calibrate_sweep(const SweepData& data, const CalTable& table,
                          bool allow_extrapolation = false);

}  // namespace ip3lab

#endif  // IP3LAB_IP3FIT_HPP
