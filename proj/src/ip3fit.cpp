#include "ip3lab/ip3fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace ip3lab {

std::string_view to_string(FitMode mode) {
    return mode == FitMode::constrained ? "constrained" : "free";
}

std::optional<FitMode> parse_fit_mode(std::string_view name) {
    if (name == "constrained") return FitMode::constrained;
    if (name == "free") return FitMode::free;
    return std::nullopt;
}

std::string_view to_string(ExclusionReason reason) {
    switch (reason) {
        case ExclusionReason::im3_below_noise: return "im3_below_noise";
        case ExclusionReason::compression: return "compression";
        case ExclusionReason::outside_contiguous_run: return "outside_contiguous_run";
    }
    return "unknown";
}

std::optional<ExclusionReason> parse_exclusion_reason(std::string_view name) {
    for (auto r : {ExclusionReason::im3_below_noise, ExclusionReason::compression,
                   ExclusionReason::outside_contiguous_run})
        if (to_string(r) == name) return r;
    return std::nullopt;
}

std::string_view to_string(ReportStatus status) {
    return status == ReportStatus::ok ? "ok" : "not_measurable";
}

Region select_region(const SweepData& data, const RegionOptions& options) {
    const auto& pts = data.points;
    const std::size_t n = pts.size();
    if (n < 4)
        throw InvalidArgument("region selection needs at least 4 sweep points, got " +
                              std::to_string(n));

    std::vector<Exclusion> excluded;
    std::vector<bool> keep(n, false);
    std::vector<std::size_t> audible;
    for (std::size_t i = 0; i < n; ++i) {
        if (pts[i].im3_avg() >= pts[i].noise_floor_dbm + options.noise_margin_db) {
            keep[i] = true;
            audible.push_back(i);
        } else {
            excluded.push_back({i, pts[i].pin_dbm, ExclusionReason::im3_below_noise});
        }
    }
    if (audible.empty())
        throw InsufficientRegion("not measurable: no third-order products above the noise floor",
                                 excluded);
    if (audible.size() < 3)
        throw InsufficientRegion("insufficient linear region: fewer than 3 points clear the noise "
                                 "margin",
                                 excluded);

    // Slope-1 reference from the three lowest-power points with visible IM3.
    double ref = 0.0;
    for (std::size_t k = 0; k < 3; ++k) ref += pts[audible[k]].fund_avg() - pts[audible[k]].pin_dbm;
    ref /= 3.0;
    for (std::size_t i : audible) {
        const double deviation = std::abs(pts[i].fund_avg() - (pts[i].pin_dbm + ref));
        if (deviation >= options.compression_margin_db) {
            keep[i] = false;
            excluded.push_back({i, pts[i].pin_dbm, ExclusionReason::compression});
        }
    }

    std::size_t best_first = 0, best_len = 0;
    for (std::size_t i = 0; i < n;) {
        if (!keep[i]) { ++i; continue; }
        std::size_t j = i;
        while (j < n && keep[j]) ++j;
        if (j - i > best_len) { best_first = i; best_len = j - i; }
        i = j;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (keep[i] && (i < best_first || i >= best_first + best_len))
            excluded.push_back({i, pts[i].pin_dbm, ExclusionReason::outside_contiguous_run});
    std::sort(excluded.begin(), excluded.end(),
              [](const Exclusion& a, const Exclusion& b) { return a.index < b.index; });

    if (best_len < 3)
        throw InsufficientRegion("insufficient linear region: longest usable run has " +
                                     std::to_string(best_len) + " point(s)",
                                 excluded);
    return Region{best_first, best_first + best_len - 1, std::move(excluded)};
}

namespace {

FitLine fit_fixed_slope(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double slope) {
    FitLine line;
    line.slope = slope;
    line.n_points = static_cast<std::size_t>(x.size());
    line.intercept_dbm = (y - slope * x).mean();
    const Eigen::ArrayXd r = y.array() - slope * x.array() - line.intercept_dbm;
    line.residual_rms_db = std::sqrt(r.square().mean());
    return line;
}

FitLine fit_ols(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::MatrixXd design(x.size(), 2);
    design.col(0) = x;
    design.col(1).setOnes();
    const auto qr = design.colPivHouseholderQr();
    if (qr.rank() < 2) throw InvalidArgument("singular fit: all input powers are equal");
    const Eigen::Vector2d beta = qr.solve(y);
    FitLine line;
    line.slope = beta[0];
    line.intercept_dbm = beta[1];
    line.n_points = static_cast<std::size_t>(x.size());
    line.residual_rms_db =
        std::sqrt((y - design * beta).squaredNorm() / static_cast<double>(x.size()));
    return line;
}

}  // namespace

LinePair fit_lines(const SweepData& data, const Region& region, FitMode mode) {
    if (region.last >= data.points.size() || region.first > region.last)
        throw InvalidArgument("fit region does not match the sweep");
    const auto m = static_cast<Eigen::Index>(region.size());
    if (m < 2) throw InvalidArgument("a fit needs at least 2 points");

    Eigen::VectorXd pin(m), fund(m), im3(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& p = data.points[region.first + static_cast<std::size_t>(k)];
        pin[k] = p.pin_dbm;
        fund[k] = p.fund_avg();
        im3[k] = p.im3_avg();
    }
    if (pin.maxCoeff() == pin.minCoeff())
        throw InvalidArgument("singular fit: all input powers are equal");

    if (mode == FitMode::constrained)
        return {fit_fixed_slope(pin, fund, 1.0), fit_fixed_slope(pin, im3, 3.0)};
    return {fit_ols(pin, fund), fit_ols(pin, im3)};
}

InterceptPoint intercept_point(const FitLine& fund, const FitLine& im3) {
    const double dslope = im3.slope - fund.slope;
    if (dslope == 0.0) throw InvalidArgument("fundamental and IM3 lines are parallel");
    const double iip3 = (fund.intercept_dbm - im3.intercept_dbm) / dslope;
    return {iip3, fund.at(iip3)};
}

ModeResult make_mode_result(const LinePair& lines, const InterceptPoint& ip, FitMode mode) {
    ModeResult r;
    r.mode = mode;
    r.iip3_dbm = ip.iip3_dbm;
    r.fund_line = lines.fund;
    r.im3_line = lines.im3;
    if (mode == FitMode::constrained) {
        r.gain_db = lines.fund.intercept_dbm;
        r.oip3_dbm = ip.iip3_dbm + r.gain_db;
    } else {
        r.oip3_dbm = ip.oip3_dbm;
        r.gain_db = ip.oip3_dbm - ip.iip3_dbm;
    }
    return r;
}

Ip3Report make_report(const SweepData& data, const Region& region, const LinePair& lines,
                      const InterceptPoint& ip, FitMode mode, std::optional<ModeResult> alternate) {
    Ip3Report rep;
    rep.status = ReportStatus::ok;
    rep.result = make_mode_result(lines, ip, mode);
    rep.region_first = region.first;
    rep.region_last = region.last;
    rep.excluded = region.excluded;
    rep.alternate = std::move(alternate);
    rep.warnings = data.warnings;
    for (std::size_t i = region.first; i <= region.last && i < data.points.size(); ++i) {
        const auto& p = data.points[i];
        if (std::abs(p.p_im3_lo - p.p_im3_hi) > 1.0) {
            std::ostringstream os;
            os << "IM3 asymmetry of " << std::abs(p.p_im3_lo - p.p_im3_hi) << " dB at pin "
               << p.pin_dbm << " dBm";
            rep.warnings.push_back(os.str());
        }
    }
    return rep;
}

Ip3Report make_not_measurable_report(const std::string& message, std::vector<Exclusion> excluded) {
    Ip3Report rep;
    rep.status = ReportStatus::not_measurable;
    rep.message = message;
    rep.excluded = std::move(excluded);
    return rep;
}

Ip3Report estimate_ip3(const SweepData& data, const EstimateOptions& options) {
    Region region;
    try {
        region = select_region(data, options.region);
    } catch (const InsufficientRegion& e) {
        auto rep = make_not_measurable_report(e.what(), e.excluded());
        rep.warnings = data.warnings;
        return rep;
    }
    const auto lines = fit_lines(data, region, options.mode);
    const auto ip = intercept_point(lines.fund, lines.im3);
    std::optional<ModeResult> alt;
    if (options.include_alternate) {
        const FitMode other =
            options.mode == FitMode::constrained ? FitMode::free : FitMode::constrained;
        const auto alt_lines = fit_lines(data, region, other);
        alt = make_mode_result(alt_lines, intercept_point(alt_lines.fund, alt_lines.im3), other);
    }
    return make_report(data, region, lines, ip, options.mode, std::move(alt));
}

SweepData calibrate_sweep(const SweepData& data, const CalTable& table, bool allow_extrapolation) {
    const ApplyCalOptions opts{allow_extrapolation, data.config.center_freq_hz};
    SweepData out = data;
    for (auto& p : out.points) {
        const double gain = p.pin_dbm;
        auto cal = [&](double raw) { return apply_cal(raw, gain, table, opts); };
        p.pin_dbm = cal(p.pin_dbm);
        p.p_fund_lo = cal(p.p_fund_lo);
        p.p_fund_hi = cal(p.p_fund_hi);
        p.p_im3_lo = cal(p.p_im3_lo);
        p.p_im3_hi = cal(p.p_im3_hi);
        p.noise_floor_dbm = cal(p.noise_floor_dbm);
    }
    if (!out.points.empty()) out.config.per_tone_input_power_dbm = out.points.front().pin_dbm;
    return out;
}

}  // namespace ip3lab
