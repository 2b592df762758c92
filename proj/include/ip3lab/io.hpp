// Text formats: sweep CSV, calibration-table CSV, IP3 report (key=value),
// report summary row and plot-line CSVs.
//
// Numbers are written in shortest round-trip form, so every reader returns
// exactly what its writer was given.

#ifndef IP3LAB_IO_HPP
#define IP3LAB_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "ip3lab/calibration.hpp"
#include "ip3lab/ip3fit.hpp"
#include "ip3lab/twotone.hpp"

namespace ip3lab {

inline constexpr std::string_view kSweepCsvHeader =
    "pin_dbm,p_fund_lo,p_fund_hi,p_im3_lo,p_im3_hi,noise_floor_dbm";
inline constexpr std::string_view kCalCsvHeader = "gain_db,ref_dbm,raw_dbfs";
inline constexpr std::string_view kPlotCsvHeader = "pin_dbm,pout_dbm";
inline constexpr std::string_view kSummaryCsvHeader =
    "status,mode,iip3_dbm,oip3_dbm,gain_db,fund_slope,im3_slope,fund_residual_rms_db,"
    "im3_residual_rms_db,n_points";

std::string format_double(double v);
/// Throws ParseError tagged with `line`.
double parse_double(std::string_view text, std::size_t line);

void write_sweep_csv(std::ostream& os, const SweepData& data);
SweepData read_sweep_csv(std::istream& is);

void write_cal_table_csv(std::ostream& os, const CalTable& table);
/// Reads a table or bare points. The `# center_hz=` line wins over `default_center_hz`.
CalTable read_cal_table_csv(std::istream& is, std::optional<double> default_center_hz = std::nullopt);

void write_report(std::ostream& os, const Ip3Report& report);
Ip3Report read_report(std::istream& is);
void write_report_summary_csv(std::ostream& os, const Ip3Report& report);

/// `samples` evenly spaced (pin, pout) points of `line` over [pin_lo, pin_hi].
void write_plot_line_csv(std::ostream& os, const FitLine& line, double pin_lo, double pin_hi,
                         int samples = 64);

// File helpers; failures to open raise IoError.
void save_text(const std::filesystem::path& path, const std::string& text);
std::string load_text(const std::filesystem::path& path);

}  // namespace ip3lab

#endif  // IP3LAB_IO_HPP
