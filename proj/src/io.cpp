#include "ip3lab/io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <vector>

namespace ip3lab {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_u64(std::string_view text, std::size_t line) {
    std::uint64_t v = 0;
    const auto t = trim(text);
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ParseError("expected a non-negative integer, got '" + std::string(text) + "'", line);
    return v;
}

std::optional<double> parse_optional(std::string_view text, std::size_t line) {
    if (trim(text) == "none") return std::nullopt;
    return parse_double(text, line);
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string("none");
}

std::string one_line(std::string s) {
    for (auto& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

struct Line {
    std::size_t number;
    std::string text;
};

std::vector<Line> read_lines(std::istream& is) {
    std::vector<Line> out;
    std::string s;
    std::size_t n = 0;
    while (std::getline(is, s)) {
        ++n;
        if (!s.empty() && s.back() == '\r') s.pop_back();
        out.push_back({n, s});
    }
    return out;
}

/// Splits "# key=value" into (key, value); nullopt for other comments.
std::optional<std::pair<std::string, std::string>> comment_kv(std::string_view text) {
    auto body = trim(text.substr(1));
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) return std::nullopt;
    return std::make_pair(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
}

}  // namespace

double parse_double(std::string_view text, std::size_t line) {
    const auto t = trim(text);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw ParseError("expected a number, got '" + std::string(text) + "'", line);
    return v;
}

// ---------------------------------------------------------------- sweep CSV

void write_sweep_csv(std::ostream& os, const SweepData& data) {
    const auto& c = data.config;
    os << "# center_freq_hz=" << format_double(c.center_freq_hz) << '\n'
       << "# f1_offset_hz=" << format_double(c.f1_offset_hz) << '\n'
       << "# f2_offset_hz=" << format_double(c.f2_offset_hz) << '\n'
       << "# per_tone_input_power_dbm=" << format_double(c.per_tone_input_power_dbm) << '\n'
       << "# sample_rate_hz=" << format_double(c.sample_rate_hz) << '\n'
       << "# fft_size=" << c.fft_size << '\n'
       << "# window=" << to_string(c.window) << '\n'
       << "# n_averages=" << c.n_averages << '\n'
       << "# rng_seed=" << c.rng_seed << '\n'
       << "# step_db=" << format_double(data.step_db) << '\n';
    if (data.model) {
        const auto& m = *data.model;
        os << "# model.b1=" << format_double(m.b1) << '\n'
           << "# model.b3=" << format_double(m.b3) << '\n'
           << "# model.b5=" << format_double(m.b5) << '\n'
           << "# model.noise_density_dbm_hz=" << format_optional(m.noise_density_dbm_hz) << '\n'
           << "# model.clip_amplitude=" << format_optional(m.clip_amplitude) << '\n';
        if (m.b3 != 0.0) {
            const auto ip = analytic_iip3(m);
            os << "# model.analytic_iip3_dbm=" << format_double(ip.iip3_dbm) << '\n'
               << "# model.analytic_oip3_dbm=" << format_double(ip.oip3_dbm) << '\n';
        }
    }
    for (const auto& w : data.warnings) os << "# warning=" << one_line(w) << '\n';
    os << kSweepCsvHeader << '\n';
    for (const auto& p : data.points) {
        os << format_double(p.pin_dbm) << ',' << format_double(p.p_fund_lo) << ','
           << format_double(p.p_fund_hi) << ',' << format_double(p.p_im3_lo) << ','
           << format_double(p.p_im3_hi) << ',' << format_double(p.noise_floor_dbm) << '\n';
    }
}

SweepData read_sweep_csv(std::istream& is) {
    SweepData data;
    bool header_seen = false;
    bool have_step = false;
    FrontEndModel model;
    bool have_model = false;

    for (const auto& [n, text] : read_lines(is)) {
        if (trim(text).empty()) continue;
        if (text.front() == '#') {
            if (header_seen) continue;
            const auto kv = comment_kv(text);
            if (!kv) continue;
            const auto& [key, value] = *kv;
            auto& c = data.config;
            if (key == "center_freq_hz") c.center_freq_hz = parse_double(value, n);
            else if (key == "f1_offset_hz") c.f1_offset_hz = parse_double(value, n);
            else if (key == "f2_offset_hz") c.f2_offset_hz = parse_double(value, n);
            else if (key == "per_tone_input_power_dbm") c.per_tone_input_power_dbm = parse_double(value, n);
            else if (key == "sample_rate_hz") c.sample_rate_hz = parse_double(value, n);
            else if (key == "fft_size") c.fft_size = static_cast<Eigen::Index>(parse_u64(value, n));
            else if (key == "n_averages") c.n_averages = static_cast<int>(parse_u64(value, n));
            else if (key == "rng_seed") c.rng_seed = parse_u64(value, n);
            else if (key == "window") {
                const auto w = parse_window(value);
                if (!w) throw ParseError("unknown window '" + value + "'", n);
                c.window = *w;
            } else if (key == "step_db") {
                data.step_db = parse_double(value, n);
                have_step = true;
            } else if (key == "model.b1") { model.b1 = parse_double(value, n); have_model = true; }
            else if (key == "model.b3") model.b3 = parse_double(value, n);
            else if (key == "model.b5") model.b5 = parse_double(value, n);
            else if (key == "model.noise_density_dbm_hz") model.noise_density_dbm_hz = parse_optional(value, n);
            else if (key == "model.clip_amplitude") model.clip_amplitude = parse_optional(value, n);
            else if (key == "warning") data.warnings.push_back(value);
            continue;
        }
        if (!header_seen) {
            if (trim(text) != kSweepCsvHeader)
                throw ParseError("expected header '" + std::string(kSweepCsvHeader) + "'", n);
            header_seen = true;
            continue;
        }
        const auto f = split(text, ',');
        if (f.size() != 6)
            throw ParseError("expected 6 columns, got " + std::to_string(f.size()), n);
        SweepPoint p{parse_double(f[0], n), parse_double(f[1], n), parse_double(f[2], n),
                     parse_double(f[3], n), parse_double(f[4], n), parse_double(f[5], n)};
        if (!data.points.empty() && !(p.pin_dbm > data.points.back().pin_dbm))
            throw ParseError("pin_dbm must be strictly increasing", n);
        data.points.push_back(p);
    }
    if (!header_seen) throw ParseError("sweep CSV has no header line", 0);
    if (!have_step && data.points.size() >= 2)
        data.step_db = data.points[1].pin_dbm - data.points[0].pin_dbm;
    if (have_model) data.model = model;
    return data;
}

// ------------------------------------------------------------ cal table CSV

void write_cal_table_csv(std::ostream& os, const CalTable& table) {
    os << "# center_hz=" << format_double(table.center_freq_hz()) << '\n' << kCalCsvHeader << '\n';
    for (const auto& p : table.points()) {
        os << format_double(p.gain_setting_db) << ',' << format_double(p.ref_power_dbm) << ','
           << format_double(p.raw_reading_dbfs) << '\n';
    }
}

CalTable read_cal_table_csv(std::istream& is, std::optional<double> default_center_hz) {
    std::optional<double> center;
    std::vector<CalPoint> points;
    bool header_seen = false;
    for (const auto& [n, text] : read_lines(is)) {
        if (trim(text).empty()) continue;
        if (text.front() == '#') {
            if (const auto kv = comment_kv(text); kv && kv->first == "center_hz")
                center = parse_double(kv->second, n);
            continue;
        }
        if (!header_seen) {
            if (trim(text) != kCalCsvHeader)
                throw ParseError("expected header '" + std::string(kCalCsvHeader) + "'", n);
            header_seen = true;
            continue;
        }
        const auto f = split(text, ',');
        if (f.size() != 3)
            throw ParseError("expected 3 columns, got " + std::to_string(f.size()), n);
        points.push_back({parse_double(f[0], n), parse_double(f[1], n), parse_double(f[2], n)});
    }
    if (!header_seen) throw ParseError("calibration CSV has no header line", 0);
    if (!center) center = default_center_hz;
    if (!center) throw ParseError("calibration CSV lacks '# center_hz=' and no default was given", 0);
    return build_cal_table(std::move(points), *center);
}

// ------------------------------------------------------------------ report

namespace {

void write_line_fields(std::ostream& os, std::string_view prefix, const FitLine& l) {
    os << prefix << "slope=" << format_double(l.slope) << '\n'
       << prefix << "intercept_dbm=" << format_double(l.intercept_dbm) << '\n'
       << prefix << "residual_rms_db=" << format_double(l.residual_rms_db) << '\n'
       << prefix << "n_points=" << l.n_points << '\n';
}

void write_mode_fields(std::ostream& os, std::string_view prefix, const ModeResult& r) {
    os << prefix << "mode=" << to_string(r.mode) << '\n'
       << prefix << "iip3_dbm=" << format_double(r.iip3_dbm) << '\n'
       << prefix << "oip3_dbm=" << format_double(r.oip3_dbm) << '\n'
       << prefix << "gain_db=" << format_double(r.gain_db) << '\n';
    write_line_fields(os, std::string(prefix) + "fund.", r.fund_line);
    write_line_fields(os, std::string(prefix) + "im3.", r.im3_line);
}

struct KeyValues {
    std::map<std::string, std::pair<std::string, std::size_t>> entries;

    bool has(const std::string& k) const { return entries.count(k) != 0; }
    const std::pair<std::string, std::size_t>& at(const std::string& k) const {
        const auto it = entries.find(k);
        if (it == entries.end()) throw ParseError("report is missing key '" + k + "'", 0);
        return it->second;
    }
    std::string str(const std::string& k) const { return at(k).first; }
    double num(const std::string& k) const { return parse_double(at(k).first, at(k).second); }
    std::size_t count(const std::string& k) const {
        return static_cast<std::size_t>(parse_u64(at(k).first, at(k).second));
    }
};

FitLine read_line_fields(const KeyValues& kv, const std::string& prefix) {
    return {kv.num(prefix + "slope"), kv.num(prefix + "intercept_dbm"),
            kv.num(prefix + "residual_rms_db"), kv.count(prefix + "n_points")};
}

ModeResult read_mode_fields(const KeyValues& kv, const std::string& prefix) {
    ModeResult r;
    const auto mode = parse_fit_mode(kv.str(prefix + "mode"));
    if (!mode) throw ParseError("unknown fit mode", kv.at(prefix + "mode").second);
    r.mode = *mode;
    r.iip3_dbm = kv.num(prefix + "iip3_dbm");
    r.oip3_dbm = kv.num(prefix + "oip3_dbm");
    r.gain_db = kv.num(prefix + "gain_db");
    r.fund_line = read_line_fields(kv, prefix + "fund.");
    r.im3_line = read_line_fields(kv, prefix + "im3.");
    return r;
}

}  // namespace

void write_report(std::ostream& os, const Ip3Report& report) {
    os << "status=" << to_string(report.status) << '\n'
       << "message=" << one_line(report.message) << '\n';
    if (report.ok()) {
        write_mode_fields(os, "", report.result);
        os << "region.first=" << report.region_first << '\n'
           << "region.last=" << report.region_last << '\n';
    }
    os << "excluded.count=" << report.excluded.size() << '\n';
    for (std::size_t i = 0; i < report.excluded.size(); ++i) {
        const auto& e = report.excluded[i];
        os << "excluded." << i << '=' << e.index << ',' << format_double(e.pin_dbm) << ','
           << to_string(e.reason) << '\n';
    }
    if (report.alternate) write_mode_fields(os, "alt.", *report.alternate);
    os << "warning.count=" << report.warnings.size() << '\n';
    for (std::size_t i = 0; i < report.warnings.size(); ++i)
        os << "warning." << i << '=' << one_line(report.warnings[i]) << '\n';
}

Ip3Report read_report(std::istream& is) {
    KeyValues kv;
    for (const auto& [n, text] : read_lines(is)) {
        if (trim(text).empty() || text.front() == '#') continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError("expected key=value", n);
        kv.entries[std::string(trim(std::string_view(text).substr(0, eq)))] = {text.substr(eq + 1), n};
    }
    Ip3Report rep;
    const auto status = kv.str("status");
    if (status == "ok") rep.status = ReportStatus::ok;
    else if (status == "not_measurable") rep.status = ReportStatus::not_measurable;
    else throw ParseError("unknown status '" + status + "'", kv.at("status").second);
    rep.message = kv.str("message");
    if (rep.ok()) {
        rep.result = read_mode_fields(kv, "");
        rep.region_first = kv.count("region.first");
        rep.region_last = kv.count("region.last");
    }
    const std::size_t n_excl = kv.count("excluded.count");
    for (std::size_t i = 0; i < n_excl; ++i) {
        const std::string key = "excluded." + std::to_string(i);
        const auto& [value, line] = kv.at(key);
        const auto f = split(value, ',');
        if (f.size() != 3) throw ParseError("malformed exclusion entry", line);
        const auto reason = parse_exclusion_reason(f[2]);
        if (!reason) throw ParseError("unknown exclusion reason", line);
        rep.excluded.push_back({static_cast<std::size_t>(parse_u64(f[0], line)),
                                parse_double(f[1], line), *reason});
    }
    if (kv.has("alt.mode")) rep.alternate = read_mode_fields(kv, "alt.");
    const std::size_t n_warn = kv.count("warning.count");
    for (std::size_t i = 0; i < n_warn; ++i) rep.warnings.push_back(kv.str("warning." + std::to_string(i)));
    return rep;
}

void write_report_summary_csv(std::ostream& os, const Ip3Report& report) {
    os << kSummaryCsvHeader << '\n' << to_string(report.status) << ',';
    if (!report.ok()) {
        os << ",,,,,,,,\n";
        return;
    }
    const auto& r = report.result;
    os << to_string(r.mode) << ',' << format_double(r.iip3_dbm) << ','
       << format_double(r.oip3_dbm) << ',' << format_double(r.gain_db) << ','
       << format_double(r.fund_line.slope) << ',' << format_double(r.im3_line.slope) << ','
       << format_double(r.fund_line.residual_rms_db) << ','
       << format_double(r.im3_line.residual_rms_db) << ',' << r.fund_line.n_points << '\n';
}

void write_plot_line_csv(std::ostream& os, const FitLine& line, double pin_lo, double pin_hi,
                         int samples) {
    if (samples < 2) throw InvalidArgument("plot line needs at least 2 samples");
    os << kPlotCsvHeader << '\n';
    for (int i = 0; i < samples; ++i) {
        const double pin = pin_lo + (pin_hi - pin_lo) * i / (samples - 1);
        os << format_double(pin) << ',' << format_double(line.at(pin)) << '\n';
    }
}

void save_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
    f << text;
    if (!f) throw IoError("failed writing '" + path.string() + "'");
}

std::string load_text(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("file not found: '" + path.string() + "'");
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace ip3lab
