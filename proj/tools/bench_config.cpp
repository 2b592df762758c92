#include "bench_config.hpp"

#include <cmath>
#include <set>

#include <yaml-cpp/yaml.h>

#include "ip3lab/io.hpp"

namespace ip3lab::cli {

namespace {

std::size_t line_of(const YAML::Node& n) {
    const auto m = n.Mark();
    return m.is_null() ? 0 : static_cast<std::size_t>(m.line + 1);
}

/// One mapping in the YAML tree; remembers which keys were read so leftovers can be rejected.
class Section {
public:
    Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap())
            throw ConfigError(path_, "expected a mapping", line_of(node_));
    }

    bool present() const { return node_ && node_.IsMap(); }

    YAML::Node child(const std::string& key) {
        used_.insert(key);
        // Const lookup: the mutable operator[] would insert a null node.
        const YAML::Node& n = node_;
        if (!present()) return YAML::Node(YAML::NodeType::Undefined);
        return n[key];
    }

    std::string key_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    std::optional<double> number(const std::string& key) {
        const YAML::Node n = child(key);
        if (!n) return std::nullopt;
        if (!n.IsScalar()) throw ConfigError(key_path(key), "expected a number", line_of(n));
        double v = 0.0;
        try {
            v = parse_double(n.Scalar(), 0);
        } catch (const ParseError&) {
            throw ConfigError(key_path(key), "expected a number, got '" + n.Scalar() + "'",
                              line_of(n));
        }
        if (!std::isfinite(v)) throw ConfigError(key_path(key), "must be finite", line_of(n));
        return v;
    }

    /// Number or the literal `none`; the outer optional is "key present".
    std::optional<std::optional<double>> number_or_none(const std::string& key) {
        const YAML::Node n = child(key);
        if (!n) return std::nullopt;
        if (n.IsNull() || (n.IsScalar() && n.Scalar() == "none"))
            return std::optional<std::optional<double>>(std::in_place, std::nullopt);
        used_.erase(key);
        return std::optional<std::optional<double>>(std::in_place, *number(key));
    }

    std::optional<long long> integer(const std::string& key, long long min_value) {
        const auto v = number(key);
        if (!v) return std::nullopt;
        if (*v != std::floor(*v) || *v < static_cast<double>(min_value))
            throw ConfigError(key_path(key),
                              "expected an integer >= " + std::to_string(min_value),
                              line_of(child(key)));
        return static_cast<long long>(*v);
    }

    std::optional<std::string> text(const std::string& key) {
        const YAML::Node n = child(key);
        if (!n) return std::nullopt;
        if (!n.IsScalar()) throw ConfigError(key_path(key), "expected a string", line_of(n));
        return n.Scalar();
    }

    void reject_unknown() const {
        if (!present()) return;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!used_.count(key)) throw ConfigError(key_path(key), "unknown key", line_of(kv.first));
        }
    }

    std::size_t line() const { return line_of(node_); }

private:
    YAML::Node node_;
    std::string path_;
    std::set<std::string> used_;
};

ChainStage parse_stage(const YAML::Node& item, std::size_t index, const FrontEndModel& model) {
    const std::string path = "chain[" + std::to_string(index) + "]";
    if (item.IsScalar()) {
        const auto& name = item.Scalar();
        if (name == "dut") return stage::Dut{model};
        if (name == "termination") return stage::Termination{};
        if (name == "combiner") return stage::Combiner{};
        throw ConfigError(path, "unknown or incomplete stage '" + name + "'", line_of(item));
    }
    if (!item.IsMap() || item.size() != 1)
        throw ConfigError(path, "expected a stage name or a single-key mapping", line_of(item));
    const auto name = item.begin()->first.as<std::string>();
    Section s(item.begin()->second, path + "." + name);
    ChainStage st;
    if (name == "attenuator") {
        const auto loss = s.number("loss_db");
        if (!loss) throw ConfigError(s.key_path("loss_db"), "required", s.line());
        if (*loss < 0) throw ConfigError(s.key_path("loss_db"), "must be >= 0", s.line());
        st = stage::Attenuator{*loss};
    } else if (name == "combiner") {
        stage::Combiner c;
        if (auto v = s.integer("ports", 1)) c.n_ports = static_cast<int>(*v);
        if (auto v = s.number("insertion_loss_db")) c.insertion_loss_db = *v;
        if (c.insertion_loss_db < 0)
            throw ConfigError(s.key_path("insertion_loss_db"), "must be >= 0", s.line());
        st = c;
    } else if (name == "gain") {
        const auto g = s.number("gain_db");
        if (!g) throw ConfigError(s.key_path("gain_db"), "required", s.line());
        st = stage::Gain{*g};
    } else if (name == "noise") {
        const auto d = s.number("density_dbm_hz");
        if (!d) throw ConfigError(s.key_path("density_dbm_hz"), "required", s.line());
        st = stage::Noise{*d};
    } else if (name == "clip") {
        const auto l = s.number("level");
        if (!l || *l <= 0) throw ConfigError(s.key_path("level"), "required, > 0", s.line());
        st = stage::Clip{*l};
    } else {
        throw ConfigError(path, "unknown stage '" + name + "'", line_of(item));
    }
    s.reject_unknown();
    return st;
}

}  // namespace

BenchConfig default_bench_config() {
    BenchConfig cfg;
    cfg.model = FrontEndModel::from_iip3(10.0, 0.0);
    cfg.model.noise_density_dbm_hz = -160.0;
    cfg.chain = {stage::Combiner{3, 4.8}, stage::Termination{}, stage::Attenuator{10.0},
                 stage::Dut{cfg.model}};
    cfg.cal_gains_db = {0, 10, 20, 30, 40, 50, 60, 70};
    cfg.cal_bench.rx_noise_density_dbm_hz = -160.0;
    return cfg;
}

BenchConfig parse_bench_config(std::string_view yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml_text));
    } catch (const YAML::Exception& e) {
        throw ConfigError("<document>", e.msg,
                          e.mark.is_null() ? 0 : static_cast<std::size_t>(e.mark.line + 1));
    }
    BenchConfig cfg = default_bench_config();
    Section top(root, "");

    {
        Section s(top.child("bench"), "bench");
        if (auto v = s.number("center_freq_hz")) cfg.tones.center_freq_hz = *v;
        if (auto v = s.number("sample_rate_hz")) cfg.tones.sample_rate_hz = *v;
        if (auto v = s.integer("seed", 0)) cfg.tones.rng_seed = static_cast<std::uint64_t>(*v);
        if (auto v = s.integer("threads", 0)) cfg.threads = static_cast<unsigned>(*v);
        if (cfg.tones.center_freq_hz <= 0)
            throw ConfigError("bench.center_freq_hz", "must be > 0", s.line());
        if (cfg.tones.sample_rate_hz <= 0)
            throw ConfigError("bench.sample_rate_hz", "must be > 0", s.line());
        s.reject_unknown();
    }
    {
        Section s(top.child("tones"), "tones");
        if (auto v = s.number("f1_offset_hz")) cfg.tones.f1_offset_hz = *v;
        if (auto v = s.number("f2_offset_hz")) cfg.tones.f2_offset_hz = *v;
        s.reject_unknown();
    }
    {
        Section s(top.child("sweep"), "sweep");
        if (auto v = s.number("start_dbm")) cfg.sweep_start_dbm = *v;
        if (auto v = s.number("stop_dbm")) cfg.sweep_stop_dbm = *v;
        if (auto v = s.number("step_db")) cfg.sweep_step_db = *v;
        if (cfg.sweep_step_db <= 0) throw ConfigError("sweep.step_db", "must be > 0", s.line());
        if (cfg.sweep_stop_dbm <= cfg.sweep_start_dbm)
            throw ConfigError("sweep.stop_dbm", "must exceed sweep.start_dbm", s.line());
        s.reject_unknown();
    }
    {
        Section s(top.child("spectrum"), "spectrum");
        if (auto v = s.integer("fft_size", 16)) cfg.tones.fft_size = static_cast<Eigen::Index>(*v);
        if (auto v = s.integer("averages", 1)) cfg.tones.n_averages = static_cast<int>(*v);
        if (auto v = s.text("window")) {
            const auto w = parse_window(*v);
            if (!w) throw ConfigError("spectrum.window", "expected rectangular, hann or flattop", s.line());
            cfg.tones.window = *w;
        }
        if ((cfg.tones.fft_size & (cfg.tones.fft_size - 1)) != 0)
            throw ConfigError("spectrum.fft_size", "must be a power of two", s.line());
        s.reject_unknown();
    }
    {
        Section s(top.child("model"), "model");
        if (s.present()) {
            const auto b1_db = s.number("b1_db");
            const auto b1_lin = s.number("b1_linear");
            if (b1_db && b1_lin)
                throw ConfigError("model.b1_db", "give either b1_db or b1_linear, not both", s.line());
            double b1 = cfg.model.b1;
            if (b1_db) b1 = db_to_amplitude_ratio(*b1_db);
            if (b1_lin) {
                if (*b1_lin <= 0) throw ConfigError("model.b1_linear", "must be > 0", s.line());
                b1 = *b1_lin;
            }
            const auto b3 = s.number("b3");
            const auto iip3 = s.number("iip3_dbm");
            if (b3 && iip3)
                throw ConfigError("model.iip3_dbm", "give either b3 or iip3_dbm, not both", s.line());
            FrontEndModel m = cfg.model;
            m.b1 = b1;
            if (b3) m.b3 = *b3;
            else m.b3 = FrontEndModel::from_iip3(b1, iip3 ? *iip3 : 0.0).b3;
            if (auto v = s.number("b5")) m.b5 = *v;
            if (auto v = s.number_or_none("noise_density_dbm_hz")) m.noise_density_dbm_hz = *v;
            if (auto v = s.number_or_none("clip_amplitude")) {
                if (*v && **v <= 0) throw ConfigError("model.clip_amplitude", "must be > 0", s.line());
                m.clip_amplitude = *v;
            }
            cfg.model = m;
        }
        s.reject_unknown();
    }
    {
        const YAML::Node chain = top.child("chain");
        if (chain) {
            if (!chain.IsSequence()) throw ConfigError("chain", "expected a list of stages", line_of(chain));
            cfg.chain.clear();
            std::size_t i = 0;
            for (const auto& item : chain) cfg.chain.push_back(parse_stage(item, i++, cfg.model));
        } else {
            for (auto& st : cfg.chain)
                if (auto* d = std::get_if<stage::Dut>(&st)) d->model = cfg.model;
        }
    }
    {
        Section s(top.child("calibration"), "calibration");
        if (const YAML::Node g = s.child("gains_db")) {
            if (!g.IsSequence()) throw ConfigError("calibration.gains_db", "expected a list", line_of(g));
            cfg.cal_gains_db.clear();
            for (const auto& v : g) {
                try {
                    cfg.cal_gains_db.push_back(parse_double(v.Scalar(), 0));
                } catch (const ParseError&) {
                    throw ConfigError("calibration.gains_db", "expected numbers", line_of(v));
                }
            }
        }
        if (auto v = s.number("tx_power_at_0db_dbm")) cfg.cal_bench.tx_power_at_0db_dbm = *v;
        if (auto v = s.number("path_loss_db")) cfg.cal_bench.path_loss_db = *v;
        if (auto v = s.number("rx_full_scale_dbm")) cfg.cal_bench.rx_full_scale_dbm = *v;
        if (auto v = s.number_or_none("rx_noise_density_dbm_hz")) cfg.cal_bench.rx_noise_density_dbm_hz = *v;
        if (auto v = s.number("tone_offset_hz")) cfg.cal_bench.tone_offset_hz = *v;
        s.reject_unknown();
    }
    {
        Section s(top.child("estimate"), "estimate");
        if (auto v = s.text("mode")) {
            const auto m = parse_fit_mode(*v);
            if (!m) throw ConfigError("estimate.mode", "expected constrained or free", s.line());
            cfg.estimate.mode = *m;
        }
        if (auto v = s.number("noise_margin_db")) cfg.estimate.region.noise_margin_db = *v;
        if (auto v = s.number("compression_margin_db")) cfg.estimate.region.compression_margin_db = *v;
        s.reject_unknown();
    }
    {
        Section s(top.child("output"), "output");
        if (auto v = s.text("dir")) cfg.out_dir = *v;
        s.reject_unknown();
    }
    top.reject_unknown();

    const auto line_of_section = [&](const char* key) {
        const YAML::Node& r = root;
        return r.IsMap() && r[key] ? line_of(r[key]) : std::size_t{0};
    };
    try {
        validate_bench_config(cfg);
    } catch (const ConfigError& e) {
        throw ConfigError(e.key(), e.detail(),
                          line_of_section(e.key().substr(0, e.key().find('.')).c_str()));
    }
    return cfg;
}

void validate_bench_config(const BenchConfig& cfg) {
    const auto check = [](const char* key, auto&& fn) {
        try {
            fn();
        } catch (const InvalidArgument& e) {
            throw ConfigError(key, e.what());
        }
    };
    check("model", [&] { cfg.model.validate(); });
    check("chain", [&] { for (const auto& st : cfg.chain) validate(st); });
    check("tones", [&] { cfg.tones.validate(); });
    check("sweep", [&] { sweep_point_count(cfg.sweep_start_dbm, cfg.sweep_stop_dbm, cfg.sweep_step_db); });
    if (cfg.cal_gains_db.size() < 2)
        throw ConfigError("calibration.gains_db", "calibration needs at least 2 gains");
}

BenchConfig load_bench_config(const std::filesystem::path& path) {
    return parse_bench_config(load_text(path));
}

}  // namespace ip3lab::cli
