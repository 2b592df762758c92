#include "ip3lab/twotone.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <thread>

namespace ip3lab {

namespace {

constexpr double kMinSeparationBins = 3.0;
constexpr double kPeakHalfwidthBins = 2.0;
constexpr double kGuardHalfwidthBins = 32.0;

}  // namespace

std::pair<double, double> im3_freqs(double f1_hz, double f2_hz) {
    if (f1_hz == f2_hz) throw InvalidArgument("degenerate tones: f1 == f2");
    return {2.0 * f1_hz - f2_hz, 2.0 * f2_hz - f1_hz};
}

double noise_guard_center_hz(const TwoToneConfig& cfg) {
    const auto [im3_lo, im3_hi] = im3_freqs(cfg.lo_tone_hz(), cfg.hi_tone_hz());
    (void)im3_hi;
    return 0.5 * (im3_lo - 0.5 * cfg.sample_rate_hz);
}

void TwoToneConfig::validate() const {
    if (!(sample_rate_hz > 0.0)) throw InvalidArgument("sample_rate_hz must be > 0");
    if (fft_size < 16 || (fft_size & (fft_size - 1)) != 0)
        throw InvalidArgument("fft_size must be a power of two >= 16");
    if (n_averages < 1) throw InvalidArgument("n_averages must be >= 1");
    if (!std::isfinite(per_tone_input_power_dbm))
        throw InvalidArgument("per-tone input power must be finite");

    const auto [im3_a, im3_b] = im3_freqs(f1_offset_hz, f2_offset_hz);
    const double nyquist = 0.5 * sample_rate_hz;
    const std::array<double, 4> freqs{f1_offset_hz, f2_offset_hz, im3_a, im3_b};
    for (double f : freqs) {
        if (!(std::abs(f) < nyquist))
            throw AliasingError("measurement frequency " + std::to_string(f) +
                                " Hz is outside (-fs/2, fs/2)");
    }
    const double min_sep = kMinSeparationBins * bin_width_hz();
    for (std::size_t i = 0; i < freqs.size(); ++i)
        for (std::size_t j = i + 1; j < freqs.size(); ++j)
            if (std::abs(freqs[i] - freqs[j]) < min_sep)
                throw InvalidArgument("measurement frequencies " + std::to_string(freqs[i]) +
                                      " and " + std::to_string(freqs[j]) +
                                      " Hz collide within the spectrum resolution");

    const double guard = noise_guard_center_hz(*this);
    const double guard_half = (kGuardHalfwidthBins + kMinSeparationBins) * bin_width_hz();
    for (double f : freqs)
        if (std::abs(f - guard) < guard_half)
            throw InvalidArgument("noise guard band overlaps a measurement frequency");
    if (guard - guard_half <= -nyquist)
        throw InvalidArgument("no room for the noise guard band below the lower IM3 product");
}

SweepPoint run_point(std::span<const ChainStage> chain, const TwoToneConfig& cfg) {
    cfg.validate();
    const Eigen::Index n = cfg.fft_size * cfg.n_averages;
    const double source_dbm = cfg.per_tone_input_power_dbm - gain_before_dut_db(chain);
    const double amplitude = dbm_to_amplitude(source_dbm);

    const std::array<ComplexSignal, 2> sources{
        gen_tone<double>({cfg.f1_offset_hz, amplitude, 0.0}, cfg.sample_rate_hz, n),
        gen_tone<double>({cfg.f2_offset_hz, amplitude, 0.0}, cfg.sample_rate_hz, n)};
    const auto out = run_chain(std::span<const ComplexSignal>(sources), chain, cfg.rng_seed);
    const auto spec = estimate_spectrum(out, cfg.fft_size, cfg.window, cfg.n_averages);

    const double hw = kPeakHalfwidthBins * cfg.bin_width_hz();
    const auto [im3_lo, im3_hi] = im3_freqs(cfg.lo_tone_hz(), cfg.hi_tone_hz());
    SweepPoint p;
    p.pin_dbm = cfg.per_tone_input_power_dbm;
    p.p_fund_lo = peak_power_at(spec, cfg.lo_tone_hz(), hw).power_dbm;
    p.p_fund_hi = peak_power_at(spec, cfg.hi_tone_hz(), hw).power_dbm;
    p.p_im3_lo = peak_power_at(spec, im3_lo, hw).power_dbm;
    p.p_im3_hi = peak_power_at(spec, im3_hi, hw).power_dbm;
    p.noise_floor_dbm = mean_bin_power_dbm(spec, noise_guard_center_hz(cfg),
                                           kGuardHalfwidthBins * cfg.bin_width_hz());
    return p;
}

std::size_t sweep_point_count(double pin_start_dbm, double pin_stop_dbm, double step_db) {
    if (!(step_db > 0.0)) throw InvalidArgument("sweep step must be > 0 dB");
    if (!(pin_stop_dbm > pin_start_dbm)) throw InvalidArgument("sweep stop must exceed start");
    // Tolerate rounding in (stop - start) / step.
    const double span = (pin_stop_dbm - pin_start_dbm) / step_db;
    const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
    if (count < 2)
        throw InvalidArgument("sweep step " + std::to_string(step_db) +
                              " dB exceeds the range; only a single point would be measured");
    return count;
}

SweepData run_sweep(std::span<const ChainStage> chain, const TwoToneConfig& cfg,
                    double pin_start_dbm, double pin_stop_dbm, double step_db,
                    const SweepOptions& options) {
    const std::size_t count = sweep_point_count(pin_start_dbm, pin_stop_dbm, step_db);
    TwoToneConfig base = cfg;
    base.per_tone_input_power_dbm = pin_start_dbm;
    base.validate();

    SweepData data;
    data.config = base;
    data.step_db = step_db;
    data.model = find_dut(chain);
    data.points.resize(count);

    auto job = [&](std::size_t i) {
        TwoToneConfig c = base;
        c.per_tone_input_power_dbm = pin_start_dbm + static_cast<double>(i) * step_db;
        c.rng_seed = derive_seed(base.rng_seed, i);
        data.points[i] = run_point(chain, c);
    };

    unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
    } else {
        // Workers stride over the indices; each writes only its own slots.
        std::vector<std::future<void>> workers;
        workers.reserve(threads);
        for (unsigned t = 0; t < threads; ++t)
            workers.push_back(std::async(std::launch::async, [&, t] {
                for (std::size_t i = t; i < count; i += threads) job(i);
            }));
        for (auto& w : workers) w.get();
    }

    if (count < kMinSweepPoints)
        data.warnings.push_back("only " + std::to_string(count) + " sweep points; at least " +
                                std::to_string(kMinSweepPoints) + " are recommended");
    return data;
}

}  // namespace ip3lab
