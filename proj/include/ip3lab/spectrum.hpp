// Averaged, windowed periodogram: the software spectrum analyzer.
//
// Scaling: a bin-centered tone of amplitude A reads (A^2/2) in its peak bin,
// independent of the window (coherent gain is divided out). With the
// rectangular window the bin powers sum to the time-domain mean power.

#ifndef IP3LAB_SPECTRUM_HPP
#define IP3LAB_SPECTRUM_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "ip3lab/errors.hpp"
#include "ip3lab/signal.hpp"
#include "ip3lab/units.hpp"

namespace ip3lab {

enum class Window { rectangular, hann, flattop };

inline std::string_view to_string(Window w) {
    switch (w) {
        case Window::rectangular: return "rectangular";
        case Window::hann: return "hann";
        case Window::flattop: return "flattop";
    }
    return "unknown";
}

inline std::optional<Window> parse_window(std::string_view name) {
    if (name == "rectangular" || name == "rect") return Window::rectangular;
    if (name == "hann") return Window::hann;
    if (name == "flattop" || name == "flat-top") return Window::flattop;
    return std::nullopt;
}

/// Dynamic range below the strongest bin; weaker bins are clamped to it.
inline constexpr double kSpectrumDynamicRangeDb = 200.0;

/// Periodic (DFT-even) window of length n.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> make_window(Window kind, Eigen::Index n) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(n);
    const double step = 2.0 * std::numbers::pi / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = step * static_cast<double>(i);
        double v = 1.0;
        switch (kind) {
            case Window::rectangular: break;
            case Window::hann: v = 0.5 - 0.5 * std::cos(x); break;
            case Window::flattop: {
                // HFT116D: 0.003 dB scalloping, zero at the segment edges.
                static constexpr double c[] = {1.0, 1.9575375, 1.4780705,
                                               0.6367431, 0.1228389, 0.0066288};
                v = 0.0;
                for (int k = 0; k < 6; ++k) v += (k % 2 ? -c[k] : c[k]) * std::cos(k * x);
                break;
            }
        }
        w[i] = static_cast<Scalar>(v);
    }
    return w;
}

struct Spectrum {
    Eigen::VectorXd bin_powers_dbm;  ///< ascending frequency order
    Eigen::VectorXd bin_freqs_hz;    ///< offsets from f0, spanning (-fs/2, fs/2]
    Eigen::Index fft_size = 0;
    Window window = Window::flattop;
    int n_averages = 1;
    double enbw_bins = 1.0;
    double sample_rate_hz = 0.0;

    double bin_width_hz() const { return sample_rate_hz / static_cast<double>(fft_size); }
    double min_freq_hz() const { return bin_freqs_hz[0]; }
    double max_freq_hz() const { return bin_freqs_hz[fft_size - 1]; }

    /// Index of the bin whose center is closest to `freq_hz`, clamped to the span.
    Eigen::Index nearest_bin(double freq_hz) const {
        const auto k = static_cast<Eigen::Index>(std::llround(freq_hz / bin_width_hz()));
        return std::clamp<Eigen::Index>(k + fft_size / 2 - 1, 0, fft_size - 1);
    }

    double linear_power_watts(Eigen::Index bin) const { return dbm_to_watts(bin_powers_dbm[bin]); }
};

template <typename Scalar>
Spectrum estimate_spectrum(const Signal<Scalar>& signal, Eigen::Index fft_size, Window window,
                           int n_averages) {
    if (fft_size < 2 || (fft_size & (fft_size - 1)) != 0)
        throw InvalidArgument("fft_size must be a power of two >= 2, got " +
                              std::to_string(fft_size));
    if (n_averages < 1) throw InvalidArgument("n_averages must be >= 1");
    const auto required = static_cast<std::size_t>(fft_size) * static_cast<std::size_t>(n_averages);
    if (static_cast<std::size_t>(signal.size()) < required)
        throw InsufficientSamples(required, static_cast<std::size_t>(signal.size()));

    const auto w = make_window<Scalar>(window, fft_size);
    const double coherent = static_cast<double>(w.sum());
    const double scale = 1.0 / (2.0 * coherent * coherent * n_averages);

    Eigen::FFT<Scalar> fft;
    SampleVector<Scalar> segment(fft_size);
    SampleVector<Scalar> bins(fft_size);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(fft_size);
    for (int m = 0; m < n_averages; ++m) {
        segment = signal.samples.segment(m * fft_size, fft_size).cwiseProduct(
            w.template cast<std::complex<Scalar>>());
        fft.fwd(bins, segment);
        acc += bins.cwiseAbs2().template cast<double>();
    }

    Spectrum spec;
    spec.fft_size = fft_size;
    spec.window = window;
    spec.n_averages = n_averages;
    spec.sample_rate_hz = static_cast<double>(signal.sample_rate);
    spec.enbw_bins = static_cast<double>(fft_size) * static_cast<double>(w.squaredNorm()) /
                     (coherent * coherent);
    spec.bin_powers_dbm.resize(fft_size);
    spec.bin_freqs_hz.resize(fft_size);

    const double df = spec.bin_width_hz();
    const Eigen::Index half = fft_size / 2;
    for (Eigen::Index i = 0; i < fft_size; ++i) {
        const Eigen::Index k = i - half + 1;  // -N/2+1 .. N/2
        const Eigen::Index src = k < 0 ? k + fft_size : k;
        spec.bin_freqs_hz[i] = static_cast<double>(k) * df;
        spec.bin_powers_dbm[i] = watts_to_dbm(acc[src] * scale);
    }
    const double floor =
        std::max(kPowerFloorDbm, spec.bin_powers_dbm.maxCoeff() - kSpectrumDynamicRangeDb);
    spec.bin_powers_dbm = spec.bin_powers_dbm.cwiseMax(floor);
    return spec;
}

struct PeakReading {
    double power_dbm = kPowerFloorDbm;
    double freq_hz = 0.0;
    Eigen::Index bin = 0;
};

namespace detail {

/// Inclusive bin range covering [lo_hz, hi_hz]; the nearest bin when no center falls inside.
inline std::pair<Eigen::Index, Eigen::Index> bin_range(const Spectrum& spec, double lo_hz,
                                                       double hi_hz) {
    if (hi_hz < spec.min_freq_hz() - 0.5 * spec.bin_width_hz() ||
        lo_hz > spec.max_freq_hz() + 0.5 * spec.bin_width_hz()) {
        throw InvalidArgument("search window [" + std::to_string(lo_hz) + ", " +
                              std::to_string(hi_hz) + "] Hz lies outside the spectrum span");
    }
    const double* f = spec.bin_freqs_hz.data();
    const auto first = std::lower_bound(f, f + spec.fft_size, lo_hz) - f;
    const auto last = std::upper_bound(f, f + spec.fft_size, hi_hz) - f - 1;
    if (first > last) {
        const Eigen::Index b = spec.nearest_bin(0.5 * (lo_hz + hi_hz));
        return {b, b};
    }
    return {first, last};
}

}  // namespace detail

/// Strongest bin within target +- halfwidth.
inline PeakReading peak_power_at(const Spectrum& spec, double target_hz, double halfwidth_hz) {
    if (halfwidth_hz < 0) throw InvalidArgument("halfwidth must be non-negative");
    const auto [first, last] = detail::bin_range(spec, target_hz - halfwidth_hz,
                                                 target_hz + halfwidth_hz);
    PeakReading best{spec.bin_powers_dbm[first], spec.bin_freqs_hz[first], first};
    for (Eigen::Index i = first + 1; i <= last; ++i) {
        if (spec.bin_powers_dbm[i] > best.power_dbm)
            best = {spec.bin_powers_dbm[i], spec.bin_freqs_hz[i], i};
    }
    return best;
}

/// Mean per-bin power (averaged linearly) within center +- halfwidth.
inline double mean_bin_power_dbm(const Spectrum& spec, double center_hz, double halfwidth_hz) {
    const auto [first, last] = detail::bin_range(spec, center_hz - halfwidth_hz,
                                                 center_hz + halfwidth_hz);
    double acc = 0.0;
    for (Eigen::Index i = first; i <= last; ++i) acc += spec.linear_power_watts(i);
    return watts_to_dbm(acc / static_cast<double>(last - first + 1));
}

/// Expected per-bin reading of white noise with the given density.
inline double noise_bin_power_dbm(const Spectrum& spec, double density_dbm_hz) {
    return density_dbm_hz + 10.0 * std::log10(spec.bin_width_hz() * spec.enbw_bins);
}

}  // namespace ip3lab

#endif  // IP3LAB_SPECTRUM_HPP
