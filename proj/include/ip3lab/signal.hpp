// Complex-baseband signals, tone sources and time-domain power.

#ifndef IP3LAB_SIGNAL_HPP
#define IP3LAB_SIGNAL_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "ip3lab/errors.hpp"
#include "ip3lab/units.hpp"

namespace ip3lab {

template <typename Scalar>
using SampleVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

/// Baseband samples (volts, 1-ohm) at a fixed sample rate, centered on f0.
template <typename Scalar>
struct Signal {
    SampleVector<Scalar> samples;
    Scalar sample_rate{1};

    Eigen::Index size() const { return samples.size(); }
    bool empty() const { return samples.size() == 0; }
};

using ComplexSignal = Signal<double>;

/// One sinusoidal source, offset from the center frequency.
struct ToneSpec {
    double freq_offset_hz = 0.0;
    double amplitude = 1.0;
    double phase = 0.0;
};

template <typename Scalar>
void require_non_empty(const Signal<Scalar>& s) {
    if (s.empty()) throw InvalidArgument("signal has no samples");
}

template <typename Scalar>
Signal<Scalar> gen_tone(const ToneSpec& tone, Scalar sample_rate, Eigen::Index n_samples) {
    if (!(sample_rate > 0)) throw InvalidArgument("sample rate must be positive");
    if (n_samples < 1) throw InvalidArgument("tone needs at least one sample");
    if (!(std::abs(tone.freq_offset_hz) < 0.5 * static_cast<double>(sample_rate))) {
        throw AliasingError("tone offset " + std::to_string(tone.freq_offset_hz) +
                            " Hz is at or beyond Nyquist for fs = " +
                            std::to_string(static_cast<double>(sample_rate)) + " Hz");
    }
    Signal<Scalar> out{SampleVector<Scalar>(n_samples), sample_rate};
    const double w = 2.0 * std::numbers::pi * tone.freq_offset_hz / static_cast<double>(sample_rate);
    for (Eigen::Index k = 0; k < n_samples; ++k) {
        // k * w is reduced per sample so long tones keep full phase precision.
        const double cycles = static_cast<double>(k) * (w / (2.0 * std::numbers::pi));
        const double theta =
            2.0 * std::numbers::pi * (cycles - std::floor(cycles)) + tone.phase;
        out.samples[k] = std::polar(static_cast<Scalar>(tone.amplitude), static_cast<Scalar>(theta));
    }
    return out;
}

template <typename Scalar>
Signal<Scalar> sum_signals(std::span<const Signal<Scalar>> signals) {
    if (signals.empty()) throw InvalidArgument("nothing to sum");
    Signal<Scalar> out = signals.front();
    require_non_empty(out);
    for (const auto& s : signals.subspan(1)) {
        if (s.sample_rate != out.sample_rate)
            throw InvalidArgument("cannot sum signals with different sample rates");
        if (s.size() != out.size())
            throw InvalidArgument("cannot sum signals of different lengths");
        out.samples += s.samples;
    }
    return out;
}

/// Mean power in watts: mean(|x|^2) / 2.
template <typename Scalar>
double time_power_watts(const Signal<Scalar>& s) {
    require_non_empty(s);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < s.size(); ++k) acc += static_cast<double>(std::norm(s.samples[k]));
    return 0.5 * acc / static_cast<double>(s.size());
}

/// Mean power in dBm, or kPowerFloorDbm for a silent signal.
template <typename Scalar>
double time_power_dbm(const Signal<Scalar>& s) {
    return watts_to_dbm(time_power_watts(s));
}

}  // namespace ip3lab

#endif  // IP3LAB_SIGNAL_HPP
