// Bench component models: attenuators, combiner, termination, gain block,
// hard clipper, additive noise and the memoryless polynomial DUT.
//
// The DUT uses the baseband-equivalent odd polynomial
//
//     y = b1 x + b3 |x|^2 x + b5 |x|^4 x
//
// A real passband cubic coefficient a3 maps to b3 = (3/4) a3, which gives the
// same in-band fundamental and IM3 products without simulating the carrier.

#ifndef IP3LAB_RF_COMPONENTS_HPP
#define IP3LAB_RF_COMPONENTS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "ip3lab/errors.hpp"
#include "ip3lab/random.hpp"
#include "ip3lab/signal.hpp"
#include "ip3lab/units.hpp"

namespace ip3lab {

struct FrontEndModel {
    double b1 = 1.0;  ///< linear voltage gain, > 0
    double b3 = 0.0;  ///< cubic coefficient, V^-2; negative compresses
    double b5 = 0.0;
    std::optional<double> noise_density_dbm_hz;  ///< output-referred; none = noiseless
    std::optional<double> clip_amplitude;        ///< volts; none = no clipping

    void validate() const {
        if (!(b1 > 0.0) || !std::isfinite(b1)) throw InvalidArgument("model b1 must be > 0");
        if (!std::isfinite(b3) || !std::isfinite(b5))
            throw InvalidArgument("model coefficients must be finite");
        if (clip_amplitude && !(*clip_amplitude > 0.0))
            throw InvalidArgument("clip amplitude must be > 0");
        if (noise_density_dbm_hz && !std::isfinite(*noise_density_dbm_hz))
            throw InvalidArgument("noise density must be finite");
    }

    double gain_db() const { return 20.0 * std::log10(b1); }

    /// Model with voltage gain `b1` whose analytic IIP3 is `iip3_dbm`.
    static FrontEndModel from_iip3(double b1, double iip3_dbm, bool compressive = true) {
        FrontEndModel m;
        m.b1 = b1;
        const double magnitude = b1 / (2.0 * dbm_to_watts(iip3_dbm));
        m.b3 = compressive ? -magnitude : magnitude;
        m.validate();
        return m;
    }

    friend bool operator==(const FrontEndModel&, const FrontEndModel&) = default;
};

struct InterceptPoint {
    double iip3_dbm = 0.0;
    double oip3_dbm = 0.0;
};

/// Input power per tone where the extrapolated b1*A and |b3|*A^3 lines meet.
inline InterceptPoint analytic_iip3(const FrontEndModel& model) {
    model.validate();
    if (model.b3 == 0.0)
        throw NotMeasurable("infinite IIP3: linear device (b3 = 0)");
    const double a_squared = model.b1 / std::abs(model.b3);
    const double iip3 = watts_to_dbm(0.5 * a_squared);
    return {iip3, iip3 + model.gain_db()};
}

namespace stage {

struct Attenuator {
    double loss_db = 0.0;
    friend bool operator==(const Attenuator&, const Attenuator&) = default;
};

/// Resistive power combiner; unused ports are assumed terminated.
struct Combiner {
    int n_ports = 3;
    double insertion_loss_db = 4.8;
    friend bool operator==(const Combiner&, const Combiner&) = default;
};

/// Matched load on an unused port.
struct Termination {
    friend bool operator==(const Termination&, const Termination&) = default;
};

struct Dut {
    FrontEndModel model;
    friend bool operator==(const Dut&, const Dut&) = default;
};

struct Clip {
    double level = 1.0;
    friend bool operator==(const Clip&, const Clip&) = default;
};

struct Noise {
    double density_dbm_hz = -174.0;
    friend bool operator==(const Noise&, const Noise&) = default;
};

/// Fixed gain block, e.g. a receiver gain setting after the DUT.
struct Gain {
    double gain_db = 0.0;
    friend bool operator==(const Gain&, const Gain&) = default;
};

}  // namespace stage

using ChainStage = std::variant<stage::Attenuator, stage::Combiner, stage::Termination,
                                stage::Dut, stage::Clip, stage::Noise, stage::Gain>;

inline void validate(const ChainStage& s) {
    std::visit(
        [](const auto& st) {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, stage::Attenuator>) {
                if (!(st.loss_db >= 0.0)) throw InvalidArgument("attenuator loss must be >= 0 dB");
            } else if constexpr (std::is_same_v<T, stage::Combiner>) {
                if (st.n_ports < 1) throw InvalidArgument("combiner needs at least one port");
                if (!(st.insertion_loss_db >= 0.0))
                    throw InvalidArgument("combiner insertion loss must be >= 0 dB");
            } else if constexpr (std::is_same_v<T, stage::Dut>) {
                st.model.validate();
            } else if constexpr (std::is_same_v<T, stage::Clip>) {
                if (!(st.level > 0.0)) throw InvalidArgument("clip level must be > 0");
            } else if constexpr (std::is_same_v<T, stage::Noise>) {
                if (!std::isfinite(st.density_dbm_hz))
                    throw InvalidArgument("noise density must be finite");
            } else if constexpr (std::is_same_v<T, stage::Gain>) {
                if (!std::isfinite(st.gain_db)) throw InvalidArgument("gain must be finite");
            }
        },
        s);
}

template <typename Scalar>
Signal<Scalar> scale_db(const Signal<Scalar>& signal, double gain_db) {
    Signal<Scalar> out = signal;
    out.samples *= static_cast<Scalar>(db_to_amplitude_ratio(gain_db));
    return out;
}

template <typename Scalar>
Signal<Scalar> attenuate(const Signal<Scalar>& signal, double loss_db) {
    if (!(loss_db >= 0.0))
        throw InvalidArgument("attenuator loss must be >= 0 dB, got " + std::to_string(loss_db));
    if (loss_db == 0.0) return signal;
    return scale_db(signal, -loss_db);
}

template <typename Scalar>
Signal<Scalar> combine(std::span<const Signal<Scalar>> signals, double insertion_loss_db) {
    if (!(insertion_loss_db >= 0.0)) throw InvalidArgument("insertion loss must be >= 0 dB");
    return attenuate(sum_signals(signals), insertion_loss_db);
}

/// Magnitude clipping that preserves phase: |y| <= level.
template <typename Scalar>
Signal<Scalar> hard_clip(const Signal<Scalar>& signal, double level) {
    if (!(level > 0.0)) throw InvalidArgument("clip level must be > 0");
    Signal<Scalar> out = signal;
    const auto lim = static_cast<Scalar>(level);
    for (auto& v : out.samples) {
        const Scalar mag = std::abs(v);
        if (mag > lim) v *= lim / mag;
    }
    return out;
}

/// Adds circular complex white Gaussian noise whose total power is density + 10 log10(fs).
template <typename Scalar>
Signal<Scalar> add_noise(const Signal<Scalar>& signal, double density_dbm_hz, std::uint64_t seed) {
    require_non_empty(signal);
    const double total_watts =
        dbm_to_watts(density_dbm_hz + 10.0 * std::log10(static_cast<double>(signal.sample_rate)));
    // P = E|n|^2 / 2, so each quadrature has variance P.
    std::normal_distribution<double> gauss(0.0, std::sqrt(total_watts));
    std::mt19937_64 rng(seed);
    Signal<Scalar> out = signal;
    for (auto& v : out.samples) {
        const double re = gauss(rng);
        const double im = gauss(rng);
        v += std::complex<Scalar>(static_cast<Scalar>(re), static_cast<Scalar>(im));
    }
    return out;
}

/// Polynomial response, then the optional clip, then the optional output noise.
template <typename Scalar>
Signal<Scalar> apply_dut(const Signal<Scalar>& signal, const FrontEndModel& model,
                         std::uint64_t rng_seed) {
    model.validate();
    require_non_empty(signal);
    Signal<Scalar> out = signal;
    const auto b1 = static_cast<Scalar>(model.b1);
    const auto b3 = static_cast<Scalar>(model.b3);
    const auto b5 = static_cast<Scalar>(model.b5);
    for (auto& v : out.samples) {
        const Scalar p = std::norm(v);
        v *= b1 + p * (b3 + p * b5);
    }
    if (model.clip_amplitude) out = hard_clip(out, *model.clip_amplitude);
    if (model.noise_density_dbm_hz) out = add_noise(out, *model.noise_density_dbm_hz, rng_seed);
    return out;
}

namespace detail {

template <typename Scalar>
Signal<Scalar> apply_stage(const Signal<Scalar>& s, const ChainStage& st, std::uint64_t seed) {
    return std::visit(
        [&](const auto& x) -> Signal<Scalar> {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, stage::Attenuator>) return attenuate(s, x.loss_db);
            else if constexpr (std::is_same_v<T, stage::Combiner>) return attenuate(s, x.insertion_loss_db);
            else if constexpr (std::is_same_v<T, stage::Termination>) return s;
            else if constexpr (std::is_same_v<T, stage::Dut>) return apply_dut(s, x.model, seed);
            else if constexpr (std::is_same_v<T, stage::Clip>) return hard_clip(s, x.level);
            else if constexpr (std::is_same_v<T, stage::Noise>) return add_noise(s, x.density_dbm_hz, seed);
            else return scale_db(s, x.gain_db);
        },
        st);
}

inline std::ptrdiff_t first_combiner(std::span<const ChainStage> stages) {
    for (std::size_t i = 0; i < stages.size(); ++i)
        if (std::holds_alternative<stage::Combiner>(stages[i])) return static_cast<std::ptrdiff_t>(i);
    return -1;
}

}  // namespace detail

/// Runs several sources through the chain.
///
/// Stages before the first combiner act on each source separately; the
/// combiner sums the branches. Without a combiner the sources are summed
/// losslessly before the first stage. Every stage gets its own sub-seed.
template <typename Scalar>
Signal<Scalar> run_chain(std::span<const Signal<Scalar>> sources,
                         std::span<const ChainStage> stages, std::uint64_t rng_seed) {
    if (sources.empty()) throw InvalidArgument("chain needs at least one source");
    for (const auto& st : stages) validate(st);

    const std::ptrdiff_t merge = detail::first_combiner(stages);
    std::vector<Signal<Scalar>> branches(sources.begin(), sources.end());
    if (merge > 0) {
        for (std::size_t j = 0; j < branches.size(); ++j)
            for (std::ptrdiff_t i = 0; i < merge; ++i)
                branches[j] = detail::apply_stage(branches[j], stages[static_cast<std::size_t>(i)],
                                                  derive_seed(derive_seed(rng_seed, i), j));
    }
    if (merge >= 0) {
        const auto& comb = std::get<stage::Combiner>(stages[static_cast<std::size_t>(merge)]);
        if (static_cast<int>(branches.size()) > comb.n_ports)
            throw InvalidArgument("combiner has " + std::to_string(comb.n_ports) + " ports but " +
                                  std::to_string(branches.size()) + " sources");
    }
    Signal<Scalar> x = sum_signals(std::span<const Signal<Scalar>>(branches));
    for (std::size_t i = merge > 0 ? static_cast<std::size_t>(merge) : 0; i < stages.size(); ++i)
        x = detail::apply_stage(x, stages[i], derive_seed(rng_seed, i));
    return x;
}

template <typename Scalar>
Signal<Scalar> run_chain(const Signal<Scalar>& signal, std::span<const ChainStage> stages,
                         std::uint64_t rng_seed) {
    return run_chain(std::span<const Signal<Scalar>>(&signal, 1), stages, rng_seed);
}

/// Deterministic gain (dB) from the chain input to the first DUT; 0 if there is no DUT.
inline double gain_before_dut_db(std::span<const ChainStage> stages) {
    double gain = 0.0;
    for (const auto& st : stages) {
        if (std::holds_alternative<stage::Dut>(st)) return gain;
        if (const auto* a = std::get_if<stage::Attenuator>(&st)) gain -= a->loss_db;
        if (const auto* c = std::get_if<stage::Combiner>(&st)) gain -= c->insertion_loss_db;
        if (const auto* g = std::get_if<stage::Gain>(&st)) gain += g->gain_db;
    }
    return 0.0;
}

/// The first DUT's model, if the chain has one.
inline std::optional<FrontEndModel> find_dut(std::span<const ChainStage> stages) {
    for (const auto& st : stages)
        if (const auto* d = std::get_if<stage::Dut>(&st)) return d->model;
    return std::nullopt;
}

}  // namespace ip3lab

#endif  // IP3LAB_RF_COMPONENTS_HPP
