#include <doctest.h>

#include <cmath>
#include <random>

#include "ip3lab/rf_components.hpp"
#include "ip3lab/spectrum.hpp"

using namespace ip3lab;

namespace {

constexpr double kFs = 10e6;
constexpr Eigen::Index kN = 8192;

Eigen::Index argmax(const Spectrum& s) {
    Eigen::Index i = 0;
    s.bin_powers_dbm.maxCoeff(&i);
    return i;
}

double sum_linear_watts(const Spectrum& s) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.fft_size; ++i) acc += s.linear_power_watts(i);
    return acc;
}

}  // namespace

TEST_CASE("bin layout spans (-fs/2, fs/2] in increasing order") {
    const auto spec = estimate_spectrum(gen_tone<double>({0, 1, 0}, kFs, kN), kN, Window::rectangular, 1);
    REQUIRE(spec.bin_powers_dbm.size() == kN);
    REQUIRE(spec.bin_freqs_hz.size() == kN);
    CHECK(spec.bin_freqs_hz[0] > -kFs / 2);
    CHECK(spec.bin_freqs_hz[kN - 1] == kFs / 2);
    for (Eigen::Index i = 1; i < kN; ++i) CHECK(spec.bin_freqs_hz[i] > spec.bin_freqs_hz[i - 1]);
}

TEST_CASE("1.3 MHz tone peaks in the bin nearest +1.3 MHz") {
    // 1.3e6 / (10e6 / 8192) = 1064.96 -> bin 1065 -> 1065 * 1220.703125 Hz
    const auto spec =
        estimate_spectrum(gen_tone<double>({1.3e6, 1, 0}, kFs, kN), kN, Window::flattop, 1);
    CHECK(spec.bin_freqs_hz[argmax(spec)] == 1300048.828125);
}

TEST_CASE("bin-centered unit tone reads 26.99 dBm in every window") {
    const double f = 100 * kFs / kN;
    for (auto w : {Window::rectangular, Window::hann, Window::flattop}) {
        const auto spec = estimate_spectrum(gen_tone<double>({f, 1, 0}, kFs, 2 * kN), kN, w, 2);
        CHECK(std::abs(spec.bin_powers_dbm.maxCoeff() - 26.989700043360187) < 1e-9);
        CHECK(spec.bin_freqs_hz[argmax(spec)] == f);
    }
}

TEST_CASE("flat-top scalloping stays within 0.01 dB") {
    for (double frac : {0.0, 0.1, 0.25, 0.37, 0.5}) {
        const double f = (300 + frac) * kFs / kN;
        const auto spec = estimate_spectrum(gen_tone<double>({f, 1, 0}, kFs, kN), kN, Window::flattop, 1);
        CHECK(std::abs(spec.bin_powers_dbm.maxCoeff() - 26.989700043360187) < 0.01);
    }
}

TEST_CASE("ENBW of the standard windows") {
    const ComplexSignal x = gen_tone<double>({0, 1, 0}, kFs, kN);
    CHECK(std::abs(estimate_spectrum(x, kN, Window::rectangular, 1).enbw_bins - 1.0) < 1e-12);
    CHECK(std::abs(estimate_spectrum(x, kN, Window::hann, 1).enbw_bins - 1.5) < 1e-9);
    CHECK(std::abs(estimate_spectrum(x, kN, Window::flattop, 1).enbw_bins - 4.2186) < 1e-3);
}

TEST_CASE("zero signal reads the floor everywhere") {
    const ComplexSignal zero{SampleVector<double>::Zero(kN), kFs};
    const auto spec = estimate_spectrum(zero, kN, Window::flattop, 1);
    CHECK(spec.bin_powers_dbm.maxCoeff() == kPowerFloorDbm);
    CHECK(spec.bin_powers_dbm.minCoeff() == kPowerFloorDbm);
}

TEST_CASE("bins below the dynamic range are clamped") {
    const auto spec =
        estimate_spectrum(gen_tone<double>({1.3e6, 1, 0}, kFs, kN), kN, Window::flattop, 1);
    CHECK(spec.bin_powers_dbm.minCoeff() >= spec.bin_powers_dbm.maxCoeff() - kSpectrumDynamicRangeDb);
}

TEST_CASE("insufficient samples names the required length") {
    const auto x = gen_tone<double>({0, 1, 0}, kFs, 1000);
    try {
        estimate_spectrum(x, 512, Window::hann, 4);
        FAIL("expected InsufficientSamples");
    } catch (const InsufficientSamples& e) {
        CHECK(e.required() == 2048);
        CHECK(std::string(e.what()).find("2048") != std::string::npos);
    }
    CHECK_THROWS_AS(estimate_spectrum(x, 500, Window::hann, 1), InvalidArgument);
}

TEST_CASE("property: Parseval with the rectangular window") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int trial = 0; trial < 5; ++trial) {
        ComplexSignal x{SampleVector<double>(kN), kFs};
        for (auto& v : x.samples) v = {g(rng), g(rng)};
        x.samples += gen_tone<double>({(trial - 2) * 1.1e6, 0.8, 0.1}, kFs, kN).samples;
        const auto spec = estimate_spectrum(x, kN, Window::rectangular, 1);
        const double t = time_power_watts(x);
        CHECK(std::abs(sum_linear_watts(spec) - t) / t < 1e-9);
    }
}

TEST_CASE("property: tones land within one bin of their frequency") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.45, 0.45);
    for (int trial = 0; trial < 40; ++trial) {
        const double f = u(rng) * kFs;
        for (auto w : {Window::rectangular, Window::flattop}) {
            const auto spec = estimate_spectrum(gen_tone<double>({f, 1, 0}, kFs, kN), kN, w, 1);
            CHECK(std::abs(spec.bin_freqs_hz[argmax(spec)] - f) <= spec.bin_width_hz());
        }
    }
}

TEST_CASE("property: separated tones read the same as alone") {
    const double df = kFs / kN;
    const auto a = gen_tone<double>({-700 * df, 1.0, 0.3}, kFs, kN);
    const auto b = gen_tone<double>({900 * df, 0.01, 1.1}, kFs, kN);
    const std::vector<ComplexSignal> both{a, b};
    const auto s_a = estimate_spectrum(a, kN, Window::rectangular, 1);
    const auto s_b = estimate_spectrum(b, kN, Window::rectangular, 1);
    const auto s_ab = estimate_spectrum(sum_signals<double>(both), kN, Window::rectangular, 1);
    CHECK(std::abs(peak_power_at(s_ab, -700 * df, 0).power_dbm - peak_power_at(s_a, -700 * df, 0).power_dbm) < 0.01);
    CHECK(std::abs(peak_power_at(s_ab, 900 * df, 0).power_dbm - peak_power_at(s_b, 900 * df, 0).power_dbm) < 0.01);
}

TEST_CASE("two unit tones at +-fs/8 give two equal peaks") {
    const std::vector<ComplexSignal> v{gen_tone<double>({kFs / 8, 1, 0}, kFs, kN),
                                       gen_tone<double>({-kFs / 8, 1, 0}, kFs, kN)};
    const auto spec = estimate_spectrum(sum_signals<double>(v), kN, Window::flattop, 1);
    const auto hi = peak_power_at(spec, kFs / 8, 0);
    const auto lo = peak_power_at(spec, -kFs / 8, 0);
    CHECK(std::abs(hi.power_dbm - 26.989700043360187) < 1e-6);
    CHECK(std::abs(lo.power_dbm - hi.power_dbm) < 1e-6);
}

TEST_CASE("peak_power_at") {
    const double df = kFs / kN;
    const auto tone = gen_tone<double>({1.3e6, 0.05, 0}, kFs, 4 * kN);
    const double df_tone = time_power_dbm(tone);

    SUBCASE("tone power within +-2 bins matches time-domain power") {
        const auto spec = estimate_spectrum(tone, kN, Window::flattop, 4);
        const auto p = peak_power_at(spec, 1.3e6, 2 * df);
        CHECK(std::abs(p.power_dbm - df_tone) < 0.01);
        CHECK(std::abs(p.freq_hz - 1.3e6) <= df);
    }
    SUBCASE("empty region reads the noise floor") {
        const double density = -150.0;
        const auto noisy = add_noise(tone, density, 99);
        const auto spec = estimate_spectrum(noisy, kN, Window::flattop, 4);
        const double expected = noise_bin_power_dbm(spec, density);
        const double peak = peak_power_at(spec, -3e6, 2 * df).power_dbm;
        CHECK(peak > expected - 3.0);
        CHECK(peak < expected + 6.0);
        CHECK(std::abs(mean_bin_power_dbm(spec, -3e6, 64 * df) - expected) < 1.0);
    }
    SUBCASE("zero halfwidth on a bin center returns that bin") {
        const auto spec = estimate_spectrum(tone, kN, Window::hann, 1);
        const Eigen::Index i = spec.nearest_bin(-2e6);
        const auto p = peak_power_at(spec, spec.bin_freqs_hz[i], 0.0);
        CHECK(p.bin == i);
        CHECK(p.power_dbm == spec.bin_powers_dbm[i]);
    }
    SUBCASE("window outside the span is an error") {
        const auto spec = estimate_spectrum(tone, kN, Window::hann, 1);
        CHECK_THROWS_AS(peak_power_at(spec, 6e6, 1e3), InvalidArgument);
        CHECK_THROWS_AS(peak_power_at(spec, -7e6, 1e6), InvalidArgument);
    }
}
