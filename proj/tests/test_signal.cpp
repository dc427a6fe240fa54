#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "mashvco/decimate.hpp"
#include "mashvco/metrics.hpp"
#include "mashvco/rng.hpp"
#include "mashvco/spectrum.hpp"
#include "mashvco/stream.hpp"

using namespace mashvco;

namespace {

constexpr double kPi = 3.14159265358979323846;

std::filesystem::path tmp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("generate_tone_sum matches the sample formula") {
    const Tone t1{0.5, 1000.0, 0.3};
    const Tone t2{0.25, 3000.0, -1.1};
    const Tone tones[] = {t1, t2};
    const auto s = generate_tone_sum(tones, 0.125, 48000.0, 64, "x");
    REQUIRE(s.size() == 64);
    CHECK(s.rate == 48000.0);
    CHECK(s.label == "x");
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double expect =
            0.125 + 0.5 * std::sin(2.0 * kPi * 1000.0 * k / 48000.0 + 0.3) +
            0.25 * std::sin(2.0 * kPi * 3000.0 * k / 48000.0 - 1.1);
        CHECK(s.samples[k] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("fft_radix2 basics") {
    SUBCASE("impulse transforms flat") {
        std::vector<std::complex<double>> x(16, 0.0);
        x[0] = 1.0;
        fft_radix2(x);
        for (const auto& v : x) {
            CHECK(v.real() == doctest::Approx(1.0));
            CHECK(v.imag() == doctest::Approx(0.0));
        }
    }
    SUBCASE("single complex tone lands in one bin") {
        const std::size_t n = 64, k0 = 5;
        std::vector<std::complex<double>> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::exp(std::complex<double>(0.0, 2.0 * kPi * k0 * i / n));
        fft_radix2(x);
        for (std::size_t b = 0; b < n; ++b)
            CHECK(std::abs(x[b]) ==
                  doctest::Approx(b == k0 ? 64.0 : 0.0).epsilon(1e-9).scale(64.0));
    }
    SUBCASE("forward then inverse is identity") {
        rng::Stream r(rng::subseed(1, "fft"));
        std::vector<std::complex<double>> x(128), orig;
        for (auto& v : x) v = {r.uniform() - 0.5, r.uniform() - 0.5};
        orig = x;
        fft_radix2(x);
        fft_radix2(x, true);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(std::abs(x[i] - orig[i]) < 1e-12);
    }
    SUBCASE("non power of two throws") {
        std::vector<std::complex<double>> x(12);
        CHECK_THROWS_AS(fft_radix2(x), std::invalid_argument);
    }
}

TEST_CASE("coherent_bin_frequency snaps to an odd in-range bin") {
    const double rate = 3.5e9;
    const std::size_t n = 131072;
    const double f = coherent_bin_frequency(31.25e6, rate, n);
    const double bin = f * n / rate;
    CHECK(bin == doctest::Approx(std::round(bin)).epsilon(1e-12));
    CHECK(static_cast<long long>(std::llround(bin)) % 2 == 1);
    // Snapped bin = 1171 for this rate and size.
    CHECK(std::llround(bin) == 1171);
    CHECK_THROWS_AS(coherent_bin_frequency(1.8e9, rate, n), std::invalid_argument);
}

TEST_CASE("spectrum of a coherent full-scale tone reads 0 dBFS") {
    const std::size_t n = 4096;
    const double rate = 1.0e6;
    const double f = coherent_bin_frequency(37e3, rate, n);
    const Tone tone{0.7, f, 0.4};
    const auto s = generate_tone_sum({&tone, 1}, 0.0, rate, n);
    const std::size_t k0 = static_cast<std::size_t>(std::llround(f * n / rate));

    SUBCASE("rectangular: single bin, everything else at the floor") {
        const auto sp = spectrum(s, n, 1, Window::rectangular, 0.7);
        CHECK(sp.power_db[k0] == doctest::Approx(0.0).epsilon(1e-9).scale(1.0));
        for (std::size_t b = 1; b + 1 < sp.power_db.size(); ++b)
            if (b != k0) CHECK(sp.power_db[b] < -180.0);
    }
    SUBCASE("hann: center bin still 0 dBFS, neighbors -6 dB") {
        const auto sp = spectrum(s, n, 1, Window::hann, 0.7);
        CHECK(sp.power_db[k0] == doctest::Approx(0.0).epsilon(0.001).scale(1.0));
        CHECK(sp.power_db[k0 + 1] == doctest::Approx(-6.02).epsilon(0.01));
        CHECK(sp.power_db[k0 - 1] == doctest::Approx(-6.02).epsilon(0.01));
    }
    SUBCASE("half-amplitude tone sits at -6.02 dBFS") {
        const Tone half{0.35, f, 0.0};
        const auto s2 = generate_tone_sum({&half, 1}, 0.0, rate, n);
        const auto sp = spectrum(s2, n, 1, Window::rectangular, 0.7);
        CHECK(sp.power_db[k0] == doctest::Approx(-6.0206).epsilon(0.001));
    }
    SUBCASE("averaging needs enough samples") {
        CHECK_THROWS_AS(spectrum(s, n, 2), std::invalid_argument);
    }
}

TEST_CASE("metrics separates signal, harmonics, and noise") {
    const std::size_t n = 16384;
    const double rate = 1.0e6;
    const unsigned osr = 4; // band edge 125 kHz
    const double f = coherent_bin_frequency(21e3, rate, n);
    const double f2 = 2.0 * f, f3 = 3.0 * f; // both in band
    const double fs_amp = 1.0;

    // Carrier at -2 dBFS, HD2 at -60 dBc, HD3 at -70 dBc, white noise.
    const double a = fs_amp * std::pow(10.0, -2.0 / 20.0);
    const double a2 = a * 1e-3;
    const double a3 = a * std::pow(10.0, -70.0 / 20.0);
    const Tone tones[] = {{a, f, 0.1}, {a2, f2, 0.7}, {a3, f3, 1.2}};
    auto s = generate_tone_sum(tones, 0.0, rate, n);
    rng::Stream r(rng::subseed(9, "metrics.noise"));
    const double sigma = 1e-4;
    for (auto& v : s.samples) v += sigma * r.gaussian();

    const auto sp = spectrum(s, n, 1, Window::rectangular, fs_amp);
    const auto m = metrics(sp, f, osr);

    CHECK(m.signal_db == doctest::Approx(-2.0).epsilon(0.01));
    CHECK(m.signal_freq == doctest::Approx(f));
    CHECK(m.band_hz == doctest::Approx(rate / (2.0 * osr)));

    // THD = HD2 + HD3 power: 10*log10(1e-6 + 1e-7) = -59.59 dBc.
    CHECK(m.thd_db == doctest::Approx(-59.59).epsilon(0.005));
    // SFDR: worst spur is HD2, 60 dB below the carrier.
    CHECK(m.sfdr_db == doctest::Approx(60.0).epsilon(0.01));

    // In-band noise power: sigma^2 / osr relative to carrier a^2/2.
    const double snr_expect =
        10.0 * std::log10((a * a / 2.0) / (sigma * sigma / osr));
    CHECK(m.snr_db == doctest::Approx(snr_expect).epsilon(0.02));
    // SNDR folds the harmonics back in.
    const double nd = sigma * sigma / osr + a2 * a2 / 2.0 + a3 * a3 / 2.0;
    CHECK(m.sndr_db ==
          doctest::Approx(10.0 * std::log10((a * a / 2.0) / nd)).epsilon(0.02));
    CHECK(m.enob == doctest::Approx((m.sndr_db - 1.76) / 6.02).epsilon(1e-9));
}

TEST_CASE("harmonics folded across Nyquist are excluded from SNR") {
    const std::size_t n = 8192;
    const double rate = 1.0e6;
    // Carrier near 210 kHz: HD4 at 4f lands above Nyquist and folds back to
    // rate - 4f, inside the osr=2 band. Plant a tone exactly there.
    const double f = coherent_bin_frequency(210e3, rate, n);
    const double f4_folded = rate - 4.0 * f;
    REQUIRE(f4_folded < rate / 4.0);
    const Tone tones[] = {{0.5, f, 0.0}, {0.005, f4_folded, 0.3}};
    const auto s = generate_tone_sum(tones, 0.0, rate, n);
    const auto sp = spectrum(s, n, 1, Window::rectangular, 0.5);
    const auto m = metrics(sp, f, 2);
    // The folded tone counts as distortion, not noise.
    CHECK(m.snr_db > 90.0);
    CHECK(m.sndr_db == doctest::Approx(40.0).epsilon(0.001));
    CHECK(m.thd_db == doctest::Approx(-40.0).epsilon(0.001));
}

TEST_CASE("stream file round-trips") {
    SampleStream s;
    s.rate = 12345.5;
    s.label = "roundtrip";
    rng::Stream r(rng::subseed(3, "io"));
    for (int i = 0; i < 257; ++i) s.samples.push_back(r.gaussian());

    SUBCASE("csv") {
        const auto p = tmp_file("mashvco_test_stream.csv");
        write_csv(s, p.string());
        const auto back = read_csv(p.string());
        CHECK(back.rate == doctest::Approx(s.rate));
        CHECK(back.label == s.label);
        REQUIRE(back.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(back.samples[i] == doctest::Approx(s.samples[i]).epsilon(1e-14));
        std::filesystem::remove(p);
    }
    SUBCASE("f64 is bit-exact") {
        const auto p = tmp_file("mashvco_test_stream.f64");
        write_f64(s, p.string());
        const auto back = read_f64(p.string());
        CHECK(back.rate == s.rate);
        CHECK(back.label == s.label);
        REQUIRE(back.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i)
            CHECK(back.samples[i] == s.samples[i]);
        std::filesystem::remove(p);
        std::filesystem::remove(p.string() + ".json");
    }
    SUBCASE("missing file throws") {
        CHECK_THROWS(read_csv("/nonexistent/stream.csv"));
    }
}

TEST_CASE("kaiser halfband taps: symmetric, DC gain 1, structural zeros") {
    const auto taps = kaiser_halfband(0.125, 80.0);
    REQUIRE(taps.size() % 2 == 1);
    const std::size_t c = taps.size() / 2;
    double dc = 0.0;
    for (std::size_t i = 0; i < taps.size(); ++i) {
        dc += taps[i];
        CHECK(taps[i] == doctest::Approx(taps[taps.size() - 1 - i]));
        // Every second tap away from center is zero by construction.
        if (i != c && (i % 2) == (c % 2)) CHECK(std::abs(taps[i]) < 1e-15);
    }
    CHECK(dc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(taps[c] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("decimate keeps an in-band tone and is delay-compensated") {
    const double rate = 1.0e6;
    const std::size_t n = 8192;
    const double f = coherent_bin_frequency(31e3, rate, n); // well inside rate/8
    const Tone t{0.8, f, 0.55};
    const auto s = generate_tone_sum({&t, 1}, 0.0, rate, n);
    const auto taps = kaiser_halfband(0.125, 80.0);
    const auto out = decimate(s, 2, taps);

    CHECK(out.rate == doctest::Approx(rate / 2.0));
    // Only fully-overlapped samples survive.
    CHECK(out.size() == (n - taps.size()) / 2 + 1);

    // Delay compensation: output sample k is the filter centered on input
    // index center + 2k, so for an in-band tone it equals the analytic value
    // at that input time.
    const std::size_t center = taps.size() / 2;
    for (std::size_t k = 0; k < out.size(); k += 97) {
        const double t_in = static_cast<double>(center + 2 * k) / rate;
        const double expect = 0.8 * std::sin(2.0 * kPi * f * t_in + 0.55);
        CHECK(out.samples[k] == doctest::Approx(expect).epsilon(5e-4).scale(1.0));
    }
}

TEST_CASE("decimate crushes a stopband tone") {
    const double rate = 1.0e6;
    const std::size_t n = 16384;
    const double f = coherent_bin_frequency(440e3, rate, n); // above 3/8 rate
    const Tone t{1.0, f, 0.0};
    const auto s = generate_tone_sum({&t, 1}, 0.0, rate, n);
    const auto taps = kaiser_halfband(0.125, 80.0);
    const auto out = decimate(s, 2, taps);
    double peak = 0.0;
    for (double v : out.samples) peak = std::max(peak, std::abs(v));
    CHECK(peak < 1e-3); // > 60 dB down even at the edge of the design band
}

TEST_CASE("decimation spec factors multiply through stages") {
    const auto dec = make_decimation_spec(4, 4, 80.0);
    CHECK(dec.pre_factor() == 4);
    CHECK(dec.post_factor() == 4);
    const double rate = 2.0e6;
    SampleStream s;
    s.rate = rate;
    s.samples.assign(8192, 0.0);
    s.samples[4096] = 1.0; // impulse keeps it cheap
    const auto out = apply_stages(s, dec.pre);
    CHECK(out.rate == doctest::Approx(rate / 4.0));
    CHECK_THROWS_AS(
        decimate(SampleStream{{1.0, 2.0}, rate, ""}, 2, kaiser_halfband(0.125, 80.0)),
        std::invalid_argument);
}
