#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "mashvco/lut.hpp"
#include "mashvco/metrics.hpp"
#include "mashvco/nlmodel.hpp"
#include "mashvco/sinefit.hpp"
#include "mashvco/spectrum.hpp"

using namespace mashvco;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

SampleStream make_stream(std::size_t n, double rate,
                         const std::string& label) {
    SampleStream s;
    s.samples.resize(n);
    s.rate = rate;
    s.label = label;
    return s;
}

double rms(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc / static_cast<double>(v.size()));
}

// Truth model used by the fit/eval/correct tests: mild static bend plus a
// difference term, second-order outer wrap, on codes 100 +- 50.
struct TruthNl {
    double a2 = 0.02, a3 = -0.015, b1 = 0.03, c2 = 0.2;

    double inner(double x, double x_prev) const {
        return a2 * x * x + a3 * x * x * x + b1 * (x - x_prev);
    }
    double nl(double x, double x_prev) const {
        const double i = inner(x, x_prev);
        return i + c2 * i * i;
    }
};

} // namespace

TEST_CASE("sine_fit recovers a clean tone exactly") {
    const double rate = 1.0e8, f = 1.234567e6, amp = 0.7, ph = 0.9,
                 off = 0.2;
    auto s = make_stream(4096, rate, "tone");
    for (std::size_t k = 0; k < s.size(); ++k)
        s.samples[k] = off + amp * std::sin(kTau * f * k / rate + ph);

    SUBCASE("frequency refinement from a 0.5%-off guess") {
        const auto fit = sine_fit(s, f * 1.005, true);
        CHECK(fit.freq == doctest::Approx(f).epsilon(1e-10));
        CHECK(fit.amp == doctest::Approx(amp).epsilon(1e-10));
        CHECK(fit.phase_rad == doctest::Approx(ph).epsilon(1e-8));
        CHECK(fit.offset == doctest::Approx(off).epsilon(1e-10));
        CHECK(fit.rms_residual < 1e-9);
        CHECK(fit.iterations >= 1);
    }
    SUBCASE("trusted frequency solves the linear subproblem") {
        const auto fit = sine_fit(s, f, false);
        CHECK(fit.freq == f);
        CHECK(fit.amp == doctest::Approx(amp).epsilon(1e-12));
        CHECK(fit.offset == doctest::Approx(off).epsilon(1e-12));
        CHECK(fit.rms_residual < 1e-12);
    }
    SUBCASE("fit amplitude is reported nonnegative") {
        for (auto& v : s.samples) v = -v;
        const auto fit = sine_fit(s, f, true);
        CHECK(fit.amp >= 0.0);
        CHECK(fit.amp == doctest::Approx(amp).epsilon(1e-9));
    }
}

TEST_CASE("decompose separates fundamental from folded harmonics") {
    const double rate = 1.0e8, f = 7.0e6;
    const double a1 = 1.0, a2 = 0.02, a3 = 0.004;
    auto s = make_stream(8192, rate, "cap");
    for (std::size_t k = 0; k < s.size(); ++k) {
        const double t = k / rate;
        s.samples[k] = 0.1 + a1 * std::sin(kTau * f * t + 0.3) +
                       a2 * std::sin(kTau * 2.0 * f * t + 1.1) +
                       a3 * std::sin(kTau * 3.0 * f * t + 2.0);
    }
    // The harmonics act as correlated noise while the fundamental is being
    // fitted, so recovery is ppm-grade rather than machine-grade.
    const auto dec = decompose(s, f * 1.001, 5);
    CHECK(dec.fundamental.amp == doctest::Approx(a1).epsilon(1e-4));
    CHECK(dec.fundamental.freq == doctest::Approx(f).epsilon(1e-8));

    // The three parts reassemble the record.
    for (std::size_t k = 0; k < s.size(); k += 97) {
        const double sum = dec.signal.samples[k] + dec.distortion.samples[k] +
                           dec.residual.samples[k];
        CHECK(sum == doctest::Approx(s.samples[k]).epsilon(1e-9));
    }
    CHECK(rms(dec.distortion.samples) ==
          doctest::Approx(std::sqrt((a2 * a2 + a3 * a3) / 2.0)).epsilon(1e-4));
    CHECK(rms(dec.residual.samples) < 1e-4);

    SUBCASE("a harmonic folding onto the fundamental is refused") {
        // At f = rate/4 the third harmonic aliases straight back onto f.
        auto bad = make_stream(4096, rate, "cap");
        for (std::size_t k = 0; k < bad.size(); ++k)
            bad.samples[k] = std::sin(kTau * 0.25 * k);
        CHECK_THROWS(decompose(bad, rate / 4.0, 3));
    }
}

TEST_CASE("nonlinearity fit reproduces a model-form distortion") {
    const double rate = 1.0e8, f = 1.3e6;
    const std::size_t n = 16384;
    TruthNl truth;
    truth.c2 = 0.05;

    auto d_cl = make_stream(n, rate, "clean");
    auto dist = make_stream(n, rate, "dist");
    // Codes 100 +- 50; the truth nonlinearity works on (d-100)/50 and its
    // output is scaled back by 50, matching the fit's own normalization.
    // Some noise gives the alternating fit a floor to stall on; on a
    // noiseless record it keeps inching forward until it times out.
    std::mt19937 gen(7);
    std::normal_distribution<double> jitter(0.0, 1e-3);
    double x_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = std::sin(kTau * f * k / rate + 0.2);
        d_cl.samples[k] = 100.0 + 50.0 * x;
        dist.samples[k] = 50.0 * truth.nl(x, k == 0 ? x : x_prev) + jitter(gen);
        x_prev = x;
    }

    const auto m = fit_nl(d_cl, dist, {5, 5, 2});
    CHECK(m.iterations >= 1);
    CHECK(m.fit_rms < 1e-4); // normalized: stalls at the injected noise

    const auto est = eval_nl(m, d_cl);
    REQUIRE(est.size() == n);
    double err = 0.0;
    for (std::size_t k = 1; k < n; ++k) { // first sample: diff term differs
        const double e = est.samples[k] - dist.samples[k];
        err += e * e;
    }
    err = std::sqrt(err / static_cast<double>(n - 1));
    CHECK(err / rms(dist.samples) < 1e-2);

    SUBCASE("no code coverage means no fit") {
        auto flat = d_cl;
        for (auto& v : flat.samples) v = 100.0;
        CHECK_THROWS(fit_nl(flat, dist, {5, 5, 2}));
    }
    SUBCASE("json round-trip is bit-exact") {
        const auto text = nlmodel_to_json(m);
        const auto back = nlmodel_from_json(text);
        REQUIRE(back.a.size() == m.a.size());
        REQUIRE(back.b.size() == m.b.size());
        REQUIRE(back.c.size() == m.c.size());
        for (std::size_t i = 0; i < m.a.size(); ++i) CHECK(back.a[i] == m.a[i]);
        for (std::size_t i = 0; i < m.b.size(); ++i) CHECK(back.b[i] == m.b[i]);
        for (std::size_t i = 0; i < m.c.size(); ++i) CHECK(back.c[i] == m.c[i]);
        CHECK(back.norm_offset == m.norm_offset);
        CHECK(back.norm_scale == m.norm_scale);
        CHECK(back.orders.ni == m.orders.ni);
        CHECK(back.orders.nj == m.orders.nj);
        CHECK(back.orders.nk == m.orders.nk);

        const auto path =
            (std::filesystem::temp_directory_path() / "mashvco_nl.json")
                .string();
        write_nlmodel_json(path, m);
        const auto from_file = read_nlmodel_json(path);
        for (std::size_t i = 0; i < m.a.size(); ++i)
            CHECK(from_file.a[i] == m.a[i]);
        std::filesystem::remove(path);
    }
}

TEST_CASE("lookup tables tabulate the inner polynomials") {
    NlModel m;
    m.orders = {3, 2, 1};
    m.a = {0.01, 0.0, 0.05, -0.04}; // stays well inside Q1.13
    m.b = {0.02, -0.01};
    m.c = {1.0};
    m.norm_offset = 100.0;
    m.norm_scale = 50.0;

    const auto lut = build_lut(m);
    CHECK(lut.norm_offset == m.norm_offset);
    CHECK(lut.norm_scale == m.norm_scale);
    REQUIRE(lut.c.size() == 1);
    CHECK(lut.c[0] == 1.0);

    for (std::size_t idx : {std::size_t{0}, std::size_t{17}, std::size_t{256},
                            std::size_t{511}}) {
        const double x = CorrectionLUT::node(idx);
        const double va = m.a[0] + m.a[2] * x * x + m.a[3] * x * x * x;
        const double vb = m.b[0] * x + m.b[1] * x * x;
        CHECK(std::fabs(lut.lut_a[idx] - va * kFixedOne) <= 0.5);
        CHECK(std::fabs(lut.lut_b[idx] - vb * kFixedOne) <= 0.5);
    }
    CHECK(CorrectionLUT::node(0) == -1.0);
    CHECK(CorrectionLUT::node(256) == 0.0);
    CHECK(CorrectionLUT::node(511) == doctest::Approx(511.0 / 256.0 - 1.0));

    SUBCASE("a model overflowing Q1.13 is rejected") {
        NlModel hot = m;
        hot.a[0] = 1.5;
        CHECK_THROWS(build_lut(hot));
    }
    SUBCASE("json round-trip is exact") {
        const auto back = lut_from_json(lut_to_json(lut));
        for (std::size_t i = 0; i < kLutSize; ++i) {
            CHECK(back.lut_a[i] == lut.lut_a[i]);
            CHECK(back.lut_b[i] == lut.lut_b[i]);
        }
        CHECK(back.c[0] == lut.c[0]);
        CHECK(back.norm_scale == lut.norm_scale);
    }
    SUBCASE("hex export is 512 words of two's complement") {
        const auto dir = std::filesystem::temp_directory_path();
        const auto pa = (dir / "mashvco_lut_a.hex").string();
        const auto pb = (dir / "mashvco_lut_b.hex").string();
        write_lut_hex(lut, pa, pb);
        for (const auto& [path, arr] :
             {std::pair{pa, &lut.lut_a}, std::pair{pb, &lut.lut_b}}) {
            std::ifstream in(path);
            REQUIRE(in.good());
            std::string line;
            std::size_t count = 0;
            while (std::getline(in, line)) {
                REQUIRE(line.size() == 4);
                const int word = std::stoi(line, nullptr, 16);
                CHECK(word <= 0x3FFF);
                const int val = word >= 0x2000 ? word - 0x4000 : word;
                CHECK(val == (*arr)[count]);
                ++count;
            }
            CHECK(count == kLutSize);
        }
        std::filesystem::remove(pa);
        std::filesystem::remove(pb);
    }
}

TEST_CASE("correction pipeline: fixed point shadows the float path") {
    const double rate = 1.0e8;
    const std::size_t n = 65536;
    // Coherent at the decimated record: bin 21 of 2048 at rate/16.
    const double f = 21.0 * (rate / 16.0) / 2048.0;
    const TruthNl truth;

    auto clean = make_stream(n, rate, "clean");
    auto captured = make_stream(n, rate, "cap");
    std::mt19937 gen(11);
    std::normal_distribution<double> jitter(0.0, 1e-4);
    double x_prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double x = std::sin(kTau * f * k / rate + 0.4);
        clean.samples[k] = 100.0 + 50.0 * x;
        captured.samples[k] = clean.samples[k] +
                              50.0 * truth.nl(x, k == 0 ? x : x_prev) +
                              jitter(gen);
        x_prev = x;
    }

    // Fit on the decomposition of the capture itself: the realistic flow.
    const auto dec0 = decompose(captured, f, 5);
    SampleStream d_cl = dec0.signal;
    const auto model = fit_nl(d_cl, dec0.distortion, {5, 5, 2});
    const auto lut = build_lut(model);
    const auto spec = make_decimation_spec(4, 4);

    const auto ffl = correct_float(captured, model, spec);
    const auto ffx = correct(captured, lut, spec);
    REQUIRE(ffl.corrected.size() > 1024);
    REQUIRE(ffl.corrected.size() == ffx.corrected.size());
    CHECK(ffl.corrected.rate == doctest::Approx(rate / 16.0));
    CHECK(ffl.corrected_mid.rate == doctest::Approx(rate / 4.0));

    // Quantization to 14 bits plus LUT interpolation: small against the
    // +-1 normalized signal, nowhere near the distortion scale.
    double diff = 0.0;
    for (std::size_t k = 0; k < ffl.corrected.size(); ++k) {
        const double e = ffl.corrected.samples[k] - ffx.corrected.samples[k];
        diff += e * e;
    }
    diff = std::sqrt(diff / static_cast<double>(ffl.corrected.size()));
    CHECK(diff < 0.05); // code units on a 50-count amplitude
    // The capture rides above the clean fit at the positive peaks, so a
    // thin sliver of codes lands past the table domain; the counter must
    // see it, and it must stay a sliver.
    CHECK(ffx.domain_clamps > 0);
    CHECK(ffx.domain_clamps < captured.size() / 20);
    CHECK(ffx.saturations == 0);

    SUBCASE("correction strips the distortion it was fitted to") {
        // Uncorrected reference: a zero model through the same decimation.
        NlModel zero;
        zero.orders = {1, 1, 1};
        zero.a = {0.0, 0.0};
        zero.b = {0.0};
        zero.c = {0.0};
        zero.norm_offset = 100.0;
        zero.norm_scale = 50.0;
        const auto raw_dec = correct_float(captured, zero, spec);
        const auto sp_raw =
            spectrum(raw_dec.corrected, 2048, 1, Window::rectangular, 64.0);
        const auto sp_cor =
            spectrum(ffl.corrected, 2048, 1, Window::rectangular, 64.0);
        const auto m_raw = metrics(sp_raw, f, 1);
        const auto m_cor = metrics(sp_cor, f, 1);
        CHECK(m_cor.sndr_db - m_raw.sndr_db > 10.0);
    }
    SUBCASE("full-rate placement also works") {
        const auto alt = correct_float(captured, model, spec,
                                       CorrectPlacement::before_decimation);
        CHECK(alt.corrected.size() == ffl.corrected.size());
    }
}
