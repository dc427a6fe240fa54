#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mashvco/readout.hpp"

using namespace mashvco;

namespace {

EdgeWaveform make_wave(std::uint8_t init,
                       std::vector<std::pair<double, std::uint8_t>> tr) {
    EdgeWaveform w;
    w.initial_level = init;
    w.transitions = std::move(tr);
    return w;
}

} // namespace

TEST_CASE("gradient_pw_errors spreads the skew linearly") {
    const auto pw = gradient_pw_errors(5, 80e-12);
    REQUIRE(pw.tr.size() == 5);
    REQUIRE(pw.tf.size() == 5);
    for (unsigned i = 0; i < 5; ++i) {
        CHECK(pw.tr[i] == doctest::Approx(80e-12 * i / 4.0));
        CHECK(pw.tf[i] == 0.0);
    }
    SUBCASE("a single phase gets no skew") {
        const auto one = gradient_pw_errors(1, 80e-12);
        REQUIRE(one.tr.size() == 1);
        CHECK(one.tr[0] == 0.0);
        CHECK(one.tf[0] == 0.0);
    }
    SUBCASE("negative skew is rejected") {
        CHECK_THROWS_AS(gradient_pw_errors(4, -1e-12), std::invalid_argument);
    }
}

TEST_CASE("metastability delay follows the log law and its caps") {
    MetastabilityModel m;
    m.tau = 2e-12;
    m.t_max = 50e-12;
    m.enabled = true;
    const double ts = 1.0 / 3.5e9;

    SUBCASE("disabled model contributes nothing") {
        MetastabilityModel off = m;
        off.enabled = false;
        CHECK(metastability_delay(off, ts, 1e-15) == 0.0);
    }
    SUBCASE("log law in the resolving region") {
        for (double prox : {1e-12, 1e-13, 1e-14}) {
            const double want = 2e-12 * std::log(ts / prox);
            CHECK(metastability_delay(m, ts, prox) == doctest::Approx(want));
        }
    }
    SUBCASE("monotone: closer edges resolve later") {
        double last = -1.0;
        for (double prox : {1e-10, 1e-11, 1e-12, 1e-13}) {
            const double d = metastability_delay(m, ts, prox);
            CHECK(d >= last);
            last = d;
        }
    }
    SUBCASE("far edges cost nothing, coincident edges hit the cap") {
        CHECK(metastability_delay(m, ts, ts) == 0.0);
        CHECK(metastability_delay(m, ts, 2.0 * ts) == 0.0);
        CHECK(metastability_delay(m, ts, 0.0) == doctest::Approx(50e-12));
        CHECK(metastability_delay(m, ts, 1e-30) == doctest::Approx(50e-12));
    }
    SUBCASE("zero t_max means half a period") {
        m.t_max = 0.0;
        CHECK(metastability_delay(m, ts, 0.0) == doctest::Approx(ts / 2.0));
        CHECK(metastability_delay(m, ts, 1e-30) == doctest::Approx(ts / 2.0));
    }
}

TEST_CASE("qsd_sample differences the held levels") {
    const std::vector<std::uint8_t> init = {0, 1, 0, 1};
    auto st = make_qsd_state(init);
    MetastabilityModel off;
    const double ts = 1.0 / 3.5e9;

    const std::vector<std::uint8_t> first = {1, 1, 0, 0};
    auto out = qsd_sample(st, first, off, {}, ts);
    REQUIRE(out.d_bits.size() == 4);
    CHECK(out.d_bits == std::vector<std::uint8_t>{1, 0, 0, 1});
    for (double z : out.zoh_delay) CHECK(z == 0.0);

    // Second clock differences against the first capture, not the initials.
    const std::vector<std::uint8_t> second = {1, 0, 1, 0};
    out = qsd_sample(st, second, off, {}, ts);
    CHECK(out.d_bits == std::vector<std::uint8_t>{0, 1, 1, 0});
    CHECK(st.prev_sampled == first);
    CHECK(st.sampled_level == second);

    SUBCASE("metastability reports delay only on toggling phases") {
        MetastabilityModel m;
        m.tau = 2e-12;
        m.t_max = 40e-12;
        m.enabled = true;
        const std::vector<double> prox = {1e-13, 5e-12, 1e-13, 2e-12};
        const std::vector<std::uint8_t> third = {0, 0, 1, 1}; // toggles: 0,1,3
        out = qsd_sample(st, third, m, prox, ts);
        CHECK(out.zoh_delay[0] ==
              doctest::Approx(2e-12 * std::log(ts / 1e-13)));
        CHECK(out.zoh_delay[1] ==
              doctest::Approx(2e-12 * std::log(ts / 5e-12)));
        CHECK(out.zoh_delay[2] == 0.0); // held steady
        CHECK(out.zoh_delay[3] ==
              doctest::Approx(2e-12 * std::log(ts / 2e-12)));
    }
    SUBCASE("size mismatches throw") {
        const std::vector<std::uint8_t> five(5, 0);
        CHECK_THROWS_AS(qsd_sample(st, five, off, {}, ts),
                        std::invalid_argument);
        MetastabilityModel m;
        m.enabled = true;
        const std::vector<double> prox_short = {1e-12};
        CHECK_THROWS_AS(qsd_sample(st, second, m, prox_short, ts),
                        std::invalid_argument);
    }
}

TEST_CASE("xor_waveforms merges edge streams") {
    const auto a = make_wave(0, {{1.0, 1}, {3.0, 0}, {5.0, 1}});
    const auto b = make_wave(1, {{2.0, 0}, {4.0, 1}});

    SUBCASE("against all-zero it is the identity") {
        const auto z = make_wave(0, {});
        const auto r = xor_waveforms(a, z);
        CHECK(r.initial_level == a.initial_level);
        REQUIRE(r.transitions.size() == a.transitions.size());
        for (std::size_t i = 0; i < a.transitions.size(); ++i) {
            CHECK(r.transitions[i].first == a.transitions[i].first);
            CHECK(r.transitions[i].second == a.transitions[i].second);
        }
    }
    SUBCASE("against itself it vanishes") {
        const auto r = xor_waveforms(a, a);
        CHECK(r.initial_level == 0);
        CHECK(r.transitions.empty());
    }
    SUBCASE("general case matches pointwise sampling") {
        const auto r = xor_waveforms(a, b);
        for (double t = 0.25; t < 6.0; t += 0.5)
            CHECK(r.value_at(t) == (a.value_at(t) ^ b.value_at(t)));
        // Levels alternate strictly (coincident edges would cancel).
        std::uint8_t lvl = r.initial_level;
        for (const auto& [t, v] : r.transitions) {
            CHECK(v == 1 - lvl);
            lvl = v;
        }
    }
    SUBCASE("coincident opposite edges cancel out") {
        const auto c = make_wave(0, {{1.0, 1}, {3.0, 0}});
        const auto d = make_wave(0, {{1.0, 1}});
        // Both rise together at t=1, so the XOR stays low there and only
        // the lone fall at t=3 shows up.
        const auto r = xor_waveforms(c, d);
        CHECK(r.initial_level == 0);
        REQUIRE(r.transitions.size() == 1);
        CHECK(r.transitions[0].first == 3.0);
        CHECK(r.transitions[0].second == 1);
    }
}

TEST_CASE("apply_pulse_shifts moves edges and swallows runts") {
    const auto w = make_wave(0, {{1.0, 1}, {1.2, 0}, {3.0, 1}, {3.5, 0}});

    SUBCASE("equal delays are a pure time shift") {
        const auto r = apply_pulse_shifts(w, 0.1, 0.1);
        REQUIRE(r.transitions.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(r.transitions[i].first ==
                  doctest::Approx(w.transitions[i].first + 0.1));
            CHECK(r.transitions[i].second == w.transitions[i].second);
        }
        CHECK(waveform_area(r, 0.0, 5.0) ==
              doctest::Approx(waveform_area(w, 0.0, 5.0)));
    }
    SUBCASE("unequal delays stretch every high pulse the same way") {
        const auto r = apply_pulse_shifts(w, 0.05, 0.15);
        REQUIRE(r.transitions.size() == 4);
        CHECK(r.transitions[0].first == doctest::Approx(1.05));
        CHECK(r.transitions[1].first == doctest::Approx(1.35));
        CHECK(r.transitions[2].first == doctest::Approx(3.05));
        CHECK(r.transitions[3].first == doctest::Approx(3.65));
        CHECK(waveform_area(r, 0.0, 5.0) ==
              doctest::Approx(waveform_area(w, 0.0, 5.0) + 2 * 0.1));
    }
    SUBCASE("a rise pushed past its fall erases the pulse") {
        // First pulse is 0.2 wide: tr - tf = 0.3 squeezes it out of
        // existence while the 0.5-wide pulse survives, shrunk.
        const auto r = apply_pulse_shifts(w, 0.31, 0.01);
        REQUIRE(r.transitions.size() == 2);
        CHECK(r.transitions[0].first == doctest::Approx(3.31));
        CHECK(r.transitions[1].first == doctest::Approx(3.51));
        CHECK(waveform_area(r, 0.0, 5.0) == doctest::Approx(0.2));
    }
    SUBCASE("exactly zero width also collapses") {
        const auto r = apply_pulse_shifts(w, 0.2, 0.0);
        REQUIRE(r.transitions.size() == 2);
        CHECK(r.transitions[0].first == doctest::Approx(3.2));
    }
}

TEST_CASE("estimate_error emits the complementary pulse pair") {
    // Held level 0, actual toggled high at t=2: the error pulse runs from
    // the toggle onwards, its complement covers the lead-in.
    const auto w = make_wave(0, {{2.0, 1}});
    const auto zoh = make_wave(0, {});

    SUBCASE("no skew: exact complements") {
        PulseWidthErrors pw;
        pw.tr = {0.0, 0.0};
        pw.tf = {0.0, 0.0};
        const auto ep = estimate_error(w, zoh, pw, 1);
        CHECK(ep.e.value_at(1.0) == 0);
        CHECK(ep.e.value_at(3.0) == 1);
        CHECK(ep.e_bar.value_at(1.0) == 1);
        CHECK(ep.e_bar.value_at(3.0) == 0);
        CHECK(waveform_area(ep.e, 0.0, 5.0) == doctest::Approx(3.0));
        CHECK(waveform_area(ep.e_bar, 0.0, 5.0) == doctest::Approx(2.0));
    }
    SUBCASE("skew splits the pair: e rises late, e_bar falls late") {
        PulseWidthErrors pw;
        pw.tr = {0.0, 0.25};
        pw.tf = {0.0, 0.05};
        const auto ep = estimate_error(w, zoh, pw, 1);
        REQUIRE(ep.e.transitions.size() == 1);
        REQUIRE(ep.e_bar.transitions.size() == 1);
        CHECK(ep.e.transitions[0].first == doctest::Approx(2.25));
        CHECK(ep.e_bar.transitions[0].first == doctest::Approx(2.05));
        // The differential residue is exactly the tr/tf split.
        const double diff = waveform_area(ep.e, 0.0, 5.0) -
                            (5.0 - waveform_area(ep.e_bar, 0.0, 5.0));
        CHECK(diff == doctest::Approx(-(0.25 - 0.05)));
    }
    SUBCASE("phase index selects the skew entry") {
        PulseWidthErrors pw;
        pw.tr = {0.1, 0.25};
        pw.tf = {0.0, 0.0};
        const auto ep = estimate_error(w, zoh, pw, 0);
        CHECK(ep.e.transitions[0].first == doctest::Approx(2.1));
    }
}

TEST_CASE("sum_error_bits builds the counter staircase") {
    // Two overlapping pulses plus one idle-high bit.
    const auto b0 = make_wave(0, {{1.0, 1}, {4.0, 0}});
    const auto b1 = make_wave(0, {{2.0, 1}, {3.0, 0}});
    const auto b2 = make_wave(1, {});
    const std::vector<EdgeWaveform> bits = {b0, b1, b2};

    const auto stair = sum_error_bits(bits);
    CHECK(stair.initial_value == 1);
    REQUIRE(stair.steps.size() == 4);
    CHECK(stair.steps[0] == std::pair<double, int>{1.0, 2});
    CHECK(stair.steps[1] == std::pair<double, int>{2.0, 3});
    CHECK(stair.steps[2] == std::pair<double, int>{3.0, 2});
    CHECK(stair.steps[3] == std::pair<double, int>{4.0, 1});

    // Integral equals the summed per-bit areas.
    const double direct = step_integral(stair, 0.0, 5.0);
    double parts = 0.0;
    for (const auto& b : bits) parts += waveform_area(b, 0.0, 5.0);
    CHECK(direct == doctest::Approx(parts));
}

TEST_CASE("area helpers respect partial windows") {
    const auto w = make_wave(0, {{1.0, 1}, {3.0, 0}});
    CHECK(waveform_area(w, 0.0, 5.0) == doctest::Approx(2.0));
    CHECK(waveform_area(w, 2.0, 5.0) == doctest::Approx(1.0)); // cut the rise
    CHECK(waveform_area(w, 0.0, 2.5) == doctest::Approx(1.5)); // cut the fall
    CHECK(waveform_area(w, 1.25, 1.75) == doctest::Approx(0.5)); // inside
    CHECK(waveform_area(w, 3.5, 9.0) == doctest::Approx(0.0));

    StepWaveform s;
    s.initial_value = 2;
    s.steps = {{1.0, 5}, {2.0, -1}};
    CHECK(step_integral(s, 0.0, 3.0) == doctest::Approx(2.0 + 5.0 - 1.0));
    CHECK(step_integral(s, 0.5, 1.5) == doctest::Approx(1.0 + 2.5));
    CHECK(step_integral(s, 2.5, 4.0) == doctest::Approx(-1.5));
}
