#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mashvco/theory.hpp"

using namespace mashvco;

namespace {

// Independent oracle: Simpson integration of the first-order-shaped
// uniform-quantizer PSD over the signal band. The quantizer adds 1/12 of
// white power spread over [0, fs/2]; the shaping is |1 - z^-1|^2.
double single_stage_sqnr_by_integration(const TheoryParams& p) {
    const double fs = p.fs;
    const double f_band = fs / (2.0 * p.osr);
    const auto psd = [&](double f) {
        const double s = std::sin(std::numbers::pi * f / fs);
        return (1.0 / 12.0) * (2.0 / fs) * 4.0 * s * s;
    };
    const int n = 4096; // even
    const double h = f_band / n;
    double acc = psd(0.0) + psd(f_band);
    for (int i = 1; i < n; ++i)
        acc += psd(i * h) * ((i % 2) ? 4.0 : 2.0);
    const double noise = acc * h / 3.0;
    const double amp =
        p.n_phi1 * p.f_range1 * p.amplitude_fraction / fs; // output codes
    return 10.0 * std::log10(amp * amp / 2.0 / noise);
}

} // namespace

TEST_CASE("cascade quantization limit at the stock operating point") {
    TheoryParams p; // defaults are the stock operating point
    CHECK(sqnr_mash_db(p) == doctest::Approx(75.0238).epsilon(1e-5));
    CHECK(sqnr_mash_db(p) == doctest::Approx(75.0).scale(1.0).epsilon(0.1 / 75.0));

    SUBCASE("each OSR doubling buys exactly 15.05 dB") {
        const double step = 50.0 * std::log10(2.0);
        for (unsigned osr : {2u, 4u, 8u, 16u, 32u, 64u}) {
            TheoryParams lo = p, hi = p;
            lo.osr = osr;
            hi.osr = 2 * osr;
            CHECK(sqnr_mash_db(hi) - sqnr_mash_db(lo) ==
                  doctest::Approx(step).epsilon(1e-12));
        }
    }
    SUBCASE("partial drive subtracts its dB directly") {
        TheoryParams half = p;
        half.amplitude_fraction = 0.5;
        CHECK(sqnr_mash_db(p) - sqnr_mash_db(half) ==
              doctest::Approx(20.0 * std::log10(2.0)).epsilon(1e-12));
        TheoryParams qtr = p;
        qtr.amplitude_fraction = 0.25;
        CHECK(sqnr_single_db(p) - sqnr_single_db(qtr) ==
              doctest::Approx(40.0 * std::log10(2.0)).epsilon(1e-12));
    }
    SUBCASE("bad parameters are rejected") {
        TheoryParams bad = p;
        bad.fs = 0.0;
        CHECK_THROWS_AS(sqnr_mash_db(bad), std::invalid_argument);
        bad = p;
        bad.amplitude_fraction = 0.0;
        CHECK_THROWS_AS(sqnr_single_db(bad), std::invalid_argument);
        bad = p;
        bad.f_range2 = -1.0;
        CHECK_THROWS_AS(sqnr_mash_db(bad), std::invalid_argument);
    }
}

TEST_CASE("single-stage limit: slope and closed forms") {
    TheoryParams p;

    SUBCASE("9.03 dB per OSR doubling") {
        const double step = 30.0 * std::log10(2.0);
        for (unsigned osr : {2u, 8u, 32u}) {
            TheoryParams lo = p, hi = p;
            lo.osr = osr;
            hi.osr = 2 * osr;
            CHECK(sqnr_single_db(hi) - sqnr_single_db(lo) ==
                  doctest::Approx(step).epsilon(1e-12));
        }
    }
    SUBCASE("exact form equals independent numerical integration") {
        for (unsigned osr : {4u, 8u, 16u, 32u, 64u}) {
            TheoryParams q = p;
            q.osr = osr;
            CHECK(sqnr_single_exact_db(q) ==
                  doctest::Approx(single_stage_sqnr_by_integration(q))
                      .epsilon(1e-9));
        }
    }
    SUBCASE("small-band approximation stays within 0.2 dB down to OSR 4") {
        double prev_err = 1e9;
        for (unsigned osr : {4u, 8u, 16u, 32u, 64u}) {
            TheoryParams q = p;
            q.osr = osr;
            const double err = std::fabs(sqnr_single_db(q) -
                                         single_stage_sqnr_by_integration(q));
            CHECK(err < 0.2);
            CHECK(err < prev_err); // the gap closes as the band shrinks
            prev_err = err;
        }
        // At OSR 4 the cubic shortcut is measurably optimistic about the
        // noise (so pessimistic about SQNR), just not by much.
        TheoryParams q = p;
        q.osr = 4;
        CHECK(std::fabs(sqnr_single_db(q) -
                        single_stage_sqnr_by_integration(q)) > 0.05);
        CHECK(sqnr_single_db(q) < sqnr_single_exact_db(q));
    }
}

TEST_CASE("sqnr_curve rows agree with the scalar functions") {
    TheoryParams p;
    const double osrs[] = {4.0, 16.0, 24.0, 64.0}; // 24: non-power-of-two
    const auto rows = sqnr_curve(p, osrs);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].osr == osrs[i]);
        if (osrs[i] == 4.0 || osrs[i] == 16.0 || osrs[i] == 64.0) {
            TheoryParams q = p;
            q.osr = static_cast<unsigned>(osrs[i]);
            CHECK(rows[i].single_db == doctest::Approx(sqnr_single_db(q)));
            CHECK(rows[i].mash_db == doctest::Approx(sqnr_mash_db(q)));
        }
    }
    // The in-between point interpolates smoothly on the dB/log10 line.
    CHECK(rows[2].mash_db > rows[1].mash_db);
    CHECK(rows[2].mash_db < rows[3].mash_db);

    SUBCASE("osr below one is rejected") {
        const double bad[] = {0.5};
        CHECK_THROWS_AS(sqnr_curve(p, bad), std::invalid_argument);
    }
    SUBCASE("csv export carries all rows") {
        const auto path =
            (std::filesystem::temp_directory_path() / "mashvco_sqnr.csv")
                .string();
        write_sqnr_curve_csv(path, rows);
        std::ifstream in(path);
        REQUIRE(in.good());
        std::string line;
        std::getline(in, line);
        CHECK(line == "osr,sqnr_single_db,sqnr_mash_db");
        std::size_t count = 0;
        while (std::getline(in, line)) {
            std::istringstream ss(line);
            double osr, s, m;
            char c1, c2;
            ss >> osr >> c1 >> s >> c2 >> m;
            REQUIRE(ss);
            CHECK(osr == rows[count].osr);
            CHECK(s == doctest::Approx(rows[count].single_db).epsilon(1e-9));
            CHECK(m == doctest::Approx(rows[count].mash_db).epsilon(1e-9));
            ++count;
        }
        CHECK(count == rows.size());
        std::filesystem::remove(path);
    }
}

TEST_CASE("pfm concentration sits at the full edge rate") {
    CHECK(pfm_sideband_center(32, 1.0e9) == doctest::Approx(6.4e10));
    CHECK(pfm_sideband_center(1, 2.5e8) == doctest::Approx(5.0e8));
    CHECK_THROWS_AS(pfm_sideband_center(0, 1e9), std::invalid_argument);
    CHECK_THROWS_AS(pfm_sideband_center(4, -1.0), std::invalid_argument);
}
