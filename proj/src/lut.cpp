#include "mashvco/lut.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace mashvco {
namespace {

// Round-half-to-even to an integer code, saturating to the 14-bit range.
// llrint under the default rounding mode gives ties-to-even.
std::int32_t quantize(double value, std::uint64_t* saturations) {
    const double scaled = value * static_cast<double>(kFixedOne);
    long long q = std::llrint(scaled);
    if (q > kFixedMax) {
        q = kFixedMax;
        if (saturations) ++*saturations;
    } else if (q < kFixedMin) {
        q = kFixedMin;
        if (saturations) ++*saturations;
    }
    return static_cast<std::int32_t>(q);
}

std::int32_t sat14(std::int64_t q, std::uint64_t* saturations) {
    if (q > kFixedMax) {
        if (saturations) ++*saturations;
        return kFixedMax;
    }
    if (q < kFixedMin) {
        if (saturations) ++*saturations;
        return kFixedMin;
    }
    return static_cast<std::int32_t>(q);
}

// lut[m] + frac/32 * (lut[m+1] - lut[m]) with the top entry held flat.
// Exact in double (codes and products stay far below 2^53), rounded
// half-to-even back to a 14-bit code. Cannot leave the entry range.
std::int32_t interp(const std::array<std::int16_t, kLutSize>& lut,
                    std::int32_t code) {
    const std::uint32_t u = static_cast<std::uint32_t>(code + kFixedOne);
    const std::uint32_t m = u >> 5;
    const std::uint32_t frac = u & 31u;
    const double lo = lut[m];
    const double hi = (m + 1 < kLutSize) ? lut[m + 1] : lut[m];
    return static_cast<std::int32_t>(
        std::llrint(lo + (hi - lo) * static_cast<double>(frac) / 32.0));
}

double poly_at(const std::vector<double>& coef, bool from_power_one,
               double x) {
    // Horner over the stored coefficients; b starts at exponent 1.
    double acc = 0.0;
    for (std::size_t i = coef.size(); i-- > 0;) acc = acc * x + coef[i];
    return from_power_one ? acc * x : acc;
}

struct FixedCorrector {
    const CorrectionLUT& lut;
    std::uint64_t clamps = 0, sats = 0;
    std::int32_t prev_code = 0;
    bool first = true;

    double step(double raw) {
        const double x = (raw - lut.norm_offset) / lut.norm_scale;
        std::uint64_t in_sat = 0;
        const std::int32_t qx = quantize(x, &in_sat);
        clamps += in_sat; // off-domain input: saturating is the clamp
        if (first) {
            prev_code = qx;
            first = false;
        }
        const std::int32_t ia = interp(lut.lut_a, qx);
        const std::int32_t ib = sat14(static_cast<std::int64_t>(interp(lut.lut_b, qx)) -
                                          interp(lut.lut_b, prev_code),
                                      &sats);
        prev_code = qx;
        const std::int32_t inner = sat14(static_cast<std::int64_t>(ia) + ib, &sats);

        const double iv = static_cast<double>(inner) / kFixedOne;
        double nl = 0.0, pw = 1.0;
        for (double ck : lut.c) {
            pw *= iv;
            nl += ck * pw;
        }
        const std::int32_t qnl = quantize(nl, &sats);
        const std::int32_t qcorr =
            sat14(static_cast<std::int64_t>(qx) - qnl, &sats);
        return static_cast<double>(qcorr) / kFixedOne * lut.norm_scale +
               lut.norm_offset;
    }
};

struct FloatCorrector {
    const NlModel& m;
    double prev_x = 0.0;
    bool first = true;

    double step(double raw) {
        const double x = m.normalize(raw);
        if (first) {
            prev_x = x;
            first = false;
        }
        double inner = poly_at(m.a, false, x) + poly_at(m.b, true, x) -
                       poly_at(m.b, true, prev_x);
        prev_x = x;
        double nl = 0.0, pw = 1.0;
        for (double ck : m.c) {
            pw *= inner;
            nl += ck * pw;
        }
        return m.denormalize(x - nl);
    }
};

std::string dtos(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double stod_strict(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error("lut json: bad number '" + s + "'");
    return v;
}

} // namespace

CorrectionLUT build_lut(const NlModel& m) {
    if (m.a.size() != m.orders.ni + 1 || m.b.size() != m.orders.nj ||
        m.c.size() != m.orders.nk)
        throw std::invalid_argument("build_lut: coefficient sizes disagree with orders");
    CorrectionLUT lut;
    lut.c = m.c;
    lut.orders = m.orders;
    lut.norm_offset = m.norm_offset;
    lut.norm_scale = m.norm_scale;
    for (std::size_t i = 0; i < kLutSize; ++i) {
        const double x = CorrectionLUT::node(i);
        std::uint64_t overflow = 0;
        const std::int32_t qa = quantize(poly_at(m.a, false, x), &overflow);
        const std::int32_t qb = quantize(poly_at(m.b, true, x), &overflow);
        if (overflow)
            throw std::runtime_error(
                "build_lut: polynomial value overflows 14-bit range at node " +
                std::to_string(i));
        lut.lut_a[i] = static_cast<std::int16_t>(qa);
        lut.lut_b[i] = static_cast<std::int16_t>(qb);
    }
    return lut;
}

CorrectionResult correct(const SampleStream& d, const CorrectionLUT& lut,
                         const DecimationSpec& dec,
                         CorrectPlacement placement) {
    std::uint64_t clamps = 0, sats = 0;
    auto apply = [&](const SampleStream& in) {
        SampleStream out;
        out.rate = in.rate;
        out.label = in.label.empty() ? "corr" : in.label + ".corr";
        out.samples.reserve(in.samples.size());
        FixedCorrector local{lut};
        for (double v : in.samples) out.samples.push_back(local.step(v));
        clamps += local.clamps;
        sats += local.sats;
        return out;
    };

    CorrectionResult res;
    if (placement == CorrectPlacement::after_pre_decimation) {
        const SampleStream pre = apply_stages(d, dec.pre);
        res.corrected_mid = apply(pre);
    } else {
        const SampleStream full = apply(d);
        res.corrected_mid = apply_stages(full, dec.pre);
    }
    res.corrected = apply_stages(res.corrected_mid, dec.post);
    res.domain_clamps = clamps;
    res.saturations = sats;
    return res;
}

CorrectionResult correct_float(const SampleStream& d, const NlModel& m,
                               const DecimationSpec& dec,
                               CorrectPlacement placement) {
    auto apply = [&m](const SampleStream& in) {
        SampleStream out;
        out.rate = in.rate;
        out.label = in.label.empty() ? "corr" : in.label + ".corr";
        out.samples.reserve(in.samples.size());
        FloatCorrector local{m};
        for (double v : in.samples) out.samples.push_back(local.step(v));
        return out;
    };

    CorrectionResult res;
    if (placement == CorrectPlacement::after_pre_decimation) {
        const SampleStream pre = apply_stages(d, dec.pre);
        res.corrected_mid = apply(pre);
    } else {
        const SampleStream full = apply(d);
        res.corrected_mid = apply_stages(full, dec.pre);
    }
    res.corrected = apply_stages(res.corrected_mid, dec.post);
    return res;
}

std::string lut_to_json(const CorrectionLUT& lut) {
    nlohmann::json j;
    j["schema"] = 1;
    j["kind"] = "correction_lut";
    j["bits"] = kFixedBits;
    j["entries"] = kLutSize;
    j["lut_a"] = lut.lut_a;
    j["lut_b"] = lut.lut_b;
    j["orders"] = {{"ni", lut.orders.ni}, {"nj", lut.orders.nj}, {"nk", lut.orders.nk}};
    std::vector<std::string> cs;
    for (double v : lut.c) cs.push_back(dtos(v));
    j["c"] = cs;
    j["norm_offset"] = dtos(lut.norm_offset);
    j["norm_scale"] = dtos(lut.norm_scale);
    return j.dump(2);
}

CorrectionLUT lut_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw std::runtime_error("lut json: unsupported schema");
    if (!j.contains("kind") || j["kind"].get<std::string>() != "correction_lut")
        throw std::runtime_error("lut json: wrong document kind");
    if (j.at("bits").get<int>() != kFixedBits ||
        j.at("entries").get<std::size_t>() != kLutSize)
        throw std::runtime_error("lut json: unexpected geometry");
    CorrectionLUT lut;
    const auto& ja = j.at("lut_a");
    const auto& jb = j.at("lut_b");
    if (ja.size() != kLutSize || jb.size() != kLutSize)
        throw std::runtime_error("lut json: entry count mismatch");
    for (std::size_t i = 0; i < kLutSize; ++i) {
        const int a = ja[i].get<int>(), b = jb[i].get<int>();
        if (a > kFixedMax || a < kFixedMin || b > kFixedMax || b < kFixedMin)
            throw std::runtime_error("lut json: entry outside 14-bit range");
        lut.lut_a[i] = static_cast<std::int16_t>(a);
        lut.lut_b[i] = static_cast<std::int16_t>(b);
    }
    lut.orders.ni = j.at("orders").at("ni").get<unsigned>();
    lut.orders.nj = j.at("orders").at("nj").get<unsigned>();
    lut.orders.nk = j.at("orders").at("nk").get<unsigned>();
    for (const auto& e : j.at("c"))
        lut.c.push_back(stod_strict(e.get<std::string>()));
    lut.norm_offset = stod_strict(j.at("norm_offset").get<std::string>());
    lut.norm_scale = stod_strict(j.at("norm_scale").get<std::string>());
    return lut;
}

void write_lut_json(const std::string& path, const CorrectionLUT& lut) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << lut_to_json(lut) << '\n';
}

CorrectionLUT read_lut_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return lut_from_json(ss.str());
}

void write_lut_hex(const CorrectionLUT& lut, const std::string& path_a,
                   const std::string& path_b) {
    auto dump = [](const std::string& path,
                   const std::array<std::int16_t, kLutSize>& entries) {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path);
        char buf[8];
        for (std::int16_t v : entries) {
            // 14-bit two's complement, one 4-digit hex word per line.
            const unsigned u = static_cast<unsigned>(v) & 0x3fffu;
            std::snprintf(buf, sizeof buf, "%04x", u);
            out << buf << '\n';
        }
    };
    dump(path_a, lut.lut_a);
    dump(path_b, lut.lut_b);
}

} // namespace mashvco
