#include "mashvco/decimate.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mashvco/kernels.hpp"

namespace mashvco {
namespace {

constexpr double kPi = std::numbers::pi;

bool is_pow2(unsigned v) { return v != 0 && (v & (v - 1)) == 0; }

double kaiser_beta(double atten_db) {
    if (atten_db > 50.0) return 0.1102 * (atten_db - 8.7);
    if (atten_db >= 21.0)
        return 0.5842 * std::pow(atten_db - 21.0, 0.4) +
               0.07886 * (atten_db - 21.0);
    return 0.0;
}

double sinc(double x) {
    if (x == 0.0) return 1.0;
    return std::sin(kPi * x) / (kPi * x);
}

} // namespace

std::vector<double> kaiser_lowpass(double pass_frac, double stop_frac,
                                   double atten_db) {
    if (!(pass_frac > 0.0) || !(stop_frac > pass_frac) || !(stop_frac < 0.5))
        throw std::invalid_argument("kaiser_lowpass: need 0 < pass < stop < 0.5");
    if (!(atten_db > 0.0))
        throw std::invalid_argument("kaiser_lowpass: attenuation must be positive");

    const double beta = kaiser_beta(atten_db);
    const double dw = 2.0 * kPi * (stop_frac - pass_frac);
    // Kaiser length estimate plus a small safety margin; forced odd so the
    // group delay is an integer number of samples.
    std::size_t n =
        static_cast<std::size_t>(std::ceil((atten_db - 8.0) / (2.285 * dw))) + 4;
    if (n % 2 == 0) ++n;
    const std::size_t m = (n - 1) / 2;
    const double fc = 0.5 * (pass_frac + stop_frac);

    std::vector<double> h(n);
    const double i0b = std::cyl_bessel_i(0.0, beta);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) - static_cast<double>(m);
        const double r = t / static_cast<double>(m);
        const double w = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - r * r)) / i0b;
        h[k] = 2.0 * fc * sinc(2.0 * fc * t) * w;
    }
    double s = kern::active().sum(h.data(), n);
    for (double& v : h) v /= s; // exact DC gain 1
    return h;
}

std::vector<double> kaiser_halfband(double pass_frac, double atten_db) {
    if (!(pass_frac > 0.0) || !(pass_frac < 0.25))
        throw std::invalid_argument("kaiser_halfband: need 0 < pass < 0.25");
    return kaiser_lowpass(pass_frac, 0.5 - pass_frac, atten_db);
}

unsigned DecimationSpec::pre_factor() const {
    unsigned f = 1;
    for (const auto& s : pre) f *= s.factor;
    return f;
}

unsigned DecimationSpec::post_factor() const {
    unsigned f = 1;
    for (const auto& s : post) f *= s.factor;
    return f;
}

DecimationSpec make_decimation_spec(unsigned pre, unsigned post,
                                    double atten_db) {
    if (!is_pow2(pre) || !is_pow2(post))
        throw std::invalid_argument("decimation factors must be powers of two");
    DecimationSpec spec;
    for (unsigned f = pre; f > 1; f /= 2)
        spec.pre.push_back({2, kaiser_halfband(0.125, atten_db)});
    for (unsigned f = post; f > 1; f /= 2) {
        const bool last = (f == 2);
        spec.post.push_back({2, kaiser_halfband(last ? 0.2 : 0.125, atten_db)});
    }
    return spec;
}

SampleStream decimate(const SampleStream& in, unsigned factor,
                      std::span<const double> taps) {
    if (factor < 2 || !is_pow2(factor))
        throw std::invalid_argument("decimate: factor must be a power of two >= 2");
    if (taps.empty() || taps.size() % 2 == 0)
        throw std::invalid_argument("decimate: taps must have odd length");
    const std::size_t t = taps.size();
    const std::size_t len = in.samples.size();
    if (len < t)
        throw std::invalid_argument("decimate: stream shorter than filter");

    // Symmetric taps, so convolution equals correlation and each output is a
    // plain dot product against a window of the input.
    const std::size_t out_len = (len - t) / factor + 1;
    SampleStream out;
    out.rate = in.rate / static_cast<double>(factor);
    out.label = in.label.empty() ? "dec" : in.label + ".dec";
    out.samples.resize(out_len);
    const auto& ops = kern::active();
    for (std::size_t k = 0; k < out_len; ++k)
        out.samples[k] =
            ops.dot(taps.data(), in.samples.data() + k * factor, t);
    return out;
}

SampleStream apply_stages(const SampleStream& in,
                          std::span<const DecimationStage> stages) {
    SampleStream s = in;
    for (const auto& st : stages) s = decimate(s, st.factor, st.taps);
    return s;
}

} // namespace mashvco
