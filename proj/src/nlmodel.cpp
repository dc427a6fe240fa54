#include "mashvco/nlmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mashvco/kernels.hpp"
#include "mashvco/linalg.hpp"
#include "nlohmann/json.hpp"

namespace mashvco {
namespace {

// Basis columns for the inner polynomial: [1, x, .., x^ni, dx^1, .., dx^nj]
// where dx^j[n] = x^j[n] - x^j[n-1] (zero at n=0).
std::vector<std::vector<double>> inner_basis(const std::vector<double>& x,
                                             const NlOrders& o) {
    const std::size_t n = x.size();
    std::vector<std::vector<double>> cols(o.ni + 1 + o.nj,
                                          std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        double p = 1.0;
        for (unsigned i = 0; i <= o.ni; ++i) {
            cols[i][k] = p;
            p *= x[k];
        }
        double pj = 1.0, qj = 1.0;
        for (unsigned j = 1; j <= o.nj; ++j) {
            pj *= x[k];
            qj *= (k == 0) ? x[k] : x[k - 1];
            cols[o.ni + j][k] = (k == 0) ? 0.0 : pj - qj;
        }
    }
    return cols;
}

std::vector<double> inner_eval(const std::vector<std::vector<double>>& cols,
                               const std::vector<double>& theta) {
    const std::size_t n = cols.front().size();
    std::vector<double> p(n, 0.0);
    for (std::size_t m = 0; m < cols.size(); ++m)
        kern::active().axpy(theta[m], cols[m].data(), p.data(), n);
    return p;
}

std::vector<double> outer_eval(const std::vector<double>& p,
                               const std::vector<double>& c) {
    std::vector<double> y(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        double pw = 1.0, acc = 0.0;
        for (double ck : c) {
            pw *= p[k];
            acc += ck * pw;
        }
        y[k] = acc;
    }
    return y;
}

double rms_residual(const std::vector<double>& y,
                    const std::vector<double>& target) {
    double acc = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
        const double d = y[k] - target[k];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

std::string dtos(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double stod_strict(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error("nlmodel json: bad number '" + s + "'");
    return v;
}

} // namespace

NlModel fit_nl(const SampleStream& d_cl, const SampleStream& dist,
               NlOrders orders) {
    if (orders.ni < 1 || orders.nj < 1 || orders.nk < 1)
        throw std::invalid_argument("fit_nl: polynomial orders must be >= 1");
    const std::size_t n = d_cl.samples.size();
    if (n != dist.samples.size())
        throw std::invalid_argument("fit_nl: stream lengths differ");
    if (n < orders.ni + orders.nj + orders.nk + 2)
        throw std::invalid_argument("fit_nl: too few samples for the orders");

    NlModel m;
    m.orders = orders;

    // Normalize the capture so its extremes land at +-0.999: this is both
    // the fit domain and the fixed-point domain of the LUT realization.
    const auto [lo_it, hi_it] =
        std::minmax_element(d_cl.samples.begin(), d_cl.samples.end());
    const double lo = *lo_it, hi = *hi_it;
    m.norm_offset = 0.5 * (hi + lo);
    m.norm_scale = (hi > lo) ? (hi - lo) / (2.0 * 0.999) : 1.0;

    std::vector<double> x(n), target(n);
    for (std::size_t k = 0; k < n; ++k) {
        x[k] = m.normalize(d_cl.samples[k]);
        target[k] = dist.samples[k] / m.norm_scale;
    }

    const auto cols = inner_basis(x, orders);
    const std::size_t nm = cols.size();

    std::vector<double> theta(nm, 0.0);
    std::vector<double> c(orders.nk, 0.0);
    c[0] = 1.0;

    std::vector<double> p(n, 0.0);
    double res_prev = rms_residual(outer_eval(p, c), target);
    const double res0 = std::max(res_prev, 1e-300);

    auto& ops = kern::active();
    unsigned iter = 0;
    bool converged = false;
    for (iter = 1; iter <= 50; ++iter) {
        // Inner step: Gauss-Newton linearization of sum_k c_k p^k around the
        // current p. The linearized model is w[n]*(phi[n].theta) - off[n]
        // with w = sum_k k c_k p^(k-1) and off absorbing the higher terms.
        // For c = (1, 0, ..) this is exact, so the first pass is a plain
        // linear least squares.
        std::vector<double> w(n), rhs(n);
        for (std::size_t k = 0; k < n; ++k) {
            double pw = 1.0, deriv = 0.0, val = 0.0;
            for (std::size_t kk = 0; kk < c.size(); ++kk) {
                deriv += static_cast<double>(kk + 1) * c[kk] * pw;
                pw *= p[k];
                val += c[kk] * pw;
            }
            w[k] = deriv;
            rhs[k] = target[k] - (val - deriv * p[k]);
        }
        std::vector<std::vector<double>> wcols(nm, std::vector<double>(n));
        for (std::size_t mcol = 0; mcol < nm; ++mcol)
            for (std::size_t k = 0; k < n; ++k)
                wcols[mcol][k] = w[k] * cols[mcol][k];
        std::vector<double> theta_new;
        if (!lin::lstsq(wcols, rhs, theta_new))
            throw std::runtime_error(
                "fit_nl: rank-deficient inner fit (insufficient code coverage)");

        // Backtrack if the full step overshoots the true (non-linearized)
        // residual; halving a few times is enough in practice.
        double step = 1.0;
        std::vector<double> theta_try(nm), p_try;
        double res_try = 0.0;
        for (int bt = 0; bt < 12; ++bt) {
            for (std::size_t mcol = 0; mcol < nm; ++mcol)
                theta_try[mcol] =
                    theta[mcol] + step * (theta_new[mcol] - theta[mcol]);
            p_try = inner_eval(cols, theta_try);
            res_try = rms_residual(outer_eval(p_try, c), target);
            if (res_try <= res_prev || iter == 1) break;
            step *= 0.5;
        }
        theta = theta_try;
        p = std::move(p_try);

        // Outer step: linear in c for fixed p. Skip when p is degenerate
        // (e.g. dist was identically zero and the inner fit collapsed).
        if (orders.nk >= 2) {
            const double pnorm = std::sqrt(
                ops.sum_squares(p.data(), n) / static_cast<double>(n));
            if (pnorm > 1e-12) {
                std::vector<std::vector<double>> pc(
                    orders.nk, std::vector<double>(n));
                for (std::size_t k = 0; k < n; ++k) {
                    double pw = 1.0;
                    for (unsigned kk = 0; kk < orders.nk; ++kk) {
                        pw *= p[k];
                        pc[kk][k] = pw;
                    }
                }
                std::vector<double> c_new;
                if (lin::lstsq(pc, target, c_new)) {
                    const double res_c =
                        rms_residual(outer_eval(p, c_new), target);
                    if (res_c <= res_try) {
                        c = std::move(c_new);
                        res_try = res_c;
                    }
                }
            }
        }

        const double res = rms_residual(outer_eval(p, c), target);
        if (std::abs(res_prev - res) < 1e-9 * std::max(res0, res)) {
            res_prev = res;
            converged = true;
            break;
        }
        res_prev = res;
        if (orders.nk == 1) { converged = true; break; } // single linear solve
    }
    if (!converged)
        throw std::runtime_error("fit_nl: no convergence after 50 alternations");

    m.a.assign(theta.begin(), theta.begin() + orders.ni + 1);
    m.b.assign(theta.begin() + orders.ni + 1, theta.end());
    m.c = c;
    m.fit_rms = res_prev;
    m.iterations = iter;
    return m;
}

SampleStream eval_nl(const NlModel& m, const SampleStream& d_cl) {
    if (d_cl.samples.size() < 2)
        throw std::invalid_argument("eval_nl: need at least 2 samples");
    if (m.a.size() != m.orders.ni + 1 || m.b.size() != m.orders.nj ||
        m.c.size() != m.orders.nk)
        throw std::invalid_argument("eval_nl: coefficient sizes disagree with orders");

    const std::size_t n = d_cl.samples.size();
    std::vector<double> x(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = m.normalize(d_cl.samples[k]);

    SampleStream out;
    out.rate = d_cl.rate;
    out.label = d_cl.label.empty() ? "nl" : d_cl.label + ".nl";
    out.samples.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        double inner = 0.0, pw = 1.0;
        for (unsigned i = 0; i <= m.orders.ni; ++i) {
            inner += m.a[i] * pw;
            pw *= x[k];
        }
        double pj = 1.0, qj = 1.0;
        const double xp = (k == 0) ? x[k] : x[k - 1];
        for (unsigned j = 1; j <= m.orders.nj; ++j) {
            pj *= x[k];
            qj *= xp;
            if (k > 0) inner += m.b[j - 1] * (pj - qj);
        }
        double acc = 0.0, ipw = 1.0;
        for (unsigned kk = 0; kk < m.orders.nk; ++kk) {
            ipw *= inner;
            acc += m.c[kk] * ipw;
        }
        out.samples[k] = acc * m.norm_scale;
    }
    return out;
}

std::string nlmodel_to_json(const NlModel& m) {
    nlohmann::json j;
    j["schema"] = 1;
    j["kind"] = "nlmodel";
    j["orders"] = {{"ni", m.orders.ni}, {"nj", m.orders.nj}, {"nk", m.orders.nk}};
    auto strs = [](const std::vector<double>& v) {
        std::vector<std::string> s;
        s.reserve(v.size());
        for (double d : v) s.push_back(dtos(d));
        return s;
    };
    j["a"] = strs(m.a);
    j["b"] = strs(m.b);
    j["c"] = strs(m.c);
    j["norm_offset"] = dtos(m.norm_offset);
    j["norm_scale"] = dtos(m.norm_scale);
    j["fit_rms"] = dtos(m.fit_rms);
    j["iterations"] = m.iterations;
    return j.dump(2);
}

NlModel nlmodel_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("schema") || j["schema"].get<int>() != 1)
        throw std::runtime_error("nlmodel json: unsupported schema");
    if (!j.contains("kind") || j["kind"].get<std::string>() != "nlmodel")
        throw std::runtime_error("nlmodel json: wrong document kind");
    NlModel m;
    m.orders.ni = j.at("orders").at("ni").get<unsigned>();
    m.orders.nj = j.at("orders").at("nj").get<unsigned>();
    m.orders.nk = j.at("orders").at("nk").get<unsigned>();
    auto nums = [](const nlohmann::json& arr) {
        std::vector<double> v;
        v.reserve(arr.size());
        for (const auto& e : arr) v.push_back(stod_strict(e.get<std::string>()));
        return v;
    };
    m.a = nums(j.at("a"));
    m.b = nums(j.at("b"));
    m.c = nums(j.at("c"));
    if (m.a.size() != m.orders.ni + 1 || m.b.size() != m.orders.nj ||
        m.c.size() != m.orders.nk)
        throw std::runtime_error("nlmodel json: coefficient counts disagree with orders");
    m.norm_offset = stod_strict(j.at("norm_offset").get<std::string>());
    m.norm_scale = stod_strict(j.at("norm_scale").get<std::string>());
    m.fit_rms = stod_strict(j.at("fit_rms").get<std::string>());
    m.iterations = j.value("iterations", 0u);
    return m;
}

void write_nlmodel_json(const std::string& path, const NlModel& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << nlmodel_to_json(m) << '\n';
}

NlModel read_nlmodel_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return nlmodel_from_json(ss.str());
}

} // namespace mashvco
