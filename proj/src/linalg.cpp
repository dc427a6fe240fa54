#include "mashvco/linalg.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "mashvco/kernels.hpp"

namespace mashvco::lin {

bool solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    if (a.size() != n * n || b.size() != n)
        throw std::invalid_argument("lin::solve: shape mismatch");
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::fabs(a[col * n + col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            double v = std::fabs(a[r * n + col]);
            if (v > best) { best = v; piv = r; }
        }
        if (best < 1e-300) return false;
        if (piv != col) {
            for (std::size_t c = col; c < n; ++c)
                std::swap(a[col * n + c], a[piv * n + c]);
            std::swap(b[col], b[piv]);
        }
        const double inv = 1.0 / a[col * n + col];
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] * inv;
            if (f == 0.0) continue;
            a[r * n + col] = 0.0;
            for (std::size_t c = col + 1; c < n; ++c)
                a[r * n + c] -= f * a[col * n + c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * b[c];
        b[ri] = s / a[ri * n + ri];
    }
    return true;
}

bool lstsq(const std::vector<std::vector<double>>& cols,
           const std::vector<double>& rhs, std::vector<double>& coef) {
    const std::size_t nc = cols.size();
    if (nc == 0) throw std::invalid_argument("lin::lstsq: no columns");
    const std::size_t m = rhs.size();
    for (const auto& c : cols)
        if (c.size() != m)
            throw std::invalid_argument("lin::lstsq: column length mismatch");
    const auto& k = kern::active();
    std::vector<double> g(nc * nc), v(nc);
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = i; j < nc; ++j) {
            const double d = k.dot(cols[i].data(), cols[j].data(), m);
            g[i * nc + j] = d;
            g[j * nc + i] = d;
        }
        v[i] = k.dot(cols[i].data(), rhs.data(), m);
    }
    if (!solve(g, v, nc)) return false;
    coef = std::move(v);
    return true;
}

} // namespace mashvco::lin
