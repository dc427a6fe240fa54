#pragma once
#include <cstddef>
#include <vector>

namespace mashvco::lin {

// Solves a*x = b in place for small dense systems (a is row-major n x n,
// overwritten; b becomes x). Gaussian elimination with partial pivoting.
// Returns false when a pivot collapses below tolerance.
bool solve(std::vector<double>& a, std::vector<double>& b, std::size_t n);

// Least squares via normal equations: cols holds n_cols column vectors of
// common length; fills coef (size n_cols). Returns false on rank loss.
bool lstsq(const std::vector<std::vector<double>>& cols,
           const std::vector<double>& rhs, std::vector<double>& coef);

} // namespace mashvco::lin
